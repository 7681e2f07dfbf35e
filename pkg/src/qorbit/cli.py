"""Scenario-driven command line: verify -> design -> simulate -> replay -> artifacts.

Config files are JSON; complex matrix entries are [re, im] pairs in row-major
nested lists (bare numbers are accepted on input and read as real). Outputs
are trajectory.csv, certificate.json and summary.json in the output
directory. Exit codes name the failure class: 0 ok, 2 config, 3 assumptions,
4 design, 5 integrator, 6 io.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .control import VirtualObservable, make_observable
from .design import (
    DesignError,
    DesignParams,
    ConvergenceCertificate,
    build_certificate,
    design_diagonal_p,
    design_superposition_p,
)
from .hermat import KernelError, eig_hermitian
from .model import (
    Frame,
    SystemModel,
    make_frame,
    to_bloch,
    validate_density,
)
from .simulate import (
    IntegratorError,
    SimConfig,
    Trajectory,
    conservation_report,
    propagate_closed_loop,
    replay_open_loop,
)
from .verify import check_assumptions, unitary_equivalent

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTIONS = 3
EXIT_DESIGN = 4
EXIT_INTEGRATOR = 5
EXIT_IO = 6

V_THRESHOLD = 1e-4  # sweep time-to-reach target
ORBIT_ENTRY_TOL = 5e-3


class ConfigError(Exception):
    pass


# ----------------------------------------------------------------------------
# config parsing
# ----------------------------------------------------------------------------

def _decode_complex(entry) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    raise ConfigError(f"bad complex entry {entry!r}; want a number or [re, im]")


def decode_matrix(rows) -> np.ndarray:
    try:
        return np.array([[_decode_complex(x) for x in row] for row in rows], dtype=complex)
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"bad matrix: {exc}") from exc


def decode_vector(entries) -> np.ndarray:
    return np.array([_decode_complex(x) for x in entries], dtype=complex)


def encode_matrix(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def encode_vector(v: np.ndarray) -> list:
    return [[float(x.real), float(x.imag)] for x in np.asarray(v, dtype=complex)]


@dataclass(frozen=True)
class Scenario:
    name: str
    model: SystemModel
    sim: SimConfig
    p_matrix: np.ndarray | None
    p_design: DesignParams | None
    outputs: str
    spectral_tol: float

    def to_config(self) -> dict:
        cfg = {
            "name": self.name,
            "model": {
                "h0": encode_matrix(self.model.h0),
                "controls": [encode_matrix(h) for h in self.model.controls],
                "gains": list(self.model.gains),
                "rho0": encode_matrix(self.model.rho0.mat),
                "rho_f0": encode_matrix(self.model.rho_f0.mat),
            },
            "sim": {
                "dt": self.sim.dt,
                "t_final": self.sim.t_final,
                "sample_stride": self.sim.sample_stride,
                "frame": self.sim.frame,
                "hermitize": self.sim.hermitize,
            },
            "outputs": self.outputs,
            "spectral_tol": self.spectral_tol,
        }
        if self.p_matrix is not None:
            cfg["p_matrix"] = encode_matrix(self.p_matrix)
        if self.p_design is not None:
            design: dict = {"p1": self.p_design.p1, "weights": list(self.p_design.weights)}
            if self.p_design.completion is not None:
                design["completion"] = [encode_vector(v) for v in self.p_design.completion]
            cfg["p_design"] = design
        return cfg


def parse_scenario(cfg: dict) -> Scenario:
    try:
        name = str(cfg["name"])
        mdl = cfg["model"]
        rho0 = validate_density(decode_matrix(mdl["rho0"]))
        rho_f0 = validate_density(decode_matrix(mdl["rho_f0"]))
        model = SystemModel(
            h0=decode_matrix(mdl["h0"]),
            controls=tuple(decode_matrix(h) for h in mdl["controls"]),
            gains=tuple(float(k) for k in mdl["gains"]),
            rho0=rho0,
            rho_f0=rho_f0,
        )
        sim_cfg = cfg["sim"]
        sim = SimConfig(
            t_final=float(sim_cfg["t_final"]),
            dt=float(sim_cfg.get("dt", 1e-3)),
            sample_stride=int(sim_cfg.get("sample_stride", 1)),
            frame=str(sim_cfg.get("frame", "interaction")),
            hermitize=bool(sim_cfg.get("hermitize", True)),
        )
    except (KeyError, ValueError, TypeError, KernelError) as exc:
        raise ConfigError(f"bad scenario config: {exc}") from exc

    has_matrix = "p_matrix" in cfg
    has_design = "p_design" in cfg
    if has_matrix == has_design:
        raise ConfigError("config must have exactly one of p_matrix / p_design")
    p_matrix = decode_matrix(cfg["p_matrix"]) if has_matrix else None
    p_design = None
    if has_design:
        d = cfg["p_design"]
        completion = None
        if "completion" in d:
            completion = tuple(decode_vector(v) for v in d["completion"])
        p_design = DesignParams(
            p1=float(d.get("p1", 0.1)),
            weights=tuple(float(g) for g in d.get("weights", ())),
            completion=completion,
        )
    return Scenario(
        name=name,
        model=model,
        sim=sim,
        p_matrix=p_matrix,
        p_design=p_design,
        outputs=str(cfg.get("outputs", f"out_{name}")),
        spectral_tol=float(cfg.get("spectral_tol", 1e-8)),
    )


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_scenario(cfg)


def scenario_path(name: str) -> Path:
    """Path of a bundled scenario file, e.g. scenario_path('5_1')."""
    here = Path(__file__).parent / "scenarios" / f"scenario_{name}.json"
    if not here.exists():
        raise ConfigError(f"no bundled scenario {name!r}")
    return here


# ----------------------------------------------------------------------------
# pipeline pieces
# ----------------------------------------------------------------------------

def _design_observable(scn: Scenario, frame: Frame) -> VirtualObservable:
    """Route the designer by target purity: pure -> superposition, mixed -> diagonal."""
    model = scn.model
    if scn.p_matrix is not None:
        return make_observable(scn.p_matrix, provenance="given")
    params = scn.p_design
    target_eig = eig_hermitian(model.rho_f0.mat)
    pure = target_eig.values[0] > 1.0 - 1e-6
    if pure:
        if scn.sim.frame != "interaction":
            raise ConfigError(
                "a pure target is designed in the interaction frame; set sim.frame accordingly"
            )
        psi_f = target_eig.basis[:, 0]
        return design_superposition_p(psi_f, model.rho0, params)
    if scn.sim.frame != "diagonalized":
        raise ConfigError(
            "a mixed target needs the diagonalizing frame; set sim.frame accordingly"
        )
    d_f = frame.target_state()
    rho0_frame = frame.initial_state()
    ok, u = unitary_equivalent(rho0_frame, d_f, tol=scn.spectral_tol)
    if not ok or u is None:
        raise DesignError("initial state is not unitarily equivalent to the target")
    return design_diagonal_p(d_f, rho0_frame, u, equiv_tol=scn.spectral_tol)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory_csv(path, traj: Trajectory) -> None:
    n = traj.samples[0].rho_lab.dim
    n_fields = len(traj.samples[0].fields.values)
    cols = ["t"] + [f"f_{m + 1}" for m in range(n_fields)] + ["V", "v", "purity"]
    if n == 2:
        cols += ["bx", "by", "bz", "tbx", "tby", "tbz"]
    else:
        for prefix in ("re", "im", "tre", "tim"):
            for i in range(1, n + 1):
                for j in range(i, n + 1):
                    if prefix.endswith("im") and i == j:
                        continue
                    cols.append(f"{prefix}_{i}_{j}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for s in traj.samples:
            row = [_fmt(s.t)] + [_fmt(f) for f in s.fields.values]
            row += [_fmt(s.lyapunov), _fmt(s.perf_index), _fmt(s.purity)]
            if n == 2:
                b = to_bloch(s.rho_lab)
                tb = to_bloch(s.rho_target_lab)
                row += [_fmt(b.x), _fmt(b.y), _fmt(b.z), _fmt(tb.x), _fmt(tb.y), _fmt(tb.z)]
            else:
                for mat in (s.rho_lab.mat, s.rho_target_lab.mat):
                    for i in range(n):
                        for j in range(i, n):
                            row.append(_fmt(float(mat[i, j].real)))
                    for i in range(n):
                        for j in range(i + 1, n):
                            row.append(_fmt(float(mat[i, j].imag)))
            fh.write(",".join(row) + "\n")


def certificate_to_dict(cert: ConvergenceCertificate, p: VirtualObservable) -> dict:
    rep = cert.assumptions
    return {
        "passed": cert.passed,
        "chain": {
            "v_target": cert.v_target,
            "v_initial": cert.v_initial,
            "v_others": [{"label": lbl, "value": val} for lbl, val in cert.v_others],
            "ok": cert.chain.chain_ok,
            "margin": cert.chain.margin,
        },
        "lemma2_ok": cert.lemma2_ok,
        "rank": {"ok": cert.rank_ok, "value": cert.rank, "required": p.dim**2 - p.dim},
        "limit_residuals": list(cert.limit_residuals),
        "assumptions": {
            "strongly_regular": rep.strongly_regular,
            "fully_connected": rep.fully_connected,
            "unitarily_equivalent": rep.unitarily_equivalent,
            "regularity_witness": rep.regularity_witness,
            "connectivity_witness": rep.connectivity_witness,
            "spectra": rep.spectra,
        },
        "p_matrix": encode_matrix(p.mat),
        "p_eigenvalues": [float(x) for x in p.eig.values],
        "provenance": p.provenance,
    }


def _orbit_entry_time(traj: Trajectory, target_radius: float) -> float | None:
    for s in traj.samples:
        if s.rho_lab.dim != 2:
            return None
        if abs(to_bloch(s.rho_lab).radius - target_radius) < ORBIT_ENTRY_TOL:
            return float(s.t)
    return None


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _print_assumption_failure(report) -> None:
    print("assumption check failed:", file=sys.stderr)
    if not report.strongly_regular:
        print(f"  H0 is not strongly regular; witness {report.regularity_witness}", file=sys.stderr)
    if not report.fully_connected:
        print(f"  controls are not fully connected; partition {report.connectivity_witness}", file=sys.stderr)
    if not report.unitarily_equivalent:
        print(f"  states are not unitarily equivalent; spectra {report.spectra}", file=sys.stderr)


def run_scenario(path, out_dir=None, force: bool = False) -> int:
    """verify -> (design) -> closed loop -> replay -> trajectory.csv + json artifacts."""
    try:
        scn = load_scenario(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = check_assumptions(scn.model, scn.spectral_tol)
    if not report.all_hold:
        if not force:
            _print_assumption_failure(report)
            return EXIT_ASSUMPTIONS
        print("WARNING: assumptions violated, continuing because of --force", file=sys.stderr)
    try:
        frame = make_frame(scn.model, scn.sim.frame)
        p = _design_observable(scn, frame)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DesignError, KernelError) as exc:
        print(f"design failure: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    cert = build_certificate(scn.model, frame, p, tol=scn.spectral_tol)
    try:
        closed = propagate_closed_loop(scn.model, frame, p, scn.sim)
        replay = replay_open_loop(scn.model, closed, scn.sim, frame=frame, p=p)
    except IntegratorError as exc:
        print(f"integrator failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    out = Path(out_dir) if out_dir else Path(scn.outputs)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(out / "trajectory.csv", closed)
        _write_json(out / "certificate.json", certificate_to_dict(cert, p))
        cons = conservation_report(closed)
        target_radius = _target_bloch_radius(scn.model)
        summary = {
            "name": scn.name,
            "frame": scn.sim.frame,
            "final_v": closed.samples[-1].perf_index,
            "final_V": closed.samples[-1].lyapunov,
            "max_trace_drift": cons.max_trace_drift,
            "max_purity_drift": cons.max_purity_drift,
            "orbit_entry_time": (
                _orbit_entry_time(closed, target_radius) if target_radius is not None else None
            ),
            "replay_final_v": replay.samples[-1].perf_index,
            "replay_v_gap": abs(replay.samples[-1].perf_index - closed.samples[-1].perf_index),
            "certificate_passed": cert.passed,
        }
        _write_json(out / "summary.json", summary)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"{scn.name}: final v = {summary['final_v']:.3e}, final V = {summary['final_V']:.6f}, "
        f"certificate {'passed' if cert.passed else 'FAILED'} -> {out}"
    )
    return EXIT_OK


def _target_bloch_radius(model: SystemModel) -> float | None:
    if model.dim != 2:
        return None
    vals = eig_hermitian(model.rho_f0.mat).values
    return float(vals[0] - vals[1])


def verify_scenario(path) -> int:
    try:
        scn = load_scenario(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = check_assumptions(scn.model, scn.spectral_tol)
    print(f"strongly_regular:      {report.strongly_regular}")
    print(f"fully_connected:       {report.fully_connected}")
    print(f"unitarily_equivalent:  {report.unitarily_equivalent}")
    if report.all_hold:
        return EXIT_OK
    _print_assumption_failure(report)
    return EXIT_ASSUMPTIONS


def design_scenario(path, out_dir=None) -> int:
    try:
        scn = load_scenario(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = check_assumptions(scn.model, scn.spectral_tol)
    if not report.all_hold:
        _print_assumption_failure(report)
        return EXIT_ASSUMPTIONS
    try:
        frame = make_frame(scn.model, scn.sim.frame)
        p = _design_observable(scn, frame)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DesignError, KernelError) as exc:
        print(f"design failure: {exc}", file=sys.stderr)
        return EXIT_DESIGN
    cert = build_certificate(scn.model, frame, p, tol=scn.spectral_tol)
    out = Path(out_dir) if out_dir else Path(scn.outputs)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "certificate.json", certificate_to_dict(cert, p))
    print(
        f"{scn.name}: designed P with eigenvalues "
        f"{[round(float(x), 6) for x in p.eig.values]}; certificate "
        f"{'passed' if cert.passed else 'FAILED'} -> {out / 'certificate.json'}"
    )
    return EXIT_OK if cert.passed else EXIT_DESIGN


# ----------------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------------

def _apply_sweep_value(scn: Scenario, param: str, value: float) -> Scenario:
    from dataclasses import replace

    if param == "dt":
        sim = SimConfig(
            t_final=scn.sim.t_final,
            dt=float(value),
            sample_stride=scn.sim.sample_stride,
            frame=scn.sim.frame,
            hermitize=scn.sim.hermitize,
        )
        return replace(scn, sim=sim)
    if param == "k":
        model = SystemModel(
            h0=scn.model.h0,
            controls=scn.model.controls,
            gains=tuple(float(value) for _ in scn.model.gains),
            rho0=scn.model.rho0,
            rho_f0=scn.model.rho_f0,
        )
        return replace(scn, model=model)
    if param.startswith("g") and param[1:].isdigit():
        if scn.p_design is None:
            raise ConfigError(f"sweep over {param} needs a p_design scenario")
        idx = int(param[1:]) - 2
        weights = list(scn.p_design.weights)
        if not 0 <= idx < len(weights):
            raise ConfigError(f"{param} is out of range for {len(weights)} weights")
        weights[idx] = float(value)
        params = DesignParams(
            p1=scn.p_design.p1, weights=tuple(weights), completion=scn.p_design.completion
        )
        return replace(scn, p_design=params)
    raise ConfigError(f"unknown sweep parameter {param!r} (want g<k>, k or dt)")


def _sweep_row(scn: Scenario, param: str, value: float, force: bool) -> dict:
    row = {"value": value, "time_to_threshold": None, "final_v": None, "status": "ok"}
    try:
        varied = _apply_sweep_value(scn, param, value)
        report = check_assumptions(varied.model, varied.spectral_tol)
        if not report.all_hold and not force:
            row["status"] = "failed: assumptions"
            return row
        frame = make_frame(varied.model, varied.sim.frame)
        p = _design_observable(varied, frame)
        traj = propagate_closed_loop(varied.model, frame, p, varied.sim)
        perf = traj.perf
        times = traj.times
        hits = np.nonzero(perf <= V_THRESHOLD)[0]
        row["time_to_threshold"] = float(times[hits[0]]) if len(hits) else None
        row["final_v"] = float(perf[-1])
    except (ConfigError, DesignError, IntegratorError, KernelError) as exc:
        row["status"] = f"failed: {exc}"
    return row


def sweep_rows(scn: Scenario, param: str, values, force: bool = False) -> list[dict]:
    """One closed-loop run per value; rows keep input order even when threaded."""
    values = [float(v) for v in values]
    width = max(1, int(os.environ.get("QORBIT_THREADS", "1")))
    if width > 1:
        with ThreadPoolExecutor(max_workers=width) as pool:
            return list(pool.map(lambda v: _sweep_row(scn, param, v, force), values))
    return [_sweep_row(scn, param, v, force) for v in values]


def sweep_scenario(path, param: str, values, out_dir=None, force: bool = False) -> int:
    try:
        scn = load_scenario(path)
        rows = sweep_rows(scn, param, values, force=force)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    header = f"{param:>10}  {'t(v<=1e-4)':>12}  {'final_v':>12}  status"
    print(header)
    for row in rows:
        t_hit = "-" if row["time_to_threshold"] is None else f"{row['time_to_threshold']:.4g}"
        fv = "-" if row["final_v"] is None else f"{row['final_v']:.3e}"
        print(f"{row['value']:>10.6g}  {t_hit:>12}  {fv:>12}  {row['status']}")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "sweep.json", {"param": param, "rows": rows})
    return EXIT_OK


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qorbit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="verify, design, simulate and replay a scenario")
    run_p.add_argument("config")
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--force", action="store_true", help="simulate even if assumptions fail")

    design_p = sub.add_parser("design", help="design P and emit the certificate only")
    design_p.add_argument("config")
    design_p.add_argument("--out", default=None)

    verify_p = sub.add_parser("verify", help="check the standing assumptions")
    verify_p.add_argument("config")

    sweep_p = sub.add_parser("sweep", help="rerun a scenario over a parameter list")
    sweep_p.add_argument("config")
    sweep_p.add_argument("--param", required=True)
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--out", default=None)
    sweep_p.add_argument("--force", action="store_true")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run_scenario(args.config, out_dir=args.out, force=args.force)
    if args.command == "design":
        return design_scenario(args.config, out_dir=args.out)
    if args.command == "verify":
        return verify_scenario(args.config)
    if args.command == "sweep":
        return sweep_scenario(
            args.config, args.param, args.values.split(","), out_dir=args.out, force=args.force
        )
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
