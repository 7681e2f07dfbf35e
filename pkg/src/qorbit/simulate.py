"""Fixed-step RK4 integration of the closed loop, open-loop replay, diagnostics.

All integrators work in the H0 eigenbasis, where exp(+-i H0 t) acts as an
elementwise phase matrix E(t)_jk = exp(i (lam_j - lam_k) t); the frame state,
the lab state and the exact free target are recovered from the same
integration variable by phases and a constant conjugation. Feedback fields
are recomputed at every RK4 stage from the stage state and stage time; the
per-step record keeps only the step-start value, which is what open-loop
replay consumes (zero-order hold).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import IMAG_RESIDUE_TOL, ControlError, FieldSample, VirtualObservable
from .hermat import KernelError, eig_hermitian, frobenius_distance_sq
from .model import DensityMatrix, Frame, SystemModel, _mat

TRACE_ABORT = 1e-6
NEGATIVE_EIG_ABORT = -1e-6


class IntegratorError(KernelError):
    pass


@dataclass(frozen=True)
class SimConfig:
    t_final: float
    dt: float = 1e-3
    sample_stride: int = 1
    frame: str = "interaction"
    hermitize: bool = True

    def __post_init__(self):
        if self.dt <= 0 or self.t_final <= 0 or self.dt > self.t_final:
            raise IntegratorError("need 0 < dt <= t_final")
        if int(self.sample_stride) < 1:
            raise IntegratorError("sample_stride must be >= 1")
        if self.frame not in ("interaction", "diagonalized"):
            raise IntegratorError(f"unknown simulation frame {self.frame!r}")

    @property
    def n_steps(self) -> int:
        steps = int(round(self.t_final / self.dt))
        if abs(steps * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise IntegratorError("t_final must be an integer number of steps")
        return steps


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    rho_frame: DensityMatrix
    rho_lab: DensityMatrix
    rho_target_lab: DensityMatrix
    fields: FieldSample
    lyapunov: float
    perf_index: float
    purity: float


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[TrajectorySample, ...]
    field_record: np.ndarray  # step-start field values, one row per step
    dt: float
    frame_kind: str

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def perf(self) -> np.ndarray:
        return np.array([s.perf_index for s in self.samples])

    @property
    def lyapunov(self) -> np.ndarray:
        return np.array([s.lyapunov for s in self.samples])

    def field_samples(self) -> list[FieldSample]:
        """Step-start fields as a replayable record."""
        return [
            FieldSample(t=j * self.dt, values=row)
            for j, row in enumerate(self.field_record)
        ]


class _EigenKernel:
    """Model, observable and states moved once into the H0 eigenbasis."""

    def __init__(self, model: SystemModel, frame: Frame, p: VirtualObservable):
        self.n = model.dim
        self.b = frame.h0_eig.basis
        self.bc = self.b.conj().T
        self.lam = frame.h0_eig.values
        self.delta = self.lam[:, None] - self.lam[None, :]
        self.hms = [self.bc @ h @ self.b for h in model.controls]
        self.gains = np.asarray(model.gains, dtype=float)
        w0 = frame.w0
        self.q = self.bc @ (w0.conj().T @ p.mat @ w0) @ self.b
        self.sigma0 = self.bc @ model.rho0.mat @ self.b
        self.sigma_f = self.bc @ model.rho_f0.mat @ self.b
        self.wb = w0 @ self.b  # frame state = wb sigma wb^dagger
        self.frame_kind = frame.kind

    def phases(self, t: float) -> np.ndarray:
        return np.exp(1j * self.delta * t)

    def fields_and_rhs(self, sigma: np.ndarray, e: np.ndarray):
        """Feedback values and -i[sum_m f_m H_m(t), sigma] at one stage."""
        c = sigma @ self.q - self.q @ sigma
        ct = c.T
        fvals = np.empty(len(self.hms))
        total = None
        for m, hm in enumerate(self.hms):
            a = hm * e
            tval = complex(np.sum(a * ct))
            if abs(tval.real) > IMAG_RESIDUE_TOL * max(1.0, abs(tval.imag)):
                raise ControlError(f"imaginary residue {tval.real:.3e} in field trace")
            # tr(i H_m(t) [rho, P]) = -Im tr(H_m(t) [rho, P]); the dissipative
            # feedback is f_m = +k_m times that quantity
            fm = -self.gains[m] * tval.imag
            fvals[m] = fm
            total = fm * a if total is None else total + fm * a
        rhs = -1j * (total @ sigma - sigma @ total)
        return fvals, rhs

    def sample(self, sigma: np.ndarray, t: float, fvals: np.ndarray) -> TrajectorySample:
        ebar = np.exp(-1j * self.delta * t)
        sigma_lab = sigma * ebar
        rho_lab = self.b @ sigma_lab @ self.bc
        rho_target_lab = self.b @ (self.sigma_f * ebar) @ self.bc
        rho_frame = self.wb @ sigma @ self.wb.conj().T
        diff = sigma - self.sigma_f
        perf = float(np.sum(diff.real**2 + diff.imag**2))
        lyap = float(np.sum(self.q * sigma.T).real)
        purity = float(np.sum(sigma.real**2 + sigma.imag**2))
        return TrajectorySample(
            t=t,
            rho_frame=DensityMatrix(rho_frame),
            rho_lab=DensityMatrix(rho_lab),
            rho_target_lab=DensityMatrix(rho_target_lab),
            fields=FieldSample(t=t, values=fvals),
            lyapunov=lyap,
            perf_index=perf,
            purity=purity,
        )


def _hermitize(sigma: np.ndarray) -> np.ndarray:
    return (sigma + sigma.conj().T) / 2.0


def _min_eigenvalue(sigma: np.ndarray) -> float:
    if sigma.shape[0] == 2:
        mid = (sigma[0, 0].real + sigma[1, 1].real) / 2.0
        rad = np.sqrt(
            ((sigma[0, 0].real - sigma[1, 1].real) / 2.0) ** 2 + abs(sigma[0, 1]) ** 2
        )
        return float(mid - rad)
    return float(eig_hermitian(_hermitize(sigma)).values[-1])


def _guard_step(sigma: np.ndarray, t: float) -> None:
    tr = complex(np.trace(sigma))
    if not np.isfinite(tr.real) or abs(tr - 1.0) > TRACE_ABORT:
        raise IntegratorError(f"trace drifted to {tr:.9g} at t = {t:.6g}; aborting")


def _guard_sample(sigma: np.ndarray, t: float) -> None:
    lo = _min_eigenvalue(sigma)
    if lo < NEGATIVE_EIG_ABORT:
        raise IntegratorError(f"eigenvalue {lo:.3e} went negative at t = {t:.6g}; aborting")


def propagate_closed_loop(
    model: SystemModel, frame: Frame, p: VirtualObservable, cfg: SimConfig
) -> Trajectory:
    """Integrate the frame dynamics d sigma/dt = -i [sum f_m H_m(t), sigma].

    The initial state is rho0 moved into the chosen frame; the recorded
    lab state inverts the frame change exactly at each sample time.
    """
    if frame.kind != cfg.frame:
        raise IntegratorError(f"frame object is {frame.kind!r} but config wants {cfg.frame!r}")
    kernel = _EigenKernel(model, frame, p)
    n_steps = cfg.n_steps
    dt = cfg.dt
    stride = int(cfg.sample_stride)
    eig_check_every = max(1, (n_steps // stride) // 32) if kernel.n > 2 else 1

    sigma = kernel.sigma0.copy()
    samples: list[TrajectorySample] = []
    field_record = np.empty((n_steps, len(kernel.hms)))
    e_start = kernel.phases(0.0)
    sample_count = 0
    for j in range(n_steps):
        t = j * dt
        e_mid = kernel.phases(t + dt / 2.0)
        e_end = kernel.phases(t + dt)
        f1, k1 = kernel.fields_and_rhs(sigma, e_start)
        _, k2 = kernel.fields_and_rhs(sigma + (dt / 2.0) * k1, e_mid)
        _, k3 = kernel.fields_and_rhs(sigma + (dt / 2.0) * k2, e_mid)
        _, k4 = kernel.fields_and_rhs(sigma + dt * k3, e_end)
        field_record[j] = f1
        if j % stride == 0:
            if sample_count % eig_check_every == 0:
                _guard_sample(sigma, t)
            samples.append(kernel.sample(sigma, t, f1))
            sample_count += 1
        sigma = sigma + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if cfg.hermitize:
            sigma = _hermitize(sigma)
        _guard_step(sigma, t + dt)
        e_start = e_end
    t_end = n_steps * dt
    _guard_sample(sigma, t_end)
    f_end, _ = kernel.fields_and_rhs(sigma, e_start)
    samples.append(kernel.sample(sigma, t_end, f_end))
    return Trajectory(
        samples=tuple(samples),
        field_record=field_record,
        dt=dt,
        frame_kind=frame.kind,
    )


def propagate_lab_closed_loop(
    model: SystemModel, frame: Frame, p: VirtualObservable, cfg: SimConfig
) -> Trajectory:
    """Reference run in the lab picture with the identical feedback law.

    Integrates d rho_hat/dt = -i [H0 + sum f_m H_m, rho_hat] while computing
    the stage fields through the frame transform, so it solves the exact
    image of the closed loop and serves as the frame-consistency oracle.
    """
    kernel = _EigenKernel(model, frame, p)
    lam_diag = np.diag(kernel.lam).astype(complex)

    def stage(sigma_lab: np.ndarray, e: np.ndarray, t: float):
        sigma_int = sigma_lab * e
        fvals, _ = kernel.fields_and_rhs(sigma_int, e)
        total = lam_diag.copy()
        for m, hm in enumerate(kernel.hms):
            total += fvals[m] * hm
        rhs = -1j * (total @ sigma_lab - sigma_lab @ total)
        return fvals, rhs

    return _run_lab_integration(kernel, cfg, stage, frame.kind)


def replay_open_loop(
    model: SystemModel,
    recorded,
    cfg: SimConfig,
    frame: Frame | None = None,
    p: VirtualObservable | None = None,
) -> Trajectory:
    """Drive the original lab system with a recorded field (zero-order hold).

    `recorded` is the per-step field record of a closed-loop run (a list of
    FieldSample or a Trajectory). The free target is evaluated exactly, so
    the sampled perf_index measures true tracking of the moving target.
    """
    if isinstance(recorded, Trajectory):
        if abs(recorded.dt - cfg.dt) > 1e-12:
            raise IntegratorError("record step differs from the requested dt")
        record = np.asarray(recorded.field_record, dtype=float)
    else:
        record = np.asarray([np.asarray(s.values, dtype=float) for s in recorded])
        times = np.array([s.t for s in recorded])
        if len(times) and (
            abs(times[0]) > 1e-9 or np.max(np.abs(np.diff(times) - cfg.dt)) > 1e-9
        ):
            raise IntegratorError("field record has gaps or a mismatched step")
    n_steps = cfg.n_steps
    if record.shape[0] < n_steps:
        raise IntegratorError(
            f"field record covers {record.shape[0]} steps, need {n_steps}"
        )
    if frame is None:
        frame = _make_schrodinger_frame(model)
    if p is None:
        p_eff = _identity_observable(model.dim)
        lyap_known = False
    else:
        p_eff = p
        lyap_known = True
    kernel = _EigenKernel(model, frame, p_eff)
    lam_diag = np.diag(kernel.lam).astype(complex)
    last = record.shape[0] - 1
    dt = cfg.dt

    def stage(sigma_lab: np.ndarray, e: np.ndarray, t: float):
        idx = min(int(np.floor(t / dt + 1e-9)), last)
        fvals = record[idx]
        total = lam_diag.copy()
        for m, hm in enumerate(kernel.hms):
            total += fvals[m] * hm
        rhs = -1j * (total @ sigma_lab - sigma_lab @ total)
        return fvals, rhs

    return _run_lab_integration(kernel, cfg, stage, frame.kind, lyap_known=lyap_known)


def _run_lab_integration(kernel, cfg, stage, frame_kind, lyap_known=True):
    """RK4 loop for lab-picture dynamics; `stage(sigma, E(t), t)` supplies fields and RHS."""
    n_steps = cfg.n_steps
    dt = cfg.dt
    stride = int(cfg.sample_stride)
    eig_check_every = max(1, (n_steps // stride) // 32) if kernel.n > 2 else 1
    sigma = kernel.sigma0.copy()  # lab state in eigen coordinates starts at rho0
    samples: list[TrajectorySample] = []
    field_record = np.empty((n_steps, len(kernel.hms)))
    e_start = kernel.phases(0.0)
    sample_count = 0

    for j in range(n_steps):
        t = j * dt
        e_mid = kernel.phases(t + dt / 2.0)
        e_end = kernel.phases(t + dt)
        f1, k1 = stage(sigma, e_start, t)
        _, k2 = stage(sigma + (dt / 2.0) * k1, e_mid, t + dt / 2.0)
        _, k3 = stage(sigma + (dt / 2.0) * k2, e_mid, t + dt / 2.0)
        _, k4 = stage(sigma + dt * k3, e_end, t + dt)
        field_record[j] = f1
        if j % stride == 0:
            if sample_count % eig_check_every == 0:
                _guard_sample(sigma, t)
            samples.append(_lab_sample(kernel, sigma, t, f1, lyap_known))
            sample_count += 1
        sigma = sigma + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if cfg.hermitize:
            sigma = _hermitize(sigma)
        _guard_step(sigma, t + dt)
        e_start = e_end
    t_end = n_steps * dt
    _guard_sample(sigma, t_end)
    f_end, _ = stage(sigma, e_start, t_end)
    samples.append(_lab_sample(kernel, sigma, t_end, f_end, lyap_known))
    return Trajectory(
        samples=tuple(samples), field_record=field_record, dt=dt, frame_kind=frame_kind
    )


def _lab_sample(kernel, sigma_lab, t, fvals, lyap_known=True) -> TrajectorySample:
    e = kernel.phases(t)
    ebar = np.conj(e)
    rho_lab = kernel.b @ sigma_lab @ kernel.bc
    target_lab_coords = kernel.sigma_f * ebar
    rho_target_lab = kernel.b @ target_lab_coords @ kernel.bc
    sigma_int = sigma_lab * e
    rho_frame = kernel.wb @ sigma_int @ kernel.wb.conj().T
    diff = sigma_lab - target_lab_coords
    perf = float(np.sum(diff.real**2 + diff.imag**2))
    lyap = float(np.sum(kernel.q * sigma_int.T).real) if lyap_known else float("nan")
    purity = float(np.sum(sigma_lab.real**2 + sigma_lab.imag**2))
    return TrajectorySample(
        t=t,
        rho_frame=DensityMatrix(rho_frame),
        rho_lab=DensityMatrix(rho_lab),
        rho_target_lab=DensityMatrix(rho_target_lab),
        fields=FieldSample(t=t, values=np.asarray(fvals, dtype=float)),
        lyapunov=lyap,
        perf_index=perf,
        purity=purity,
    )


def _make_schrodinger_frame(model: SystemModel) -> Frame:
    from .model import make_frame

    return make_frame(model, "schrodinger")


def _identity_observable(n: int) -> VirtualObservable:
    from .control import make_observable

    return make_observable(np.eye(n, dtype=complex), provenance="given")


def performance_index(rho_lab, rho_target_lab) -> float:
    """Squared Frobenius distance between controlled and target lab states."""
    return frobenius_distance_sq(_mat(rho_lab), _mat(rho_target_lab))


@dataclass(frozen=True)
class ConservationReport:
    max_trace_drift: float
    max_purity_drift: float
    max_hermiticity_defect: float
    max_lyapunov_step_increase: float


def conservation_report(traj: Trajectory) -> ConservationReport:
    """Worst-case drifts over the sampled trajectory (nothing is repaired)."""
    if not traj.samples:
        raise IntegratorError("empty trajectory")
    trace_drift = 0.0
    herm_defect = 0.0
    purity0 = traj.samples[0].purity
    purity_drift = 0.0
    for s in traj.samples:
        m = s.rho_lab.mat
        trace_drift = max(trace_drift, abs(complex(np.trace(m)) - 1.0))
        herm_defect = max(herm_defect, float(np.linalg.norm(m - m.conj().T)))
        purity_drift = max(purity_drift, abs(s.purity - purity0))
    lyap = traj.lyapunov
    if np.any(np.isnan(lyap)):
        v_increase = float("nan")
    else:
        v_increase = float(np.max(np.diff(lyap), initial=0.0))
    return ConservationReport(
        max_trace_drift=float(trace_drift),
        max_purity_drift=float(purity_drift),
        max_hermiticity_defect=float(herm_defect),
        max_lyapunov_step_increase=v_increase,
    )
