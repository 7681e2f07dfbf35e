"""Integrator tests: conservation, frame consistency, replay, convergence order."""

import numpy as np
import pytest

import qorbit as q
from qorbit.control import make_observable
from qorbit.simulate import IntegratorError

from bench import PSIF, RHO0_52, mixed_model, superposition_model

RNG = np.random.default_rng(555)


def zero_record(cfg):
    return [q.FieldSample(t=j * cfg.dt, values=np.zeros(1)) for j in range(cfg.n_steps)]


class TestClosedLoopBasics:
    def test_commuting_observable_freezes_frame_state(self):
        # with P = I the feedback vanishes identically, so the interaction
        # state stays put (the drift is removed by the frame change)
        model = superposition_model()
        frame = q.make_frame(model, "interaction")
        p = q.VirtualObservable(mat=np.eye(2, dtype=complex), eig=q.eig_hermitian(np.eye(2, dtype=complex)))
        cfg = q.SimConfig(t_final=1.0, dt=1e-3, sample_stride=100, frame="interaction")
        traj = q.propagate_closed_loop(model, frame, p, cfg)
        for s in traj.samples:
            assert np.allclose(s.rho_frame.mat, model.rho0.mat, atol=1e-12)
            assert np.allclose(s.fields.values, 0.0, atol=1e-14)

    def test_frame_kind_mismatch_rejected(self):
        model = superposition_model()
        frame = q.make_frame(model, "interaction")
        p = make_observable(np.diag([0.1, 0.2]).astype(complex))
        cfg = q.SimConfig(t_final=1.0, dt=1e-3, frame="diagonalized")
        with pytest.raises(IntegratorError):
            q.propagate_closed_loop(model, frame, p, cfg)

    def test_sampling_grid(self):
        model = superposition_model()
        frame = q.make_frame(model, "interaction")
        p = make_observable(np.diag([0.1, 0.2]).astype(complex))
        cfg = q.SimConfig(t_final=0.05, dt=1e-3, sample_stride=7, frame="interaction")
        traj = q.propagate_closed_loop(model, frame, p, cfg)
        times = traj.times
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(0.05, abs=1e-12)
        assert np.all(np.diff(times) > 0)
        assert traj.field_record.shape == (50, 1)

    def test_dissipation_and_spectrum_invariance(self, superposition_run):
        traj = superposition_run.traj
        lyap = traj.lyapunov
        assert np.all(np.diff(lyap) <= 1e-7)
        ref = q.eig_hermitian(superposition_run.model.rho0.mat).values
        for s in traj.samples[:: len(traj.samples) // 10]:
            vals = q.eig_hermitian(s.rho_lab.mat).values
            assert np.allclose(vals, ref, atol=1e-7)

    def test_lab_state_inverts_frame_change(self, mixed_run):
        b = mixed_run
        for s in b.traj.samples[:: len(b.traj.samples) // 7]:
            w = b.frame.unitary(s.t)
            back = w.conj().T @ s.rho_frame.mat @ w
            assert np.linalg.norm(back - s.rho_lab.mat) < 1e-10

    def test_integrator_abort_on_instability(self):
        model = superposition_model(gain=80.0)
        frame = q.make_frame(model, "interaction")
        params = q.DesignParams(p1=0.2, weights=(10.0,))
        p = q.design_superposition_p(PSIF, model.rho0, params)
        cfg = q.SimConfig(t_final=40.0, dt=0.9, sample_stride=1, frame="interaction")
        with pytest.raises(IntegratorError):
            q.propagate_closed_loop(model, frame, p, cfg)


class TestFrameEquivalence:
    def test_diagonalized_equals_interaction_in_lab(self):
        # the same feedback written in either frame must produce the same
        # lab trajectory: the diagonalized loop with P equals the
        # interaction loop with U_f^dagger P U_f
        model = mixed_model()
        diag_frame = q.diagonalizing_frame(model)
        int_frame = q.make_frame(model, "interaction")
        p_diag = make_observable(np.diag([0.1, 0.2]).astype(complex))
        uf = diag_frame.uf
        p_int = make_observable(uf.conj().T @ p_diag.mat @ uf)
        cfg_d = q.SimConfig(t_final=3.0, dt=1e-3, sample_stride=250, frame="diagonalized")
        cfg_i = q.SimConfig(t_final=3.0, dt=1e-3, sample_stride=250, frame="interaction")
        traj_d = q.propagate_closed_loop(model, diag_frame, p_diag, cfg_d)
        traj_i = q.propagate_closed_loop(model, int_frame, p_int, cfg_i)
        for sd, si in zip(traj_d.samples, traj_i.samples):
            assert np.linalg.norm(sd.rho_lab.mat - si.rho_lab.mat) < 1e-12
            assert sd.lyapunov == pytest.approx(si.lyapunov, abs=1e-12)

    def test_interaction_run_matches_lab_reference(self):
        model = superposition_model()
        frame = q.make_frame(model, "interaction")
        p = q.design_superposition_p(PSIF, model.rho0, q.DesignParams(p1=0.2, weights=(10.0,)))
        cfg = q.SimConfig(t_final=2.0, dt=1e-3, sample_stride=100, frame="interaction")
        a = q.propagate_closed_loop(model, frame, p, cfg)
        b = q.propagate_lab_closed_loop(model, frame, p, cfg)
        errs = [
            np.linalg.norm(x.rho_lab.mat - y.rho_lab.mat)
            for x, y in zip(a.samples, b.samples)
        ]
        assert max(errs) < 1e-6

    def test_rk4_order_on_dt_halving(self):
        model = superposition_model()
        frame = q.make_frame(model, "interaction")
        p = q.design_superposition_p(PSIF, model.rho0, q.DesignParams(p1=0.2, weights=(10.0,)))

        def consistency_error(dt):
            cfg = q.SimConfig(t_final=2.0, dt=dt, sample_stride=max(1, int(0.5 / dt)), frame="interaction")
            a = q.propagate_closed_loop(model, frame, p, cfg)
            b = q.propagate_lab_closed_loop(model, frame, p, cfg)
            return max(
                np.linalg.norm(x.rho_lab.mat - y.rho_lab.mat)
                for x, y in zip(a.samples, b.samples)
            )

        factor = consistency_error(8e-3) / consistency_error(4e-3)
        assert 8.0 <= factor <= 32.0


class TestReplay:
    def test_zero_field_identical_states_track_exactly(self):
        rho = q.validate_density(RHO0_52)
        model = q.SystemModel(h0=q.PAULI_Z, controls=(q.PAULI_X,), gains=(1.0,), rho0=rho, rho_f0=rho)
        cfg = q.SimConfig(t_final=2.0, dt=1e-3, sample_stride=100, frame="interaction")
        traj = q.replay_open_loop(model, zero_record(cfg), cfg)
        for s in traj.samples:
            assert s.perf_index < 1e-20

    def test_zero_field_purity_conserved(self):
        model = mixed_model()
        cfg = q.SimConfig(t_final=2.0, dt=1e-3, sample_stride=100, frame="interaction")
        traj = q.replay_open_loop(model, zero_record(cfg), cfg)
        purities = [s.purity for s in traj.samples]
        assert max(purities) - min(purities) < 1e-9

    def test_benchmark_replay_matches_closed_loop_perf(self, superposition_run):
        b = superposition_run
        replay = q.replay_open_loop(b.model, b.traj, b.cfg, frame=b.frame, p=b.p)
        v_closed = b.traj.samples[-1].perf_index
        v_replay = replay.samples[-1].perf_index
        assert abs(v_closed - v_replay) < 1e-6

    def test_record_gap_detected(self):
        model = mixed_model()
        cfg = q.SimConfig(t_final=1.0, dt=1e-3, frame="interaction")
        record = zero_record(cfg)[:-10]
        with pytest.raises(IntegratorError):
            q.replay_open_loop(model, record, cfg)

    def test_wrong_spacing_detected(self):
        model = mixed_model()
        cfg = q.SimConfig(t_final=1.0, dt=1e-3, frame="interaction")
        record = [q.FieldSample(t=j * 2e-3, values=np.zeros(1)) for j in range(1000)]
        with pytest.raises(IntegratorError):
            q.replay_open_loop(model, record, cfg)


class TestPerformanceIndex:
    def test_identical_states(self):
        rho = q.validate_density(RHO0_52)
        assert q.performance_index(rho, rho) == 0.0

    def test_orthogonal_pure_states(self):
        a = q.validate_density(np.diag([1.0, 0.0]).astype(complex))
        b = q.validate_density(np.diag([0.0, 1.0]).astype(complex))
        assert q.performance_index(a, b) == pytest.approx(2.0, abs=1e-14)

    def test_mixed_benchmark_initial_gap(self):
        model = mixed_model()
        got = q.performance_index(model.rho0, model.rho_f0)
        assert got == pytest.approx(0.465536, abs=1e-12)


class TestLyapunovRateAlongTrajectory:
    def test_central_difference_matches_rate(self):
        model = superposition_model()
        frame = q.make_frame(model, "interaction")
        p = q.design_superposition_p(PSIF, model.rho0, q.DesignParams(p1=0.2, weights=(10.0,)))
        h = 1e-4
        cfg = q.SimConfig(t_final=0.2, dt=h, sample_stride=1, frame="interaction")
        traj = q.propagate_closed_loop(model, frame, p, cfg)
        lyap = traj.lyapunov
        for i in range(50, 150, 17):
            s = traj.samples[i]
            hm_t = q.interaction_control_hamiltonian(frame, 0, s.t)
            rate = q.lyapunov_rate(p, s.rho_frame, [hm_t], s.fields)
            fd = (lyap[i + 1] - lyap[i - 1]) / (2 * h)
            assert fd == pytest.approx(rate, abs=5e-5)


class TestConservationReport:
    def test_exact_free_evolution_has_tiny_drift(self):
        model = mixed_model()
        cfg = q.SimConfig(t_final=2.0, dt=1e-3, sample_stride=100, frame="interaction")
        traj = q.replay_open_loop(model, zero_record(cfg), cfg)
        rep = q.conservation_report(traj)
        assert rep.max_trace_drift < 1e-12
        assert rep.max_purity_drift < 1e-12
        assert rep.max_hermiticity_defect < 1e-14

    def test_benchmark_run_drift_bounds(self, superposition_run):
        rep = q.conservation_report(superposition_run.traj)
        assert rep.max_trace_drift < 1e-9
        assert rep.max_purity_drift < 1e-8
        assert rep.max_lyapunov_step_increase < 1e-7

    def test_corrupted_trajectory_reported(self, superposition_run):
        from dataclasses import replace

        traj = superposition_run.traj
        bad_mat = traj.samples[0].rho_lab.mat * 1.01
        bad_sample = replace(
            traj.samples[0],
            rho_lab=q.DensityMatrix(bad_mat),
            purity=float(np.sum(np.abs(bad_mat) ** 2)),
        )
        corrupted = q.Trajectory(
            samples=(traj.samples[0], bad_sample),
            field_record=traj.field_record,
            dt=traj.dt,
            frame_kind=traj.frame_kind,
        )
        rep = q.conservation_report(corrupted)
        assert rep.max_trace_drift == pytest.approx(0.01, abs=1e-9)
