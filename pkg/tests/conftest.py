"""Session fixtures for the two expensive benchmark runs."""

import time

import pytest

import qorbit as q
from bench import PSIF, ScenarioBundle, mixed_model, superposition_model


@pytest.fixture(scope="session")
def superposition_run() -> ScenarioBundle:
    """Full 50 a.u. closed loop of the pure-target benchmark at dt = 1e-3."""
    model = superposition_model()
    frame = q.make_frame(model, "interaction")
    p = q.design_superposition_p(PSIF, model.rho0, q.DesignParams(p1=0.2, weights=(10.0,)))
    cfg = q.SimConfig(t_final=50.0, dt=1e-3, sample_stride=10, frame="interaction")
    t0 = time.perf_counter()
    traj = q.propagate_closed_loop(model, frame, p, cfg)
    elapsed = time.perf_counter() - t0
    return ScenarioBundle(model, frame, p, cfg, traj, elapsed, 1e-8)


@pytest.fixture(scope="session")
def mixed_run() -> ScenarioBundle:
    """Full 100 a.u. closed loop of the mixed-target benchmark at dt = 1e-3."""
    model = mixed_model()
    frame = q.diagonalizing_frame(model)
    d_f = frame.target_state()
    ok, u = q.unitary_equivalent(frame.initial_state(), d_f, tol=1e-3)
    assert ok and u is not None
    p = q.design_diagonal_p(d_f, frame.initial_state(), u, equiv_tol=1e-3)
    cfg = q.SimConfig(t_final=100.0, dt=1e-3, sample_stride=100, frame="diagonalized")
    t0 = time.perf_counter()
    traj = q.propagate_closed_loop(model, frame, p, cfg)
    elapsed = time.perf_counter() - t0
    return ScenarioBundle(model, frame, p, cfg, traj, elapsed, 1e-3)
