"""Assumption checks: regularity, connectivity, unitary equivalence."""

import numpy as np
import pytest

import qorbit as q

from bench import RHO0_52, RHOF_52, mixed_model, superposition_model

RNG = np.random.default_rng(4242)


def pair_coupling(n, j, k):
    h = np.zeros((n, n), dtype=complex)
    h[j, k] = 1.0
    h[k, j] = 1.0
    return h


def bfs_connected(adj):
    # independent connectivity oracle
    n = adj.shape[0]
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in range(n):
                if adj[i, j] and j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return len(seen) == n


class TestStrongRegularity:
    def test_two_level(self):
        ok, wit = q.strong_regularity(q.PAULI_Z)
        assert ok and wit is None

    def test_equispaced_spectrum_fails(self):
        ok, wit = q.strong_regularity(np.diag([0.0, 1.0, 2.0]).astype(complex))
        assert not ok
        assert wit is not None

    def test_anharmonic_spectrum_passes(self):
        ok, _ = q.strong_regularity(np.diag([0.0, 1.0, 2.5]).astype(complex))
        assert ok

    def test_degenerate_fails(self):
        ok, _ = q.strong_regularity(np.diag([1.0, 1.0, 3.0]).astype(complex))
        assert not ok

    def test_shift_invariance(self):
        h = np.diag([0.0, 1.0, 2.5]).astype(complex)
        for c in (-3.0, 0.7):
            ok_a, _ = q.strong_regularity(h)
            ok_b, _ = q.strong_regularity(h + c * np.eye(3))
            assert ok_a == ok_b


class TestFullyConnected:
    def test_two_level_sigma_x(self):
        ok, wit = q.fully_connected([q.PAULI_X])
        assert ok and wit is None

    def test_missing_level_detected(self):
        ok, wit = q.fully_connected([pair_coupling(3, 0, 1)])
        assert not ok
        assert wit == ((1, 2), (3,))

    def test_path_graph_connects(self):
        ok, _ = q.fully_connected([pair_coupling(3, 0, 1), pair_coupling(3, 1, 2)])
        assert ok

    def test_matches_bfs_oracle(self):
        for _ in range(20):
            n = int(RNG.integers(2, 6))
            mask = RNG.random((n, n)) < 0.35
            mask = np.triu(mask, 1)
            h = (mask | mask.T).astype(complex)
            if not np.any(h):
                continue
            ok, _ = q.fully_connected([h])
            assert ok == bfs_connected(np.abs(h) > 1e-8)

    def test_uses_h0_eigenbasis(self):
        # a control diagonal in the lab basis can still couple H0 levels
        h0 = q.PAULI_X  # eigenbasis is the Hadamard frame
        basis = q.eig_hermitian(h0).basis
        ok, _ = q.fully_connected([q.PAULI_Z], basis=basis)
        assert ok


class TestUnitaryEquivalent:
    def test_reflexive(self):
        rho = q.validate_density(RHO0_52)
        ok, u = q.unitary_equivalent(rho, rho)
        assert ok
        assert np.allclose(u, np.eye(2), atol=1e-12)

    def test_mixed_benchmark_pair_at_loose_tol(self):
        # characteristic-polynomial oracle: lam = (1 +- sqrt(1 - 4 det)) / 2
        for mat in (RHO0_52, RHOF_52):
            det = float(np.linalg.det(mat).real)
            lam = (1 + np.sqrt(1 - 4 * det)) / 2
            assert lam == pytest.approx(0.7785, abs=2e-4)
        ok, u = q.unitary_equivalent(
            q.validate_density(RHO0_52), q.validate_density(RHOF_52), tol=1e-3
        )
        assert ok and u is not None
        moved = u @ RHOF_52 @ u.conj().T
        assert np.linalg.norm(RHO0_52 - moved) < 1e-2

    def test_rounded_pair_fails_at_default_tol(self):
        # the printed benchmark matrices are only co-spectral to ~2e-4
        ok, _ = q.unitary_equivalent(
            q.validate_density(RHO0_52), q.validate_density(RHOF_52)
        )
        assert not ok

    def test_distinct_spectra(self):
        pure = q.validate_density(np.diag([1.0, 0.0]).astype(complex))
        mixed = q.validate_density(0.5 * np.eye(2, dtype=complex))
        ok, u = q.unitary_equivalent(pure, mixed)
        assert not ok and u is None

    def test_symmetric(self):
        a = q.validate_density(RHO0_52)
        b_mat = q.eig_hermitian(RHO0_52).basis
        rotated = q.validate_density(b_mat @ np.diag(q.eig_hermitian(RHO0_52).values) @ b_mat.conj().T)
        ok_ab, _ = q.unitary_equivalent(a, rotated)
        ok_ba, _ = q.unitary_equivalent(rotated, a)
        assert ok_ab and ok_ba

    def test_degenerate_returns_no_unitary(self):
        a = q.validate_density(0.5 * np.eye(2, dtype=complex))
        ok, u = q.unitary_equivalent(a, a)
        assert ok and u is None


class TestCheckAssumptions:
    def test_superposition_benchmark_passes(self):
        report = q.check_assumptions(superposition_model())
        assert report.flags == (True, True, True)
        assert report.all_hold

    def test_mixed_benchmark_needs_loose_tol(self):
        model = mixed_model()
        assert not q.check_assumptions(model).unitarily_equivalent
        assert q.check_assumptions(model, 1e-3).all_hold

    def test_witnesses_only_on_failure(self):
        report = q.check_assumptions(superposition_model())
        assert report.regularity_witness is None
        assert report.connectivity_witness is None
