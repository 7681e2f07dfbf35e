"""Numerical checks of the standing assumptions behind the control scheme.

A1: H0 strongly regular (all transition frequencies distinct and nonzero).
A2: the controls connect every pair of levels, directly or transitively.
A3: initial and target states are unitarily equivalent (same spectra).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermat import as_cmatrix, eig_hermitian, require_hermitian
from .model import SystemModel, _mat

SPECTRAL_TOL = 1e-8


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the three checks, with a witness wherever a check failed."""

    strongly_regular: bool
    fully_connected: bool
    unitarily_equivalent: bool
    regularity_witness: tuple | None = None
    connectivity_witness: tuple | None = None
    spectra: tuple | None = None
    transporting_unitary: np.ndarray | None = None

    @property
    def flags(self) -> tuple[bool, bool, bool]:
        return (self.strongly_regular, self.fully_connected, self.unitarily_equivalent)

    @property
    def all_hold(self) -> bool:
        return all(self.flags)


def strong_regularity(h0, tol: float = SPECTRAL_TOL):
    """True iff all level differences of H0 are nonzero and pairwise distinct.

    The witness names the offending transition pair(s), 1-based.
    """
    h0 = require_hermitian(as_cmatrix(h0))
    lam = eig_hermitian(h0).values
    n = len(lam)
    transitions = []
    for i in range(n):
        for j in range(i + 1, n):
            gap = lam[i] - lam[j]
            if gap <= tol:
                return False, ((i + 1, j + 1), (i + 1, j + 1))
            transitions.append((gap, (i + 1, j + 1)))
    transitions.sort(key=lambda item: item[0])
    for (g1, pair1), (g2, pair2) in zip(transitions, transitions[1:]):
        if g2 - g1 <= tol:
            return False, (pair1, pair2)
    return True, None


def fully_connected(hms, tol: float = SPECTRAL_TOL, basis: np.ndarray | None = None):
    """True iff the level graph with edges |(H_m)_jk| > tol is connected.

    Entries are taken in the H0 eigenbasis when one is supplied. The witness
    is the (reachable, unreachable) level partition, 1-based.
    """
    mats = [require_hermitian(as_cmatrix(h)) for h in hms]
    if basis is not None:
        bc = basis.conj().T
        mats = [bc @ h @ basis for h in mats]
    n = mats[0].shape[0]
    adj = np.zeros((n, n), dtype=bool)
    for h in mats:
        adj |= np.abs(h) > tol
    np.fill_diagonal(adj, False)
    seen = {0}
    stack = [0]
    while stack:
        j = stack.pop()
        for k in np.nonzero(adj[j])[0]:
            if k not in seen:
                seen.add(int(k))
                stack.append(int(k))
    if len(seen) == n:
        return True, None
    inside = tuple(sorted(j + 1 for j in seen))
    outside = tuple(sorted(j + 1 for j in range(n) if j not in seen))
    return False, (inside, outside)


def unitary_equivalent(a, b, tol: float = SPECTRAL_TOL):
    """True iff a and b share a spectrum; also returns a transporting unitary.

    The unitary satisfies a = U b U^dagger and is built from the two
    eigenbases, which is only well defined for non-degenerate spectra; for
    degenerate ones the boolean alone is returned.
    """
    am, bm = _mat(a), _mat(b)
    ea, eb = eig_hermitian(am), eig_hermitian(bm)
    if am.shape != bm.shape:
        return False, None
    if float(np.max(np.abs(ea.values - eb.values))) > tol:
        return False, None
    gaps = -np.diff(ea.values)  # nonnegative, since values are descending
    if len(gaps) and float(np.min(gaps)) < 1e-10:
        return True, None  # degenerate spectrum: no transporting unitary built
    u = ea.basis @ eb.basis.conj().T
    residual = float(np.linalg.norm(am - u @ bm @ u.conj().T))
    if residual > 10 * tol:
        return True, None
    return True, u


def check_assumptions(model: SystemModel, tol: float = SPECTRAL_TOL) -> AssumptionReport:
    """Run all three checks on a model and collect witnesses."""
    a1, wit1 = strong_regularity(model.h0, tol)
    basis = eig_hermitian(model.h0).basis
    a2, wit2 = fully_connected(model.controls, tol, basis=basis)
    a3, u = unitary_equivalent(model.rho0, model.rho_f0, tol)
    spectra = (
        tuple(float(x) for x in eig_hermitian(model.rho0.mat).values),
        tuple(float(x) for x in eig_hermitian(model.rho_f0.mat).values),
    )
    return AssumptionReport(
        strongly_regular=a1,
        fully_connected=a2,
        unitarily_equivalent=a3,
        regularity_witness=wit1,
        connectivity_witness=wit2,
        spectra=spectra,
        transporting_unitary=u,
    )
