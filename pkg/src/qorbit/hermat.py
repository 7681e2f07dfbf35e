"""Dense complex-matrix kernel for small Hermitian problems (n <= ~10).

All matrices are square numpy arrays of dtype complex128. The eigensolver is
a cyclic Jacobi iteration (closed form for n = 2, i.e. a single rotation),
chosen for robustness at the tiny dimensions this package works with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
PIVOT_TOL = 1e-10
JACOBI_OFFDIAG_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class KernelError(Exception):
    """Base class for matrix-kernel failures."""


class DimensionMismatchError(KernelError):
    pass


class NotHermitianError(KernelError):
    pass


class NotUnitaryError(KernelError):
    pass


class EigenConvergenceError(KernelError):
    pass


class DependentVectorsError(KernelError):
    pass


def as_cmatrix(a) -> np.ndarray:
    """Coerce to a square complex128 array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    return m


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


def hermiticity_defect(a: np.ndarray) -> float:
    """Frobenius norm of a - a^dagger."""
    return float(np.linalg.norm(a - a.conj().T))


def require_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_cmatrix(a)
    if hermiticity_defect(a) > tol * max(1.0, float(np.linalg.norm(a))):
        raise NotHermitianError(f"matrix is not Hermitian (defect {hermiticity_defect(a):.3e})")
    return a


def require_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = as_cmatrix(u)
    defect = float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))
    if defect > tol * max(1.0, float(np.linalg.norm(u))):
        raise NotUnitaryError(f"matrix is not unitary (defect {defect:.3e})")
    return u


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """AB - BA. Anti-Hermitian whenever both inputs are Hermitian."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    _check_same_dim(a, b)
    return a @ b - b @ a


def trace_product(a: np.ndarray, b: np.ndarray) -> complex:
    """tr(AB), without forming the full product."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    _check_same_dim(a, b)
    return complex(np.sum(a * b.T))


def frobenius_distance_sq(a: np.ndarray, b: np.ndarray) -> float:
    """tr((A-B)^dagger (A-B)) = squared Frobenius distance."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    _check_same_dim(a, b)
    d = a - b
    return float(np.sum(d.real**2 + d.imag**2))


@dataclass(frozen=True)
class EigenPair:
    """Real eigenvalues (descending) and the unitary of column eigenvectors."""

    values: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Zero a[p,q] with a complex Jacobi rotation; updates a and v in place."""
    apq = a[p, q]
    r = abs(apq)
    if r == 0.0:
        return
    phase = apq / r
    app = a[p, p].real
    aqq = a[q, q].real
    tau = (aqq - app) / (2.0 * r)
    if tau >= 0.0:
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # 2x2 block of the rotation: [[c, s*phase], [-s*conj(phase), c]]
    jpp, jpq = c, s * phase
    jqp, jqq = -s * np.conj(phase), c
    # columns: A <- A J
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = col_p * jpp + col_q * jqp
    a[:, q] = col_p * jpq + col_q * jqq
    # rows: A <- J^dagger A
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = row_p * np.conj(jpp) + row_q * np.conj(jqp)
    a[q, :] = row_p * np.conj(jpq) + row_q * np.conj(jqq)
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    # accumulate eigenvectors: V <- V J
    vcol_p = v[:, p].copy()
    vcol_q = v[:, q].copy()
    v[:, p] = vcol_p * jpp + vcol_q * jqp
    v[:, q] = vcol_p * jpq + vcol_q * jqq


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def _fix_phases(basis: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude component real and positive."""
    out = basis.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))
        z = col[k]
        out[:, j] = col * (np.conj(z) / abs(z))
        out[k, j] = out[k, j].real
    return out


def eig_hermitian(a: np.ndarray, degeneracy_gap: float = 1e-10) -> EigenPair:
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    Eigenvalues come out descending; each eigenvector's largest-magnitude
    component is made real and positive so the basis is deterministic.
    Eigenvectors inside a near-degenerate block (gap < degeneracy_gap) are
    re-orthonormalized; callers that need distinct eigenvalues must check
    themselves.
    """
    a = require_hermitian(a)
    n = a.shape[0]
    work = (a + a.conj().T) / 2.0
    v = np.eye(n, dtype=complex)
    if n == 1:
        values = np.array([work[0, 0].real])
        return EigenPair(values=values, basis=v)
    if n == 2:
        # a single rotation diagonalizes exactly - this is the closed form
        _jacobi_rotate(work, v, 0, 1)
    else:
        for _ in range(JACOBI_MAX_SWEEPS):
            if _offdiag_norm(work) <= JACOBI_OFFDIAG_TOL:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    if abs(work[p, q]) > JACOBI_OFFDIAG_TOL / (n * n):
                        _jacobi_rotate(work, v, p, q)
        else:
            raise EigenConvergenceError(
                f"Jacobi failed to converge in {JACOBI_MAX_SWEEPS} sweeps "
                f"(off-diagonal mass {_offdiag_norm(work):.3e})"
            )
    values = np.diag(work).real.copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    basis = v[:, order]
    # re-orthonormalize degenerate blocks
    start = 0
    for stop in range(1, n + 1):
        if stop == n or values[stop - 1] - values[stop] > degeneracy_gap:
            if stop - start > 1:
                block = gram_schmidt([basis[:, j] for j in range(start, stop)])
                for off, col in enumerate(block):
                    basis[:, start + off] = col
            start = stop
    return EigenPair(values=values, basis=_fix_phases(basis))


def unitary_conjugate(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """U A U^dagger; preserves spectrum, trace and hermiticity."""
    u = require_unitary(u)
    a = as_cmatrix(a)
    _check_same_dim(u, a)
    return u @ a @ u.conj().T


def expm_i_hermitian(h: np.ndarray, t: float, sign: int, eig: EigenPair | None = None) -> np.ndarray:
    """exp(sign * i * H * t) for Hermitian H, via its eigen-decomposition."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if eig is None:
        eig = eig_hermitian(h)
    phases = np.exp(1j * sign * eig.values * t)
    return (eig.basis * phases) @ eig.basis.conj().T


def gram_schmidt(vectors) -> list[np.ndarray]:
    """Orthonormalize a linearly independent set (modified Gram-Schmidt).

    The first output is the normalized first input. Raises if a pivot norm
    falls below 1e-10 (dependent inputs).
    """
    out: list[np.ndarray] = []
    for v in vectors:
        w = np.asarray(v, dtype=complex).copy()
        if w.ndim != 1:
            raise DimensionMismatchError("gram_schmidt expects 1-d vectors")
        for _ in range(2):  # second pass controls cancellation error
            for u in out:
                w = w - (u.conj() @ w) * u
        nrm = float(np.linalg.norm(w))
        if nrm <= PIVOT_TOL:
            raise DependentVectorsError(f"dependent input set (pivot norm {nrm:.3e})")
        out.append(w / nrm)
    return out
