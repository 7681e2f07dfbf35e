"""Construction of the virtual observable P and its convergence certificate.

Convergence to the target needs tr(P rho_f) < tr(P rho_0) < tr(P rho_s) for
every other stationary state rho_s, which for a generic P are the
permutations of the target spectrum over P's eigenbasis. Diagonal targets
get a diagonal P anti-ordered against the spectrum; pure superposition
targets get P built on an orthonormal completion of the target vector with
weighted eigenvalues p_k = g_k p_1. Both routes verify the chain by
exhaustive permutation enumeration, which is exact and cheap at desk scale
(n <= 8).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .hermat import (
    KernelError,
    as_cmatrix,
    commutator,
    eig_hermitian,
    frobenius_distance_sq,
    gram_schmidt,
    require_unitary,
    trace_product,
)
from .control import VirtualObservable, make_observable
from .model import DensityMatrix, Frame, SystemModel, _mat
from .verify import AssumptionReport, check_assumptions

MAX_ENUMERATION_DIM = 8
EIGENGAP_TOL = 1e-9
TARGET_MATCH_DIST = 1e-8


class DesignError(KernelError):
    pass


@dataclass(frozen=True)
class DesignParams:
    """Knobs for the superposition-target construction: P = p1 |s1><s1| + sum g_k p1 |s_k><s_k|."""

    p1: float
    weights: tuple[float, ...] = ()
    completion: tuple | None = None

    def __post_init__(self):
        if self.p1 <= 0:
            raise DesignError("p1 must be positive")
        object.__setattr__(self, "weights", tuple(float(g) for g in self.weights))


@dataclass(frozen=True)
class ChainCheck:
    """Result of the ordering check v(rho_f) < v(rho_0) < min v(rho_s)."""

    v_target: float
    v_initial: float
    v_others: tuple[tuple[str, float], ...]
    chain_ok: bool
    margin: float


@dataclass(frozen=True)
class ConvergenceCertificate:
    chain: ChainCheck
    lemma2_ok: bool
    rank_ok: bool
    rank: int
    limit_residuals: tuple[float, ...]
    assumptions: AssumptionReport

    @property
    def v_target(self) -> float:
        return self.chain.v_target

    @property
    def v_initial(self) -> float:
        return self.chain.v_initial

    @property
    def v_others(self) -> tuple[tuple[str, float], ...]:
        return self.chain.v_others

    @property
    def passed(self) -> bool:
        return (
            self.chain.chain_ok
            and self.lemma2_ok
            and self.rank_ok
            and self.assumptions.all_hold
        )


def weight_bound(rho_f, rho0, rho_k) -> float:
    """Lower bound max{(1 - tr(rho_f rho_0)) / tr(rho_k rho_0), 1} on a weight g_k."""
    overlap_f = trace_product(_mat(rho_f), _mat(rho0)).real
    overlap_k = trace_product(_mat(rho_k), _mat(rho0)).real
    numerator = 1.0 - overlap_f
    if numerator <= 1e-12:
        return 1.0  # already at the target: any admissible weight works
    if overlap_k <= 1e-12:
        raise DesignError(
            "initial state has no overlap with this eigenvector; the weight bound is undefined"
        )
    return max(numerator / overlap_k, 1.0)


def _default_completion(psi_f: np.ndarray) -> list[np.ndarray]:
    """Standard-basis vectors that keep the set independent, greedily."""
    n = len(psi_f)
    chosen: list[np.ndarray] = []
    for j in range(n):
        if len(chosen) == n - 1:
            break
        cand = np.zeros(n, dtype=complex)
        cand[j] = 1.0
        try:
            gram_schmidt([psi_f, *chosen, cand])
        except KernelError:
            continue
        chosen.append(cand)
    if len(chosen) != n - 1:
        raise DesignError("could not complete the target vector to a basis")
    return chosen


def design_superposition_p(psi_f, rho0, params: DesignParams) -> VirtualObservable:
    """P for a pure target |psi_f>: smallest eigenvalue on the target vector.

    The completion vectors (default: standard basis, greedily) are
    orthonormalized against psi_f; every weight must strictly exceed its
    bound from weight_bound and the full ordering chain is re-verified
    numerically before the observable is returned.
    """
    psi_f = np.asarray(psi_f, dtype=complex)
    nrm = float(np.linalg.norm(psi_f))
    if abs(nrm - 1.0) > 1e-8:
        raise DesignError(f"target vector must be normalized (norm {nrm:.6f})")
    psi_f = psi_f / nrm
    n = len(psi_f)
    rho0_mat = _mat(rho0)
    if params.completion is not None:
        completion = [np.asarray(v, dtype=complex) for v in params.completion]
    else:
        completion = _default_completion(psi_f)
    if len(completion) != n - 1:
        raise DesignError(f"need {n - 1} completion vectors, got {len(completion)}")
    if len(params.weights) != n - 1:
        raise DesignError(f"need {n - 1} weights, got {len(params.weights)}")
    basis = gram_schmidt([psi_f, *completion])

    rho_f = np.outer(basis[0], basis[0].conj())
    p1 = params.p1
    p_mat = p1 * rho_f
    eigvals = [p1]
    for k, g_k in enumerate(params.weights, start=1):
        rho_k = np.outer(basis[k], basis[k].conj())
        bound = weight_bound(rho_f, rho0_mat, rho_k)
        if g_k <= bound:
            raise DesignError(
                f"weight g_{k + 1} = {g_k} does not exceed its bound {bound:.6f}"
            )
        p_mat = p_mat + g_k * p1 * rho_k
        eigvals.append(g_k * p1)
    eigvals_arr = np.sort(np.asarray(eigvals))
    if float(np.min(np.diff(eigvals_arr))) < EIGENGAP_TOL:
        raise DesignError("designed P has (near-)colliding eigenvalues; spread the weights")

    p = make_observable(p_mat, provenance="superposition-design")
    v_target = trace_product(p_mat, rho_f).real
    v_initial = trace_product(p_mat, rho0_mat).real
    v_upper = float(np.min(eigvals_arr[1:]))
    at_target = np.sqrt(frobenius_distance_sq(rho0_mat, rho_f)) < TARGET_MATCH_DIST
    target_ok = v_target < v_initial or at_target
    if not (target_ok and v_initial < v_upper):
        raise DesignError(
            f"ordering chain failed: {v_target:.6f} < {v_initial:.6f} < {v_upper:.6f} "
            "does not hold; increase the smaller weights"
        )
    return p


def design_diagonal_p(
    d_f,
    rho0,
    u_equiv,
    delta: float = 0.1,
    growth: float = 1.5,
    max_iter: int = 60,
    equiv_tol: float = 1e-8,
) -> VirtualObservable:
    """Diagonal P for a diagonal mixed target, anti-ordered against its spectrum.

    Starts from equally spaced entries (the largest target population gets
    the smallest entry) and verifies the full ordering chain by enumerating
    all permutations of the spectrum. On failure the entry at the level
    where the initial population most exceeds the target one is raised
    geometrically, up to max_iter times.
    """
    d_mat = _mat(d_f)
    n = d_mat.shape[0]
    if n > MAX_ENUMERATION_DIM:
        raise DesignError(
            f"permutation enumeration is factorial; refusing n = {n} > {MAX_ENUMERATION_DIM}"
        )
    off = float(np.linalg.norm(d_mat - np.diag(np.diag(d_mat))))
    if off > 1e-10:
        raise DesignError("target must be diagonal in this frame")
    lam = np.diag(d_mat).real.copy()
    order = np.argsort(-lam, kind="stable")
    gaps = -np.diff(lam[order])
    if len(gaps) and float(np.min(gaps)) < EIGENGAP_TOL:
        raise DesignError("target spectrum is degenerate; diagonal design needs distinct entries")

    rho0_mat = _mat(rho0)
    u = require_unitary(as_cmatrix(u_equiv))
    transported = u @ d_mat @ u.conj().T
    if np.sqrt(frobenius_distance_sq(rho0_mat, transported)) > 10 * equiv_tol:
        raise DesignError("rho0 is not unitarily equivalent to the target via u_equiv")

    p_entries = np.empty(n)
    for rank_pos, idx in enumerate(order):
        p_entries[idx] = (rank_pos + 1) * delta
    rho0_diag = np.diag(rho0_mat).real
    target = DensityMatrix(np.diag(lam).astype(complex))
    last_chain = None
    for _ in range(max_iter):
        cand = make_observable(np.diag(p_entries).astype(complex), provenance="diagonal-design")
        states = enumerate_limit_states(cand, lam)
        chain = check_convergence_order(cand, target, rho0, states)
        if chain.chain_ok:
            if not _anti_ordered(lam, p_entries):
                raise DesignError("chain holds but anti-ordering broke; inconsistent spectrum")
            return cand
        last_chain = chain
        head = rho0_diag - lam
        k = int(np.argmax(head))
        if head[k] <= 0:
            raise DesignError(
                "no level has initial population above the target one; chain cannot be fixed"
            )
        p_entries[k] *= growth
        # keep entries distinct for the permutation enumeration
        while np.min(np.abs(np.delete(p_entries, k) - p_entries[k])) < 1e-8:
            p_entries[k] *= 1.001
    worst = min(last_chain.v_others, key=lambda item: item[1])
    raise DesignError(
        f"no valid P within {max_iter} iterations; closest failure: "
        f"v(target)={last_chain.v_target:.6f}, v(initial)={last_chain.v_initial:.6f}, "
        f"blocking state {worst[0]} with v={worst[1]:.6f}"
    )


def _anti_ordered(lam: np.ndarray, p_entries: np.ndarray, gap_tol: float = EIGENGAP_TOL) -> bool:
    n = len(lam)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) <= gap_tol:
                continue
            if (lam[i] - lam[j]) * (p_entries[i] - p_entries[j]) >= 0:
                return False
    return True


def lemma2_anti_ordering(p: VirtualObservable, rho_f) -> bool:
    """Anti-ordering of P's spectrum against the target populations on P's eigenbasis."""
    rho_mat = _mat(rho_f)
    if float(np.linalg.norm(commutator(rho_mat, p.mat))) > 1e-8:
        return False
    populations = np.einsum(
        "ij,jk,ki->i", p.eig.basis.conj().T, rho_mat, p.eig.basis
    ).real
    return _anti_ordered(populations, p.eig.values)


def enumerate_limit_states(p: VirtualObservable, spectrum) -> list[DensityMatrix]:
    """All distinct permutations of the spectrum laid over P's eigenbasis.

    These are exactly the states commuting with a P of distinct eigenvalues.
    Duplicate permutations (repeated spectrum values) are emitted once, in
    first-occurrence order, so the output is deterministic.
    """
    spectrum = np.asarray(spectrum, dtype=float)
    n = p.dim
    if len(spectrum) != n:
        raise DesignError("spectrum length must match the observable dimension")
    if n > MAX_ENUMERATION_DIM:
        raise DesignError(
            f"permutation enumeration is factorial; refusing n = {n} > {MAX_ENUMERATION_DIM}"
        )
    if abs(float(np.sum(spectrum)) - 1.0) > 1e-8:
        raise DesignError("spectrum must sum to 1")
    gaps = np.diff(p.eig.values)
    if len(gaps) and float(np.max(gaps)) > -EIGENGAP_TOL:
        raise DesignError("P has (near-)colliding eigenvalues; limit states are not isolated")
    basis = p.eig.basis
    projectors = [np.outer(basis[:, k], basis[:, k].conj()) for k in range(n)]
    seen: set[tuple[float, ...]] = set()
    out: list[DensityMatrix] = []
    for perm in itertools.permutations(range(n)):
        key = tuple(float(spectrum[i]) for i in perm)
        if key in seen:
            continue
        seen.add(key)
        state = np.zeros((n, n), dtype=complex)
        for k, i in enumerate(perm):
            state += spectrum[i] * projectors[k]
        out.append(DensityMatrix((state + state.conj().T) / 2.0))
    return out


def check_convergence_order(p: VirtualObservable, rho_f, rho0, others) -> ChainCheck:
    """Check v(rho_f) < v(rho_0) < v(rho_s) for every non-target limit state.

    The target is matched among `others` by Frobenius distance and skipped.
    When rho_0 coincides with the target the first inequality degenerates to
    equality and is accepted.
    """
    rho_f_mat = _mat(rho_f)
    rho0_mat = _mat(rho0)
    v_target = trace_product(p.mat, rho_f_mat).real
    v_initial = trace_product(p.mat, rho0_mat).real
    v_others: list[tuple[str, float]] = []
    for idx, state in enumerate(others):
        state_mat = _mat(state)
        if np.sqrt(frobenius_distance_sq(state_mat, rho_f_mat)) < TARGET_MATCH_DIST:
            continue
        pops = np.diag(p.eig.basis.conj().T @ state_mat @ p.eig.basis).real
        label = "perm(" + ", ".join(f"{x:.4g}" for x in pops) + ")"
        v_others.append((label, trace_product(p.mat, state_mat).real))
    if not v_others:
        raise DesignError("no non-target limit states were supplied")
    min_other = min(v for _, v in v_others)
    at_target = np.sqrt(frobenius_distance_sq(rho0_mat, rho_f_mat)) < TARGET_MATCH_DIST
    target_ok = v_target < v_initial or at_target
    chain_ok = bool(target_ok and v_initial < min_other)
    margin = min(v_initial - v_target, min_other - v_initial)
    return ChainCheck(
        v_target=float(v_target),
        v_initial=float(v_initial),
        v_others=tuple(v_others),
        chain_ok=chain_ok,
        margin=float(margin),
    )


def su_basis(n: int) -> list[np.ndarray]:
    """Traceless Hermitian generators, non-Cartan first, normalized tr(T^2) = 2.

    Ordering: for each pair j < k (lexicographic) the symmetric then the
    antisymmetric off-diagonal generator; then the n - 1 diagonal ones.
    """
    gens: list[np.ndarray] = []
    for j in range(n):
        for k in range(j + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = 1.0
            sym[k, j] = 1.0
            gens.append(sym)
            asym = np.zeros((n, n), dtype=complex)
            asym[j, k] = -1.0j
            asym[k, j] = 1.0j
            gens.append(asym)
    for l in range(1, n):
        diag = np.zeros((n, n), dtype=complex)
        scale = np.sqrt(2.0 / (l * (l + 1)))
        for m in range(l):
            diag[m, m] = scale
        diag[l, l] = -l * scale
        gens.append(diag)
    return gens


def adjoint_matrix(p: VirtualObservable) -> np.ndarray:
    """Real (n^2-1)-square matrix of rho-bar -> [P, rho-bar] over su(n) coefficients."""
    n = p.dim
    gens = su_basis(n)
    dim = n * n - 1
    a = np.empty((dim, dim))
    comms = [commutator(p.mat, t) for t in gens]
    for col in range(dim):
        for row in range(dim):
            a[row, col] = (-0.25j * trace_product(gens[row], comms[col])).real
    return a


def rank_condition(p: VirtualObservable) -> tuple[bool, int]:
    """Rank of the non-Cartan rows of the adjoint matrix vs the full n^2 - n.

    Full rank means the only stationary states left are those commuting
    with P outright.
    """
    n = p.dim
    a = adjoint_matrix(p)
    required = n * n - n
    rank = _row_rank(a[:required, :])
    return rank == required, rank


def _row_rank(m: np.ndarray, tol: float = 1e-10) -> int:
    """Row rank by Gaussian elimination with per-column partial pivoting."""
    a = np.array(m, dtype=float)
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[piv, c]) <= tol:
            continue
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = a[r] / a[r, c]
        below = a[r + 1 :, c]
        a[r + 1 :] -= np.outer(below, a[r])
        r += 1
    return r


def limit_set_residual(p: VirtualObservable, rho) -> tuple[float, float]:
    """(off-diagonal, full) Frobenius norms of [rho, P].

    A vanishing off-diagonal part means rho sits in the wide limit set (the
    commutator is then diagonal and, being anti-Hermitian, purely
    imaginary); a vanishing full norm means rho commutes with P.
    """
    comm = commutator(_mat(rho), p.mat)
    full = float(np.linalg.norm(comm))
    off = comm - np.diag(np.diag(comm))
    return float(np.linalg.norm(off)), full


def build_certificate(
    model: SystemModel, frame: Frame, p: VirtualObservable, tol: float = 1e-8
) -> ConvergenceCertificate:
    """Assemble the full convergence certificate for a model/frame/P triple."""
    report = check_assumptions(model, tol)
    rho_f_frame = frame.target_state()
    rho0_frame = frame.initial_state()
    spectrum = eig_hermitian(rho_f_frame.mat).values
    states = enumerate_limit_states(p, spectrum)
    chain = check_convergence_order(p, rho_f_frame, rho0_frame, states)
    lemma2_ok = lemma2_anti_ordering(p, rho_f_frame)
    rank_ok, rank = rank_condition(p)
    residuals = tuple(limit_set_residual(p, s)[1] for s in states)
    return ConvergenceCertificate(
        chain=chain,
        lemma2_ok=lemma2_ok,
        rank_ok=rank_ok,
        rank=rank,
        limit_residuals=residuals,
        assumptions=report,
    )
