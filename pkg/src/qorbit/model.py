"""Domain types and frame changes for the controlled / free-target pair.

The controlled system is d/dt rho_hat = -i [H0 + sum_m f_m(t) H_m, rho_hat]
(hbar = 1); the target evolves freely under the same H0. Conjugating by
W(t) = W0 exp(+i H0 t) removes the drift and freezes the target, turning
orbit tracking into state transfer. W0 = I gives the interaction picture;
W0 = U_f additionally diagonalizes the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermat import (
    EigenPair,
    KernelError,
    as_cmatrix,
    eig_hermitian,
    expm_i_hermitian,
    require_hermitian,
)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

DENSITY_TOL = 1e-10
FRAME_KINDS = ("schrodinger", "interaction", "diagonalized")


class ModelError(KernelError):
    pass


class TraceNotOneError(ModelError):
    pass


class NegativeEigenvalueError(ModelError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace state. Build via validate_density."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def purity(self) -> float:
        return float(np.sum(self.mat.real**2 + self.mat.imag**2))


def _mat(x) -> np.ndarray:
    return x.mat if isinstance(x, DensityMatrix) else as_cmatrix(x)


def validate_density(m) -> DensityMatrix:
    """Wrap a matrix as a DensityMatrix, checking every invariant."""
    m = require_hermitian(_mat(m), tol=DENSITY_TOL)
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > DENSITY_TOL:
        raise TraceNotOneError(f"trace is {tr:.12g}, expected 1")
    lo = float(eig_hermitian(m).values[-1])
    if lo < -DENSITY_TOL:
        raise NegativeEigenvalueError(f"smallest eigenvalue {lo:.3e} is negative")
    return DensityMatrix(mat=(m + m.conj().T) / 2.0)


@dataclass(frozen=True)
class SystemModel:
    """Free Hamiltonian, control Hamiltonians with gains, and the two initial states."""

    h0: np.ndarray
    controls: tuple[np.ndarray, ...]
    gains: tuple[float, ...]
    rho0: DensityMatrix
    rho_f0: DensityMatrix

    def __post_init__(self):
        object.__setattr__(self, "h0", require_hermitian(self.h0))
        controls = tuple(require_hermitian(h) for h in self.controls)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "gains", tuple(float(k) for k in self.gains))
        if len(self.controls) < 1:
            raise ModelError("at least one control Hamiltonian is required")
        if len(self.gains) != len(self.controls):
            raise ModelError("one gain per control Hamiltonian")
        if any(k <= 0 for k in self.gains):
            raise ModelError("all gains must be positive")
        n = self.h0.shape[0]
        for h in self.controls:
            if h.shape[0] != n:
                raise ModelError("control dimension differs from H0")
        if self.rho0.dim != n or self.rho_f0.dim != n:
            raise ModelError("state dimension differs from H0")

    @property
    def dim(self) -> int:
        return self.h0.shape[0]


@dataclass(frozen=True)
class Frame:
    """A picture change W(t) = W0 exp(+i H0 t) with the cached H0 spectrum."""

    kind: str
    h0_eig: EigenPair
    model: SystemModel
    uf: np.ndarray | None = None

    @property
    def w0(self) -> np.ndarray:
        if self.uf is not None:
            return self.uf
        return np.eye(self.model.dim, dtype=complex)

    def unitary(self, t: float) -> np.ndarray:
        """W(t) mapping lab states into this frame (identity for schrodinger)."""
        if self.kind == "schrodinger":
            return np.eye(self.model.dim, dtype=complex)
        w = expm_i_hermitian(self.model.h0, t, +1, eig=self.h0_eig)
        if self.uf is not None:
            w = self.uf @ w
        return w

    def initial_state(self) -> DensityMatrix:
        return DensityMatrix(self.w0 @ self.model.rho0.mat @ self.w0.conj().T)

    def target_state(self) -> DensityMatrix:
        """The stationary target in this frame (D_f when diagonalized)."""
        return DensityMatrix(self.w0 @ self.model.rho_f0.mat @ self.w0.conj().T)


def make_frame(model: SystemModel, kind: str) -> Frame:
    if kind not in FRAME_KINDS:
        raise ModelError(f"unknown frame kind {kind!r}")
    h0_eig = eig_hermitian(model.h0)
    uf = None
    if kind == "diagonalized":
        uf = eig_hermitian(model.rho_f0.mat).basis.conj().T
        d_f = uf @ model.rho_f0.mat @ uf.conj().T
        off = d_f - np.diag(np.diag(d_f))
        if float(np.linalg.norm(off)) > 1e-8:
            raise ModelError("U_f failed to diagonalize the target state")
    return Frame(kind=kind, h0_eig=h0_eig, model=model, uf=uf)


def diagonalizing_frame(model: SystemModel) -> Frame:
    """Frame whose W0 = U_f makes the target diagonal with descending entries."""
    return make_frame(model, "diagonalized")


def interaction_control_hamiltonian(frame: Frame, m_index: int, t: float) -> np.ndarray:
    """H_m seen in the frame at time t: W(t) H_m W(t)^dagger."""
    if not 0 <= m_index < len(frame.model.controls):
        raise ModelError(f"control index {m_index} out of range")
    if t < 0:
        raise ModelError("t must be nonnegative")
    hm = frame.model.controls[m_index]
    if frame.kind == "schrodinger":
        return hm.copy()
    w = frame.unitary(t)
    return w @ hm @ w.conj().T


def free_target_state(frame: Frame, t: float) -> DensityMatrix:
    """Lab-frame target exp(-i H0 t) rho_f0 exp(+i H0 t), from the cached spectrum."""
    if t < 0:
        raise ModelError("t must be nonnegative")
    u = expm_i_hermitian(frame.model.h0, t, -1, eig=frame.h0_eig)
    return DensityMatrix(u @ frame.model.rho_f0.mat @ u.conj().T)


@dataclass(frozen=True)
class BlochVector:
    """Two-level state as rho = (I + x sx + y sy + z sz) / 2."""

    x: float
    y: float
    z: float

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))


def to_bloch(rho) -> BlochVector:
    m = _mat(rho)
    if m.shape != (2, 2):
        raise ModelError("Bloch representation is only defined for n = 2")
    return BlochVector(
        x=float(2.0 * m[0, 1].real),
        y=float(-2.0 * m[0, 1].imag),
        z=float(m[0, 0].real - m[1, 1].real),
    )


def from_bloch(b: BlochVector) -> DensityMatrix:
    r_sq = b.x**2 + b.y**2 + b.z**2
    if r_sq > 1.0 + 1e-9:
        raise ModelError(f"Bloch norm {np.sqrt(r_sq):.6f} exceeds 1")
    m = 0.5 * np.array(
        [[1.0 + b.z, b.x - 1j * b.y], [b.x + 1j * b.y, 1.0 - b.z]], dtype=complex
    )
    return DensityMatrix(mat=m)
