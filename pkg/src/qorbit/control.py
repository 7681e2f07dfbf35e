"""Lyapunov function V = tr(P rho), its derivatives, and the feedback law.

Along d rho/dt = -i [sum_m f_m H_m(t), rho] the value V = tr(P rho) obeys
dV/dt = -sum_m f_m tr(i H_m(t) [rho, P]), so the feedback
f_m = -k_m tr(i H_m(t) [P, rho]) gives dV/dt = -sum f_m^2 / k_m <= 0:
V is nonincreasing along the closed loop by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermat import (
    EigenPair,
    KernelError,
    as_cmatrix,
    commutator,
    eig_hermitian,
    require_hermitian,
    trace_product,
)
from .model import _mat

IMAG_RESIDUE_TOL = 1e-12
PSD_TOL = 1e-10


class ControlError(KernelError):
    pass


@dataclass(frozen=True)
class VirtualObservable:
    """The designed Hermitian observable P with its spectrum and origin."""

    mat: np.ndarray
    eig: EigenPair
    provenance: str = "given"

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


def make_observable(mat, provenance: str = "given") -> VirtualObservable:
    """Validate Hermiticity and positive semidefiniteness, then wrap."""
    m = require_hermitian(as_cmatrix(mat))
    eig = eig_hermitian(m)
    if eig.values[-1] < -PSD_TOL:
        raise ControlError(
            f"observable must be positive semidefinite (min eigenvalue {eig.values[-1]:.3e})"
        )
    return VirtualObservable(mat=m, eig=eig, provenance=provenance)


@dataclass(frozen=True)
class FieldSample:
    """Control amplitudes f_m at one instant (arbitrary units)."""

    t: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ControlError(f"non-finite field values at t={self.t}")
        object.__setattr__(self, "values", v)


def lyapunov_value(p: VirtualObservable, rho) -> float:
    """V = tr(P rho); real for Hermitian inputs."""
    val = trace_product(p.mat, _mat(rho))
    if abs(val.imag) > 1e-10:
        raise ControlError(f"tr(P rho) has imaginary residue {val.imag:.3e}")
    return float(val.real)


def _field_traces(p_mat: np.ndarray, rho_mat: np.ndarray, hms_t) -> np.ndarray:
    """Returns tr(i H_m(t) [rho, P]) for each control, asserting realness."""
    comm = commutator(rho_mat, p_mat)
    out = np.empty(len(hms_t), dtype=float)
    for m, hm in enumerate(hms_t):
        val = 1j * trace_product(as_cmatrix(hm), comm)
        if abs(val.imag) > IMAG_RESIDUE_TOL * max(1.0, abs(val.real)):
            raise ControlError(f"imaginary residue {val.imag:.3e} in field trace")
        out[m] = val.real
    return out


def control_fields(p: VirtualObservable, rho, hms_t, gains, t: float = 0.0) -> FieldSample:
    """Feedback law f_m = -k_m tr(i H_m(t) [P, rho]) = k_m tr(i H_m(t) [rho, P])."""
    gains = np.asarray(gains, dtype=float)
    if len(hms_t) != len(gains):
        raise ControlError("one gain per control Hamiltonian")
    if np.any(gains <= 0):
        raise ControlError("gains must be positive")
    traces = _field_traces(p.mat, _mat(rho), hms_t)
    return FieldSample(t=t, values=gains * traces)


def lyapunov_rate(p: VirtualObservable, rho, hms_t, fields: FieldSample) -> float:
    """dV/dt = -sum_m f_m tr(i H_m(t) [rho, P]) for the given field values."""
    traces = _field_traces(p.mat, _mat(rho), hms_t)
    return float(-np.dot(np.asarray(fields.values, dtype=float), traces))


def curvature_at_target(p: VirtualObservable, rho_f, hms_t, fields=None) -> float:
    """Second-derivative probe sum_m f_m^2 tr([H_m, rho_f][H_m, P]) at the target.

    Unit probe fields are used unless explicit values are given; the sign is
    what matters, and it is positive exactly when every level pair coupled by
    some H_m is anti-ordered between the spectra of rho_f and P.
    """
    rho_mat = _mat(rho_f)
    comm_norm = float(np.linalg.norm(commutator(rho_mat, p.mat)))
    if comm_norm > 1e-8:
        raise ControlError(
            f"target must commute with P (||[rho_f, P]|| = {comm_norm:.3e})"
        )
    if fields is None:
        weights = np.ones(len(hms_t))
    else:
        weights = np.asarray(fields.values if isinstance(fields, FieldSample) else fields, dtype=float)
    total = 0.0
    for w, hm in enumerate(hms_t):
        a = commutator(as_cmatrix(hm), rho_mat)
        b = commutator(as_cmatrix(hm), p.mat)
        val = trace_product(a, b)
        if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
            raise ControlError(f"imaginary residue {val.imag:.3e} in curvature trace")
        total += float(weights[w] ** 2) * val.real
    return total
