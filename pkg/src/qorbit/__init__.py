"""Lyapunov-based orbit tracking for closed quantum systems."""

__version__ = "0.1.0"

from .hermat import (
    DependentVectorsError,
    DimensionMismatchError,
    EigenConvergenceError,
    EigenPair,
    KernelError,
    NotHermitianError,
    NotUnitaryError,
    commutator,
    eig_hermitian,
    expm_i_hermitian,
    frobenius_distance_sq,
    gram_schmidt,
    trace_product,
    unitary_conjugate,
)
from .model import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    BlochVector,
    DensityMatrix,
    Frame,
    ModelError,
    NegativeEigenvalueError,
    SystemModel,
    TraceNotOneError,
    diagonalizing_frame,
    free_target_state,
    from_bloch,
    interaction_control_hamiltonian,
    make_frame,
    to_bloch,
    validate_density,
)
from .control import (
    ControlError,
    FieldSample,
    VirtualObservable,
    control_fields,
    curvature_at_target,
    lyapunov_rate,
    lyapunov_value,
    make_observable,
)
from .design import (
    ChainCheck,
    ConvergenceCertificate,
    DesignError,
    DesignParams,
    adjoint_matrix,
    build_certificate,
    check_convergence_order,
    design_diagonal_p,
    design_superposition_p,
    enumerate_limit_states,
    lemma2_anti_ordering,
    limit_set_residual,
    rank_condition,
    su_basis,
    weight_bound,
)
from .verify import (
    AssumptionReport,
    check_assumptions,
    fully_connected,
    strong_regularity,
    unitary_equivalent,
)
from .simulate import (
    ConservationReport,
    IntegratorError,
    SimConfig,
    Trajectory,
    TrajectorySample,
    conservation_report,
    performance_index,
    propagate_closed_loop,
    propagate_lab_closed_loop,
    replay_open_loop,
)

__all__ = [name for name in dir() if not name.startswith("_")]
