"""Quantum-Zeno-protected GHZ Ramsey metrology, simulated.

The subpackages build up from dense linear algebra (:mod:`qzd.numerics`)
through operators, stochastic noise, time evolution and Zeno-subspace
analysis to estimation (:mod:`qzd.metrology`) and a batch front end
(:mod:`qzd.cli`).
"""
from .errors import (
    CalibrationFailed,
    ConfigInvalid,
    DegenerateProbability,
    DimMismatch,
    FitDiverged,
    IndexOutOfRange,
    NotHermitian,
    NotProjector,
    QZDError,
    ShapeMismatch,
    SystemTooSmall,
    ThresholdNotBracketed,
)
from .evolve import (
    ProtocolConfig,
    PulseSchedule,
    RamseyTrace,
    Trotter,
    dd_schedule,
    final_density_matrix,
    fringe_sample_times,
    propagate,
    ramsey_ensemble,
    trotter_step,
)
from .metrology import (
    FitResult,
    PrecisionPoint,
    acdd_qfi_scan,
    cfi_binary,
    estimate_delta_omega_from_simulation,
    fit_ramsey,
    fringe_contrast,
    kth_scan,
    p0_model,
    precision_parallel,
    precision_sequential,
    precision_trace,
    qfi_mixed,
    qfi_pure,
)
from .noise import NoiseEnsemble, NoiseSpec, calibrate_sigma, generate
from .numerics import eig_hermitian, expm_ih_t, kron, op_distance
from .operators import (
    CouplingKind,
    EncodingSpec,
    SystemSpec,
    collective,
    ghz_circuit,
    ghz_state,
    h_coupling,
    h_encoding,
    h_nmr,
    pauli_on,
)
from .zeno import (
    CompatibilityReport,
    ProjectorDecomposition,
    eigenprojectors,
    ghz_compatibility,
    projective_zeno_error,
    strong_coupling_error,
    zeno_hamiltonian,
)

__version__ = "0.1.0"
