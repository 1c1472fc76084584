"""Ground-state local convertibility in the periodic XY spin chain.

Exact ground states, block Renyi entropies, LOCC/ELOCC classification of
neighbouring ground states, phase-boundary detection and finite-size scaling.
"""

from .model import ModelParams, HamiltonianOperator, build_dense_hamiltonian, apply_hamiltonian
from .eigensolver import (
    ConvergenceError,
    GroundStateResult,
    LowSpectrum,
    ground_state,
    low_spectrum,
    select_in_degenerate_subspace,
)
from .entanglement import (
    AlphaGrid,
    BlockSpec,
    RenyiCurve,
    RenyiLimit,
    SchmidtSpectrum,
    reduced_density_matrix,
    renyi_curve,
    renyi_entropy,
    schmidt_spectrum,
)
from .convertibility import (
    Conversion,
    ConvertibilityVerdict,
    Dominance,
    Majorization,
    MajorizationProfile,
    classify_pair,
    elocc_compare,
    majorization_compare,
    sign_of_dS,
)
from .sweep import (
    Boundary,
    PhaseCell,
    PhaseDiagramGrid,
    SignMap,
    SweepConfig,
    detect_boundaries,
    run_phase_diagram,
    run_sign_sweep,
)
from .scaling import FitError, ScalingResult, scaling_fit

__version__ = "0.1.0"
