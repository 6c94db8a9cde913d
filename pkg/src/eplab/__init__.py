"""Non-Hermitian effective Hamiltonians of open quantum systems.

Exceptional points, label tracking, phase rigidity, external mixing of
eigenfunctions and the equilibrium criterion, with a batch CLI on top.
"""

from ._accel import backend_name
from .errors import (
    ConfigError,
    DivergingEM,
    DomainError,
    EncirclingError,
    EplabError,
    EpNotFound,
    NoConvergence,
    NumericalFailure,
    SpecificationError,
    TrackingError,
)
from .model import (
    Channel,
    Conventions,
    HamiltonianMatrix,
    Level,
    ParameterPath,
    ParameterPoint,
    SystemSpec,
    build_h0,
    build_hamiltonian,
    fixture_spec,
    spec_from_arrays,
    validate_spec,
)
from .spectral import EigenSystem, EigenvalueRecord, biorthonormalize, eigendecompose, eigendecompose_stack
from .tracking import Crossing, TrajectorySet, classify_crossing, track, track_family
from .eplocator import (
    Direct2x2,
    EncircleResult,
    EpCandidate,
    SpecFamily,
    encircle,
    find_ep_2x2,
    find_ep_nd,
)
from .observables import (
    EquilibriumVerdict,
    MixingReport,
    Thresholds,
    detect_equilibrium,
    em_norm,
    mixing_coefficients,
    phase_rigidity,
    shannon_entropy,
)
from .harness import (
    PlateauReport,
    SweepRow,
    compute_sweep,
    detect_plateau,
    evaluate_point,
    find_equilibrium,
    run_sweep,
)
from .config import RunConfig, dump_config, parse_config
from .output import emit_results

__version__ = "0.1.0"
