"""zphi: mean-field dynamics of two condensate modes driven by one quantized
field mode, on the (z, phi) phase cylinder.

The package evaluates the conserved energy and its exact derivatives, finds
and classifies stationary states, locates the critical excitation ratios of
the single-to-bistable transition, integrates trajectories with an energy
audit, and assembles figure-ready bifurcation, portrait and landscape data.
"""

from .core import (
    EPS_DOMAIN,
    DomainError,
    Gradient,
    Hessian,
    ModelParams,
    PhasePoint,
    PhysicalConfig,
    admissible,
    gradient,
    hamiltonian,
    hessian,
    strictly_admissible,
    to_model_params,
)
from .fixed_points import (
    AdmissibleZRange,
    BifurcationTable,
    CriticalParams,
    FixedPoint,
    FoldEvent,
    NoExclusionBandError,
    SweepRow,
    admissible_z_range,
    branch_sweep,
    critical_params,
    find_fixed_points,
    fixed_points_by_inversion,
    k_at_zplus,
    k_of_z,
    z_bounds,
)
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    classify_phase,
    eom,
    integrate,
    level_curve,
    separatrix_energy,
)
from .analysis import (
    LandscapeGrid,
    PortraitBundle,
    RegimeReport,
    SeparatrixData,
    SurveyTrajectory,
    TransitionPoint,
    TransitionScan,
    classify_regime,
    default_survey,
    landscape,
    portrait_bundle,
    transition_scan,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleZRange",
    "BifurcationTable",
    "CriticalParams",
    "DomainError",
    "EPS_DOMAIN",
    "FixedPoint",
    "FoldEvent",
    "Gradient",
    "Hessian",
    "IntegratorConfig",
    "LandscapeGrid",
    "ModelParams",
    "NoExclusionBandError",
    "PhasePoint",
    "PhysicalConfig",
    "PortraitBundle",
    "RegimeReport",
    "SeparatrixData",
    "SurveyTrajectory",
    "SweepRow",
    "Trajectory",
    "TransitionPoint",
    "TransitionScan",
    "admissible",
    "admissible_z_range",
    "branch_sweep",
    "classify_phase",
    "classify_regime",
    "critical_params",
    "default_survey",
    "eom",
    "find_fixed_points",
    "fixed_points_by_inversion",
    "gradient",
    "hamiltonian",
    "hessian",
    "integrate",
    "k_at_zplus",
    "k_of_z",
    "landscape",
    "level_curve",
    "portrait_bundle",
    "separatrix_energy",
    "strictly_admissible",
    "to_model_params",
    "transition_scan",
    "z_bounds",
    "__version__",
]
