"""Turnpike analysis for linear-quadratic optimal control.

Decides when LQ problems exhibit exponential or velocity turnpike
behavior under weakened stabilizability/detectability assumptions,
solves the steady and finite-horizon problems, and measures decay
rates empirically.
"""

from .exceptions import (
    BlowUpError,
    ConditioningError,
    ConfigError,
    DegenerateRiccatiError,
    DimensionError,
    FitUndefinedError,
    HypothesisError,
    NonConvergenceError,
    NotASolutionError,
    NotControllableError,
    NotStabilizableError,
    TurnpikeError,
)
from .horizon import (
    SteeringResult,
    Trajectory,
    evaluate_cost,
    optimality_defect,
    solve_cg_oracle,
    solve_fixed_endpoint,
    solve_free_endpoint,
    steering_control,
)
from .metrics import (
    CTurnpikeReport,
    SpectralSplitReport,
    TurnpikeFit,
    VelocityReport,
    deviation_bound_check,
    deviation_curve,
    fit_exponential,
    spectral_split_decay,
    velocity_report,
    verify_c_turnpike,
)
from .riccati import (
    RiccatiResult,
    VelocityProjections,
    build_hamiltonian,
    check_weak_hautus_equivalence,
    lambda_triangularize,
    solve_are_antistrong,
    velocity_projections,
)
from .steady import (
    SteadySolution,
    hamiltonian_kernel_range,
    solve_steady,
    steady_system_solvable,
)
from .subspaces import (
    SubspaceBasis,
    SubspaceReport,
    detectable_projections,
    is_C_stabilizable,
    is_controllable,
    kalman_reduce,
    stabilizable_subspace,
    unobservable_space,
    undetectable_space,
    weak_hautus,
)
from .systems import (
    GridSpec,
    PdeSpec,
    SystemSpec,
    build_heat,
    build_wave,
    double_integrator,
    heat_turnpike_predicate,
    random_stable_system,
    wave_turnpike_predicate,
)

__version__ = "0.1.0"
