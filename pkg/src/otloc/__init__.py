"""Non-coherent multi-array source localization via transport barycenters.

Per-array covariance observations are fused into one spatial power
spectrum by solving an entropy-regularized optimal-transport barycenter
problem whose marginals are tied to the observations through lifted
forward operators. Includes a near-field simulator, non-coherent MUSIC and
MVDR baselines, and a Monte-Carlo harness for misalignment studies.
"""

from .arrays import (
    ArrayGeometry,
    ForwardOperator,
    build_forward_operator,
    gamma_apply,
    lift_covariance,
    steering_matrix,
    steering_vector,
    unlift_covariance,
)
from .baselines import PseudoSpectrum, noncoherent_music, noncoherent_mvdr
from .config import Config, build_scenario, load_config
from .errors import ConvergenceError
from .fusion import (
    FusionProblem,
    FusionResult,
    SolverState,
    dual_objective,
    fuse,
    newton_solve_lambda,
    residuals,
    update_barycenter,
    update_v,
)
from .harness import TrialResult, extract_peaks, localization_error, mc_sweep, run_trial
from .simulate import (
    Scenario,
    default_scenario,
    exact_covariances,
    generate_snapshots,
    rotate_array,
    sample_covariance,
)
from .spatial import Grid, cost_matrix, make_grid
from .transport import gibbs_kernel, lp_transport_oracle, sinkhorn, transport_cost

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "Config",
    "ConvergenceError",
    "ForwardOperator",
    "FusionProblem",
    "FusionResult",
    "Grid",
    "PseudoSpectrum",
    "Scenario",
    "SolverState",
    "TrialResult",
    "build_forward_operator",
    "build_scenario",
    "cost_matrix",
    "default_scenario",
    "dual_objective",
    "exact_covariances",
    "extract_peaks",
    "fuse",
    "gamma_apply",
    "generate_snapshots",
    "gibbs_kernel",
    "lift_covariance",
    "load_config",
    "localization_error",
    "lp_transport_oracle",
    "make_grid",
    "mc_sweep",
    "newton_solve_lambda",
    "noncoherent_music",
    "noncoherent_mvdr",
    "residuals",
    "rotate_array",
    "run_trial",
    "sample_covariance",
    "sinkhorn",
    "steering_matrix",
    "steering_vector",
    "transport_cost",
    "unlift_covariance",
    "update_barycenter",
    "update_v",
]
