"""Mirror descent with the quartic entropy for noisy real phase retrieval."""

from .bregman import bregman_psi, entropy, grad_psi, grad_psi_star, mirror_scale, psi, theta_bound
from .landscape import (
    CriticalCatalogue,
    LandscapeParams,
    SnrReport,
    classify_region,
    convergence_params,
    critical_catalogue,
    dist_argmin_bound,
    hessian_deviation,
    region_masks,
    snr_check,
    verify_covering,
)
from .metrics import ErrorReport, dist_to_signs, evaluate, relative_error, success_threshold
from .objective import (
    ExpectedModel,
    bregman_f,
    crude_smoothness_bound,
    expected_f,
    expected_grad,
    expected_hessian,
    f_gradient,
    f_hessian,
    f_value,
    f_value_and_gradient,
    hessian_vector,
)
from .sensing import (
    MeasurementSet,
    NoiseSpec,
    SensingEnsemble,
    adjoint_apply,
    apply,
    cdp_ensemble,
    derive_seed,
    gaussian_ensemble,
    intensity,
    make_noise,
    measure,
)
from .solver import (
    Backtracking,
    ConstantStep,
    NumericalAbort,
    SolverConfig,
    SolverTrace,
    StopReason,
    default_step,
    mirror_descent,
    mirror_step,
    random_init,
    wirtinger_flow,
)
from .spectral import SpectralResult, power_iteration, spectral_init

__version__ = "0.1.0"
