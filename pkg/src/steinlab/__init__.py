"""steinlab: a numerical laboratory for the multivariate Gaussian Stein equation.

Solves Delta f - x.grad f = h - E h(Z) via the heat-semigroup representation,
certifies the (1 + log) Holder regularity of the Hessian and Laplacian of the
solution with explicit constants, reproduces the cross-partial sharpness
example, and tests the resulting Berry-Esseen bounds in exact 1-Wasserstein
distance on simulated central-limit sums.
"""

__version__ = "0.1.0"

from .constants import (
    BoundReport,
    berry_esseen_bound,
    c1,
    c2,
    centered_moment_constant,
    cor_constant,
    higher_order_constant,
)
from .gaussian import (
    ExpectationSpec,
    RngStream,
    default_expectation,
    expect,
    gaussian_norm_moment,
    sample_gaussian,
)
from .regularity import (
    ModulusSample,
    PairPlan,
    RaicGap,
    fit_log_necessity,
    opnorm,
    probe_hessian_modulus,
    probe_laplacian_modulus,
    raic_asymptotic_ratio,
    raic_cross_partial_gap,
)
from .special import MultiIndex, gamma, hermite
from .stein import SteinConfig, SteinSolution
from .targets import TestFunction, builtin, check_holder
from .transport import EmpiricalSample, w1_dual_lower_bound, w1_exact
from .clt import CltExperiment, builtin_source, run_experiment, simulate_sum

__all__ = [
    "BoundReport",
    "CltExperiment",
    "EmpiricalSample",
    "ExpectationSpec",
    "ModulusSample",
    "MultiIndex",
    "PairPlan",
    "RaicGap",
    "RngStream",
    "SteinConfig",
    "SteinSolution",
    "TestFunction",
    "berry_esseen_bound",
    "builtin",
    "builtin_source",
    "c1",
    "c2",
    "centered_moment_constant",
    "check_holder",
    "cor_constant",
    "default_expectation",
    "expect",
    "fit_log_necessity",
    "gamma",
    "gaussian_norm_moment",
    "hermite",
    "higher_order_constant",
    "opnorm",
    "probe_hessian_modulus",
    "probe_laplacian_modulus",
    "raic_asymptotic_ratio",
    "raic_cross_partial_gap",
    "run_experiment",
    "sample_gaussian",
    "simulate_sum",
    "w1_dual_lower_bound",
    "w1_exact",
]
