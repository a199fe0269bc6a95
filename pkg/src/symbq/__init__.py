"""Bayesian quadrature with symmetry-invariant Gaussian-process priors.

The package estimates integrals by conditioning a GP on integrand
evaluations. Declaring the integrand invariant under a group of axis
sign-flips augments the kernel with the group average, which sharpens the
posterior over the integral without increasing the conditioning cost.
"""

from .embeddings import (
    BoxLebesgue,
    EmbeddingTable,
    GaussianIso,
    Measure,
    build_embedding_table,
    kernel_mean_base,
    kernel_mean_transformed,
    prior_variance_base,
    prior_variance_transformed,
)
from .engine import (
    BqState,
    HistoryEntry,
    Integrand,
    IntegralPosterior,
    RunSettings,
    acquisition_ivr,
    bq_posterior,
    make_state,
    mc_estimate,
    optimal_params_by_oversampling,
    run_active_bq,
    select_next,
)
from .errors import (
    ConfigurationError,
    FormatError,
    InvalidInputError,
    OracleFailureError,
    SingularGramError,
    SymbqError,
)
from .gp import Dataset, GpPosterior, SearchConfig, fit, log_marginal_likelihood, optimize_hyperparameters, predict
from .groups import (
    SignFlipGroup,
    SignVector,
    apply_sign,
    compose,
    full_flip_group,
    group_from_generators,
    identity_group,
    orbit,
    point_symmetry_group,
)
from .kernels import KernelSpec, RbfParams, gram, invariant_kernel, rbf
from .quadrature import adaptive_quad, nested_quad_2d, tensor_gauss_legendre
from .testbed import (
    FUNCTIONS,
    TestFunctionDescriptor,
    airy_psf,
    circular_gaussian,
    get_function,
    hennig1d,
    hennig2d,
    make_integrand,
    reference_integral,
    sombrero2d,
)

__version__ = "0.1.0"
