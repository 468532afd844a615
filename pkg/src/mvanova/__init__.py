"""Multi-way ANOVA effects in paired multi-view data.

A hierarchical Bayesian model combining clustered factor analysis per view,
CCA-style shared latent variables across views, and ANOVA-type covariate
effects as population priors on the shared space, with full Gibbs-sampling
inference, cross-validated complexity selection and a synthetic-study harness.
"""

from .errors import (
    InfeasibleDesignError,
    InputValidationError,
    MvanovaError,
    NumericalError,
)
from .model import (
    Hyperparameters,
    ModelLayout,
    ModelState,
    PairedDataset,
    PopulationMarginal,
    log_joint,
    population_marginal,
    sample_from_model,
)
from .preprocess import PreprocessReport, center_scale_by_control
from .sampler import (
    PosteriorChain,
    SamplerConfig,
    deflate_add_component,
    diagnostics,
    gibbs_run,
    sign_fix,
)

__all__ = [
    "Hyperparameters",
    "InfeasibleDesignError",
    "InputValidationError",
    "ModelLayout",
    "ModelState",
    "MvanovaError",
    "NumericalError",
    "PairedDataset",
    "PopulationMarginal",
    "PosteriorChain",
    "PreprocessReport",
    "SamplerConfig",
    "center_scale_by_control",
    "deflate_add_component",
    "diagnostics",
    "gibbs_run",
    "log_joint",
    "population_marginal",
    "sample_from_model",
    "sign_fix",
]

__version__ = "0.1.0"
