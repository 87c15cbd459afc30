"""Bayesian recovery of temperature-dependent thermal conductivity from
transient temperature measurements.

The package solves the dimensionless one-dimensional nonlinear heat
conduction problem with a flux-heated face and a convectively cooled face,
and inverts noisy sensor histories for the conductivity curve kappa(theta)
by adaptive Metropolis-Hastings sampling.

Typical entry points:

- :class:`heatbayes.ConductivityEstimator` - sklearn-style fit/predict facade
- :mod:`heatbayes.experiments` - config-driven pipelines behind the CLI
- ``heatbayes`` console script - simulate / generate-data / sensitivity /
  infer / report
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    GewekeUndefinedError,
    HeatBayesError,
    NonPositiveConductivityError,
    SingularSystemError,
)
from .conductivity import (
    CubicByCoefficients,
    CubicByValues,
    PiecewiseLinear,
    TemperatureRange,
    cubic_is_positive_on,
    evaluate,
    model_from_dict,
    model_to_dict,
    piecewise_is_positive,
    values_to_coefficients,
)
from .forward import (
    DimensionlessProblem,
    Mesh,
    PhysicalConfig,
    TimeGrid,
    nondimensionalize,
    solve_forward,
    solve_forward_full,
)
from .measurements import MeasurementSet, generate_synthetic, load_measurements, save_measurements
from .sensitivity import SensitivityReport, identifiability_summary, sensitivity_matrix
from .inference import (
    PARAM_COEFFICIENTS,
    PARAM_PIECEWISE,
    PARAM_VALUES,
    Chain,
    GMRFPrior,
    LikelihoodContext,
    PositivityDomain,
    TruncatedNormal,
    TruncatedUniformImproper,
    load_chain,
    log_likelihood,
    log_prior,
    run_adaptive,
    run_mh,
    save_chain,
)
from .diagnostics import (
    CredibleBand,
    GewekeResult,
    PosteriorSummary,
    credible_band,
    geweke,
    summarize,
)
from .estimator import ConductivityEstimator

__all__ = [
    "__version__",
    # errors
    "HeatBayesError",
    "ConfigError",
    "NonPositiveConductivityError",
    "SingularSystemError",
    "GewekeUndefinedError",
    # conductivity models
    "CubicByCoefficients",
    "CubicByValues",
    "PiecewiseLinear",
    "TemperatureRange",
    "evaluate",
    "values_to_coefficients",
    "cubic_is_positive_on",
    "piecewise_is_positive",
    "model_to_dict",
    "model_from_dict",
    # forward problem
    "PhysicalConfig",
    "DimensionlessProblem",
    "Mesh",
    "TimeGrid",
    "nondimensionalize",
    "solve_forward",
    "solve_forward_full",
    # measurements
    "MeasurementSet",
    "generate_synthetic",
    "save_measurements",
    "load_measurements",
    # sensitivity
    "SensitivityReport",
    "sensitivity_matrix",
    "identifiability_summary",
    # inference
    "PARAM_COEFFICIENTS",
    "PARAM_VALUES",
    "PARAM_PIECEWISE",
    "PositivityDomain",
    "TruncatedUniformImproper",
    "TruncatedNormal",
    "GMRFPrior",
    "LikelihoodContext",
    "log_prior",
    "log_likelihood",
    "Chain",
    "run_mh",
    "run_adaptive",
    "save_chain",
    "load_chain",
    # diagnostics
    "GewekeResult",
    "geweke",
    "PosteriorSummary",
    "summarize",
    "CredibleBand",
    "credible_band",
    # estimator
    "ConductivityEstimator",
]
