"""Scikit-learn style front end over the sampling pipeline.

``ConductivityEstimator.fit`` consumes a :class:`~heatbayes.measurements.MeasurementSet`
and runs the two-phase sampler; afterwards the posterior mean curve is
available through ``predict`` and uncertainty through ``credible_band``.
The heavy lifting lives in :mod:`heatbayes.inference` / :mod:`heatbayes.diagnostics`;
this class only wires the pieces together behind the usual estimator
conventions (``get_params`` / ``set_params`` / trailing-underscore fitted
attributes), so it composes with sklearn tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conductivity import (
    CubicByCoefficients,
    PiecewiseLinear,
    TemperatureRange,
    evaluate,
    values_to_coefficients,
)
from .diagnostics import credible_band, summarize
from .errors import ConfigError
from .forward import DimensionlessProblem, Mesh, TimeGrid
from .inference import (
    PARAM_COEFFICIENTS,
    PARAM_PIECEWISE,
    PARAM_VALUES,
    LikelihoodContext,
    PositivityDomain,
    TruncatedUniformImproper,
    attach_derived_coefficients,
    run_adaptive,
    run_mh,
)

__all__ = ["ConductivityEstimator"]

_PARAM_KINDS = (PARAM_COEFFICIENTS, PARAM_VALUES, PARAM_PIECEWISE)


def _grid_from_times(times: np.ndarray) -> TimeGrid:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ConfigError("measurement times must be a 1-D array with at least 2 entries")
    steps = np.diff(times, prepend=0.0)
    dtau = steps[0]
    if dtau <= 0 or not np.allclose(steps, dtau, rtol=1e-9, atol=0.0):
        raise ConfigError("measurement times must be uniformly spaced starting at one step")
    return TimeGrid(dtau=float(dtau), n_steps=times.size)


class ConductivityEstimator(BaseEstimator):
    """Posterior estimate of a temperature-dependent conductivity curve.

    Parameters mirror the config schema: the parametrization of the unknown
    curve, the sampler budgets, and the ambient coupling of the forward
    problem. The measured time axis is taken from the data itself.

    Examples
    --------
    >>> est = ConductivityEstimator(n_adapt=2000, n_steps=500, burn_in=100)
    >>> est.fit(measurements)                        # doctest: +SKIP
    >>> est.predict(np.linspace(1.2, 4.0, 50))       # doctest: +SKIP
    """

    def __init__(
        self,
        parametrization: str = PARAM_VALUES,
        prior=None,
        n_adapt: int = 20000,
        n_steps: int = 5000,
        burn_in: int = 1000,
        seed: int = 7,
        n_knots: int = 100,
        n_elements: int = 5,
        h: float = 0.36,
        theta_inf: float = 1.0,
        band_level: float = 0.99,
        grid_points: int = 200,
    ):
        self.parametrization = parametrization
        self.prior = prior
        self.n_adapt = n_adapt
        self.n_steps = n_steps
        self.burn_in = burn_in
        self.seed = seed
        self.n_knots = n_knots
        self.n_elements = n_elements
        self.h = h
        self.theta_inf = theta_inf
        self.band_level = band_level
        self.grid_points = grid_points

    # -- fitting ---------------------------------------------------------

    def fit(self, X, y=None):
        """Sample the posterior for the measurement set ``X``."""
        if self.parametrization not in _PARAM_KINDS:
            raise ConfigError(
                f"parametrization must be one of {_PARAM_KINDS}, got {self.parametrization!r}"
            )
        measurements = X
        problem = DimensionlessProblem(h=self.h, theta_inf=self.theta_inf)
        mesh = Mesh(self.n_elements)
        grid = _grid_from_times(measurements.times)

        self.temperature_range_ = TemperatureRange.from_measurements(measurements.d)
        theta_nodes = None
        knot_grid = None
        if self.parametrization == PARAM_VALUES:
            theta_nodes = self.temperature_range_.nodes(4)
        elif self.parametrization == PARAM_PIECEWISE:
            knot_grid = self.temperature_range_.nodes(self.n_knots)
        self.theta_nodes_ = theta_nodes
        self.knot_grid_ = knot_grid

        ctx = LikelihoodContext(
            problem=problem,
            mesh=mesh,
            grid=grid,
            measurements=measurements,
            parametrization=self.parametrization,
            theta_nodes=theta_nodes,
            knot_grid=knot_grid,
        )
        domain = PositivityDomain(
            parametrization=self.parametrization,
            temperature_range=self.temperature_range_,
            theta_nodes=theta_nodes,
        )
        prior = self.prior if self.prior is not None else TruncatedUniformImproper(domain)

        if self.parametrization == PARAM_COEFFICIENTS:
            init = np.array([0.0, 0.0, 0.0, 1.0])
        else:
            init = np.ones(ctx.n_parameters)

        seeds = np.random.SeedSequence(self.seed).spawn(1)[0].generate_state(2, np.uint64)
        covariance, adaptive_chain = run_adaptive(
            init,
            prior,
            ctx,
            n_adapt=self.n_adapt,
            seed=int(seeds[0]),
            parametrization=self.parametrization,
        )
        chain = run_mh(
            adaptive_chain.samples[-1],
            covariance,
            prior,
            ctx,
            n_steps=self.n_steps,
            seed=int(seeds[1]),
            burn_in=self.burn_in,
            parametrization=self.parametrization,
        )
        if self.parametrization == PARAM_VALUES:
            attach_derived_coefficients(chain, theta_nodes)

        self.chain_ = chain
        self.adaptive_chain_ = adaptive_chain
        self.proposal_covariance_ = covariance
        self.acceptance_ratio_ = chain.acceptance_ratio
        self.summary_ = summarize(chain)
        self.mean_params_ = self.summary_.mean
        self.band_ = self.credible_band()
        return self

    # -- post-fit API ------------------------------------------------------

    def predict(self, theta):
        """Posterior-mean conductivity at the temperatures ``theta``.

        The curve is linear in the parameters for every parametrization, so
        the mean curve equals the curve of the posterior-mean parameters.
        """
        check_is_fitted(self, "chain_")
        theta = np.asarray(theta, dtype=float)
        if self.parametrization == PARAM_COEFFICIENTS:
            model = CubicByCoefficients(self.mean_params_)
        elif self.parametrization == PARAM_VALUES:
            model = CubicByCoefficients(
                values_to_coefficients(self.theta_nodes_, self.mean_params_)
            )
        else:
            model = PiecewiseLinear(self.knot_grid_, self.mean_params_)
        return evaluate(model, theta)

    def credible_band(self, level: float | None = None, grid_points: int | None = None):
        """Pointwise credible band over the measured temperature range."""
        check_is_fitted(self, "chain_")
        return credible_band(
            self.chain_,
            self.parametrization,
            level=self.band_level if level is None else level,
            theta_nodes=self.theta_nodes_,
            knot_grid=self.knot_grid_,
            temperature_range=self.temperature_range_,
            grid_points=self.grid_points if grid_points is None else grid_points,
        )
