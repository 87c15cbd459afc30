"""Convergence diagnostics and posterior post-processing.

The Geweke check compares the mean of the first 10% of a (post-burn-in)
series against the mean of its last 50%: the chain passes when the relative
drift is at most 1e-2 against either mean,

    |m10 - m50| / |m10| <= 1e-2   and   |m10 - m50| / |m50| <= 1e-2.

Summaries report, per parameter, the mean and standard deviation across
retained states, the relative standard deviation in percent (100 sigma/mu),
and - when a ground truth is known - the relative error in percent.

Credible bands are pointwise empirical quantiles of the conductivity curve:
each retained state is expanded to kappa(theta) on a grid, and the band is
the (1 - level)/2 and (1 + level)/2 quantiles plus the mean at every grid
point.  All three curve parametrizations are linear maps from the parameter
vector to curve values, so the expansion is a single matrix product.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .conductivity import TemperatureRange
from .errors import ConfigError, GewekeUndefinedError
from .inference import (
    PARAM_COEFFICIENTS,
    PARAM_PIECEWISE,
    PARAM_VALUES,
    Chain,
)

__all__ = [
    "GewekeResult",
    "geweke",
    "PosteriorSummary",
    "summarize",
    "CredibleBand",
    "credible_band",
    "curve_samples",
    "save_band_csv",
    "load_band_csv",
]

GEWEKE_THRESHOLD = 1e-2


@dataclass(frozen=True)
class GewekeResult:
    m10: float
    m50: float
    passed: bool


def geweke(series, threshold: float = GEWEKE_THRESHOLD) -> GewekeResult:
    """Early-mean vs late-mean drift check on one scalar series."""
    series = np.asarray(series, dtype=float).ravel()
    if series.size < 10:
        raise ConfigError(f"series too short for a Geweke check ({series.size} < 10)")
    n = series.size
    m10 = float(np.mean(series[: max(1, int(0.1 * n))]))
    m50 = float(np.mean(series[int(0.5 * n) :]))
    if m10 == 0.0 or m50 == 0.0:
        raise GewekeUndefinedError(
            f"segment mean is zero (m10={m10}, m50={m50}); relative drift undefined"
        )
    drift = m10 - m50
    passed = abs(drift / m10) <= threshold and abs(drift / m50) <= threshold
    return GewekeResult(m10=m10, m50=m50, passed=passed)


@dataclass(eq=False)
class PosteriorSummary:
    """Per-parameter posterior statistics over the retained states."""

    mean: np.ndarray
    std: np.ndarray
    rel_std_pct: np.ndarray
    rel_error_pct: np.ndarray | None
    truth: np.ndarray | None
    geweke_m10: np.ndarray
    geweke_m50: np.ndarray
    geweke_pass: np.ndarray  # bool per parameter
    geweke_undefined: np.ndarray  # bool per parameter
    converged: bool
    n_retained: int
    burn_in: int

    def to_dict(self) -> dict:
        def listify(arr):
            return None if arr is None else np.asarray(arr).tolist()

        return {
            "mean": listify(self.mean),
            "std": listify(self.std),
            "rel_std_pct": listify(self.rel_std_pct),
            "rel_error_pct": listify(self.rel_error_pct),
            "truth": listify(self.truth),
            "geweke_m10": listify(self.geweke_m10),
            "geweke_m50": listify(self.geweke_m50),
            "geweke_pass": listify(self.geweke_pass),
            "geweke_undefined": listify(self.geweke_undefined),
            "converged": self.converged,
            "n_retained": self.n_retained,
            "burn_in": self.burn_in,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PosteriorSummary":
        def arr(key, dtype=float):
            value = data.get(key)
            return None if value is None else np.asarray(value, dtype=dtype)

        return cls(
            mean=arr("mean"),
            std=arr("std"),
            rel_std_pct=arr("rel_std_pct"),
            rel_error_pct=arr("rel_error_pct"),
            truth=arr("truth"),
            geweke_m10=arr("geweke_m10"),
            geweke_m50=arr("geweke_m50"),
            geweke_pass=arr("geweke_pass", bool),
            geweke_undefined=arr("geweke_undefined", bool),
            converged=bool(data["converged"]),
            n_retained=int(data["n_retained"]),
            burn_in=int(data["burn_in"]),
        )


def summarize(chain: Chain, burn_in: int | None = None, truth=None) -> PosteriorSummary:
    """Posterior statistics for every parameter of a chain.

    A failed (or undefined) Geweke check on any parameter marks the summary
    as non-converged, but the statistics are still reported.
    """
    if burn_in is None:
        burn_in = chain.burn_in
    if not 0 <= burn_in < chain.n_steps:
        raise ConfigError(f"burn_in must be in [0, {chain.n_steps}), got {burn_in}")
    retained = chain.samples[burn_in:]
    n = retained.shape[1]

    mean = retained.mean(axis=0)
    std = retained.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_std = 100.0 * std / np.abs(mean)

    truth_arr = None
    rel_error = None
    if truth is not None:
        truth_arr = np.asarray(truth, dtype=float).ravel()
        if truth_arr.size != n:
            raise ConfigError(f"truth has {truth_arr.size} entries, chain has {n} parameters")
        rel_error = 100.0 * np.abs(mean - truth_arr) / np.abs(truth_arr)

    m10 = np.empty(n)
    m50 = np.empty(n)
    passed = np.zeros(n, dtype=bool)
    undefined = np.zeros(n, dtype=bool)
    for j in range(n):
        try:
            result = geweke(retained[:, j])
        except GewekeUndefinedError:
            m10[j] = np.nan
            m50[j] = np.nan
            undefined[j] = True
            continue
        m10[j] = result.m10
        m50[j] = result.m50
        passed[j] = result.passed

    return PosteriorSummary(
        mean=mean,
        std=std,
        rel_std_pct=rel_std,
        rel_error_pct=rel_error,
        truth=truth_arr,
        geweke_m10=m10,
        geweke_m50=m50,
        geweke_pass=passed,
        geweke_undefined=undefined,
        converged=bool(np.all(passed)),
        n_retained=int(retained.shape[0]),
        burn_in=int(burn_in),
    )


def _curve_weights(parametrization, theta_grid, theta_nodes=None, knot_grid=None) -> np.ndarray:
    """Matrix W with kappa(theta_grid) = W @ P for each parametrization."""
    theta_grid = np.asarray(theta_grid, dtype=float).ravel()
    if parametrization == PARAM_COEFFICIENTS:
        return np.vander(theta_grid, 4)
    if parametrization == PARAM_VALUES:
        if theta_nodes is None:
            raise ConfigError("conductivity_values curves need theta_nodes")
        powers = np.vander(theta_grid, 4)
        vander_nodes = np.vander(np.asarray(theta_nodes, dtype=float), 4)
        # kappa(grid) = powers @ coeffs and coeffs = V^-1 P.
        return powers @ np.linalg.inv(vander_nodes)
    if parametrization == PARAM_PIECEWISE:
        if knot_grid is None:
            raise ConfigError("piecewise curves need the knot_grid")
        knots = np.asarray(knot_grid, dtype=float).ravel()
        weights = np.zeros((theta_grid.size, knots.size))
        idx = np.clip(np.searchsorted(knots, theta_grid, side="right") - 1, 0, knots.size - 2)
        frac = (theta_grid - knots[idx]) / (knots[idx + 1] - knots[idx])
        frac = np.clip(frac, 0.0, 1.0)  # clamp outside the grid
        rows = np.arange(theta_grid.size)
        weights[rows, idx] = 1.0 - frac
        weights[rows, idx + 1] = frac
        return weights
    raise ConfigError(f"unknown parametrization '{parametrization}'")


def curve_samples(
    chain: Chain,
    parametrization: str,
    theta_grid,
    theta_nodes=None,
    knot_grid=None,
    burn_in: int | None = None,
) -> np.ndarray:
    """kappa(theta_grid) for every retained state, shape (R_kept, G)."""
    if burn_in is None:
        burn_in = chain.burn_in
    retained = chain.samples[burn_in:]
    if retained.shape[0] == 0:
        raise ConfigError("no retained states after burn-in")
    weights = _curve_weights(parametrization, theta_grid, theta_nodes, knot_grid)
    if weights.shape[1] != retained.shape[1]:
        raise ConfigError(
            f"chain has {retained.shape[1]} parameters but the parametrization "
            f"expects {weights.shape[1]}"
        )
    return retained @ weights.T


@dataclass(eq=False)
class CredibleBand:
    """Pointwise credible band of the conductivity curve."""

    theta: np.ndarray
    lower: np.ndarray
    mean: np.ndarray
    upper: np.ndarray
    level: float

    def contains(self, curve) -> np.ndarray:
        """Pointwise membership of a reference curve in [lower, upper]."""
        curve = np.asarray(curve, dtype=float)
        return (curve >= self.lower) & (curve <= self.upper)

    def width(self) -> np.ndarray:
        return self.upper - self.lower


def credible_band(
    chain: Chain,
    parametrization: str,
    theta_grid=None,
    level: float = 0.99,
    theta_nodes=None,
    knot_grid=None,
    burn_in: int | None = None,
    temperature_range: TemperatureRange | None = None,
    grid_points: int = 200,
) -> CredibleBand:
    """Empirical pointwise band (sorted-sample linear-interpolation quantiles).

    Either pass an explicit ``theta_grid`` or a ``temperature_range`` from
    which a uniform grid of ``grid_points`` is built.
    """
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must be in (0, 1), got {level}")
    if theta_grid is None:
        if temperature_range is None:
            raise ConfigError("need either theta_grid or temperature_range")
        theta_grid = temperature_range.nodes(grid_points)
    theta_grid = np.asarray(theta_grid, dtype=float).ravel()
    curves = curve_samples(chain, parametrization, theta_grid, theta_nodes, knot_grid, burn_in)
    lo_q = (1.0 - level) / 2.0
    hi_q = (1.0 + level) / 2.0
    quantiles = np.quantile(curves, [lo_q, hi_q], axis=0)
    return CredibleBand(
        theta=theta_grid,
        lower=quantiles[0],
        mean=curves.mean(axis=0),
        upper=quantiles[1],
        level=float(level),
    )


def save_band_csv(band: CredibleBand, path) -> None:
    """CSV with header theta,lower,mean,upper."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "lower", "mean", "upper"])
        for i in range(band.theta.size):
            writer.writerow(
                [
                    repr(float(band.theta[i])),
                    repr(float(band.lower[i])),
                    repr(float(band.mean[i])),
                    repr(float(band.upper[i])),
                ]
            )


def load_band_csv(path, level: float = 0.99) -> CredibleBand:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["theta", "lower", "mean", "upper"]:
            raise ConfigError(f"{path}: not a band CSV")
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    return CredibleBand(
        theta=data[:, 0], lower=data[:, 1], mean=data[:, 2], upper=data[:, 3], level=level
    )
