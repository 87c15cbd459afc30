"""Conductivity-curve models.

A conductivity model maps dimensionless temperature theta to dimensionless
conductivity kappa(theta) over a working range [theta_min, theta_max].  Three
families are supported:

* ``CubicByCoefficients`` -- kappa(theta) = c0*theta^3 + c1*theta^2 + c2*theta + c3,
  parametrized directly by the coefficients (highest power first).
* ``CubicByValues`` -- the same cubic, but parametrized by its values at four
  equally spaced temperature nodes spanning the working range.  The
  coefficients are recovered by solving the 4x4 Vandermonde system.
* ``PiecewiseLinear`` -- values at N knots on an increasing temperature grid,
  interpolated linearly and clamped to the endpoint values outside the grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SingularSystemError

__all__ = [
    "TemperatureRange",
    "CubicByCoefficients",
    "CubicByValues",
    "PiecewiseLinear",
    "evaluate",
    "values_to_coefficients",
    "cubic_is_positive_on",
    "piecewise_is_positive",
    "model_to_dict",
    "model_from_dict",
    "model_to_json",
    "model_from_json",
]

# Tolerances for the cubic positivity check.
_DISCRIMINANT_TOL = 1e-12
_LEADING_COEF_TOL = 1e-14


@dataclass(frozen=True)
class TemperatureRange:
    """Dimensionless temperature interval a conductivity model must cover."""

    theta_min: float
    theta_max: float

    def __post_init__(self):
        if not np.isfinite(self.theta_min) or not np.isfinite(self.theta_max):
            raise ConfigError("temperature range bounds must be finite")
        if not self.theta_min < self.theta_max:
            raise ConfigError(
                f"theta_min must be < theta_max, got [{self.theta_min}, {self.theta_max}]"
            )

    @classmethod
    def from_measurements(cls, values) -> "TemperatureRange":
        """Range spanned by observed temperatures (min/max of the data)."""
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            raise ConfigError("cannot infer a temperature range from empty data")
        return cls(float(arr.min()), float(arr.max()))

    def nodes(self, n: int) -> np.ndarray:
        """n equally spaced temperatures covering the range (endpoints included)."""
        if n < 2:
            raise ConfigError("need at least 2 nodes to span a range")
        return np.linspace(self.theta_min, self.theta_max, n)

    @property
    def width(self) -> float:
        return self.theta_max - self.theta_min


def _as_float_vector(values, name, length=None):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be a 1-D sequence, got shape {arr.shape}")
    if length is not None and arr.size != length:
        raise ConfigError(f"{name} must have length {length}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite entries")
    return arr


@dataclass(eq=False)
class CubicByCoefficients:
    """Cubic conductivity given by coefficients, highest power first."""

    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = _as_float_vector(self.coefficients, "coefficients", 4)


@dataclass(eq=False)
class CubicByValues:
    """Cubic conductivity given by its values at four equally spaced nodes."""

    theta_nodes: np.ndarray
    kappa_nodes: np.ndarray

    def __post_init__(self):
        self.theta_nodes = _as_float_vector(self.theta_nodes, "theta_nodes", 4)
        self.kappa_nodes = _as_float_vector(self.kappa_nodes, "kappa_nodes", 4)
        gaps = np.diff(self.theta_nodes)
        if np.any(gaps <= 0):
            raise ConfigError("theta_nodes must be strictly increasing")
        if np.max(np.abs(gaps - gaps[0])) > 1e-9 * max(1.0, abs(gaps[0])):
            raise ConfigError("theta_nodes must be equally spaced")

    def coefficients(self) -> np.ndarray:
        return values_to_coefficients(self.theta_nodes, self.kappa_nodes)


@dataclass(eq=False)
class PiecewiseLinear:
    """Conductivity values at N knots, interpolated linearly between them."""

    theta_grid: np.ndarray
    kappa_values: np.ndarray

    def __post_init__(self):
        self.theta_grid = _as_float_vector(self.theta_grid, "theta_grid")
        self.kappa_values = _as_float_vector(self.kappa_values, "kappa_values")
        if self.theta_grid.size < 2:
            raise ConfigError("piecewise model needs at least 2 knots")
        if self.kappa_values.size != self.theta_grid.size:
            raise ConfigError(
                "theta_grid and kappa_values must have the same length, got "
                f"{self.theta_grid.size} and {self.kappa_values.size}"
            )
        if np.any(np.diff(self.theta_grid) <= 0):
            raise ConfigError("theta_grid must be strictly increasing")


ConductivityModel = CubicByCoefficients | CubicByValues | PiecewiseLinear


def evaluate(model, theta):
    """kappa(theta) for scalar or array ``theta``.

    Cubic models use Horner evaluation; piecewise models interpolate linearly
    and clamp to the endpoint values outside the knot grid.
    """
    if isinstance(model, CubicByCoefficients):
        return np.polyval(model.coefficients, theta)
    if isinstance(model, CubicByValues):
        return np.polyval(model.coefficients(), theta)
    if isinstance(model, PiecewiseLinear):
        return np.interp(theta, model.theta_grid, model.kappa_values)
    raise TypeError(f"not a conductivity model: {type(model).__name__}")


def values_to_coefficients(theta_nodes, kappa_nodes) -> np.ndarray:
    """Cubic coefficients (highest power first) through four (theta, kappa) pairs.

    Solves the 4x4 Vandermonde system; repeated nodes make it singular.
    """
    theta_nodes = _as_float_vector(theta_nodes, "theta_nodes", 4)
    kappa_nodes = _as_float_vector(kappa_nodes, "kappa_nodes", 4)
    if np.unique(theta_nodes).size != 4:
        raise SingularSystemError("temperature nodes must be distinct")
    vander = np.vander(theta_nodes, 4)
    try:
        return np.linalg.solve(vander, kappa_nodes)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - distinctness is checked
        raise SingularSystemError(f"Vandermonde solve failed: {exc}") from exc


def _cubic_stationary_points(coefficients):
    """Real roots of d kappa / d theta = 0 (0, 1 or 2 of them)."""
    c0, c1, c2, _ = coefficients
    a, b, c = 3.0 * c0, 2.0 * c1, c2
    if abs(a) < _LEADING_COEF_TOL:
        # Derivative is (at most) linear.
        if abs(b) < _LEADING_COEF_TOL:
            return []
        return [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < -_DISCRIMINANT_TOL:
        return []
    if disc <= _DISCRIMINANT_TOL:
        return [-b / (2.0 * a)]
    # Numerically stable quadratic roots (q is nonzero because disc > tol).
    sq = np.sqrt(disc)
    q = -0.5 * (b + np.copysign(sq, b))
    return [q / a, c / q]


def cubic_is_positive_on(coefficients, temperature_range: TemperatureRange) -> bool:
    """True when the cubic stays strictly positive over the whole range.

    Checks both endpoints plus every stationary point of the cubic that lies
    strictly inside the interval; a cubic cannot dip below zero anywhere else.
    """
    coefficients = _as_float_vector(coefficients, "coefficients", 4)
    lo, hi = temperature_range.theta_min, temperature_range.theta_max
    if np.polyval(coefficients, lo) <= 0.0 or np.polyval(coefficients, hi) <= 0.0:
        return False
    for root in _cubic_stationary_points(coefficients):
        if lo < root < hi and np.polyval(coefficients, root) <= 0.0:
            return False
    return True


def piecewise_is_positive(model_or_values) -> bool:
    """True when every knot value is strictly positive.

    Linear interpolation with endpoint clamping can never dip below the
    smallest knot value, so positive knots mean a positive curve everywhere.
    """
    if isinstance(model_or_values, PiecewiseLinear):
        values = model_or_values.kappa_values
    else:
        values = np.asarray(model_or_values, dtype=float)
    return bool(values.size) and bool(np.min(values) > 0.0)


# --- serialization ----------------------------------------------------------

_KIND_CUBIC_COEFFS = "cubic_coeffs"
_KIND_CUBIC_VALUES = "cubic_values"
_KIND_PIECEWISE = "piecewise"


def model_to_dict(model) -> dict:
    if isinstance(model, CubicByCoefficients):
        return {"kind": _KIND_CUBIC_COEFFS, "coefficients": model.coefficients.tolist()}
    if isinstance(model, CubicByValues):
        return {
            "kind": _KIND_CUBIC_VALUES,
            "theta_nodes": model.theta_nodes.tolist(),
            "kappa_nodes": model.kappa_nodes.tolist(),
        }
    if isinstance(model, PiecewiseLinear):
        return {
            "kind": _KIND_PIECEWISE,
            "theta_grid": model.theta_grid.tolist(),
            "kappa_values": model.kappa_values.tolist(),
        }
    raise TypeError(f"not a conductivity model: {type(model).__name__}")


def model_from_dict(data: dict):
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("conductivity model must be an object with a 'kind' field")
    kind = data["kind"]
    try:
        if kind == _KIND_CUBIC_COEFFS:
            return CubicByCoefficients(data["coefficients"])
        if kind == _KIND_CUBIC_VALUES:
            return CubicByValues(data["theta_nodes"], data["kappa_nodes"])
        if kind == _KIND_PIECEWISE:
            return PiecewiseLinear(data["theta_grid"], data["kappa_values"])
    except KeyError as exc:
        raise ConfigError(f"conductivity model of kind '{kind}' is missing field {exc}") from exc
    raise ConfigError(f"unknown conductivity model kind '{kind}'")


def model_to_json(model) -> str:
    return json.dumps(model_to_dict(model))


def model_from_json(text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid model JSON: {exc}") from exc
    return model_from_dict(data)
