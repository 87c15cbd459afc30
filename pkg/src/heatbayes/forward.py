"""Forward model: 1-D transient heat conduction with temperature-dependent
conductivity, in dimensionless form.

Governing problem on 0 < X < 1:

    d theta / d tau = d/dX ( kappa(theta) d theta / dX )

    kappa theta_X = -1                  at X = 0   (constant heating flux)
    kappa theta_X = h (theta_inf - theta) at X = 1 (convective loss)
    theta = theta_init                  at tau = 0

Discretization: linear finite elements on a uniform mesh (consistent mass
matrix), backward Euler in time, with kappa lagged one step and evaluated per
element at the mean of its two nodal temperatures.  Each step solves one
tridiagonal system.  Backward Euler is unconditionally stable, so the step
size is taken as given rather than bounded here.

The scheme conserves energy discretely: with ones = (1, ..., 1),

    ones @ C (theta_new - theta_old) / dtau + h*theta_new[-1] - h*theta_inf - 1 = 0

holds to round-off at every step, because the stiffness matrix has zero row
sums and the boundary terms enter exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .conductivity import (
    CubicByCoefficients,
    CubicByValues,
    PiecewiseLinear,
    evaluate,
)
from .errors import ConfigError, NonPositiveConductivityError, SingularSystemError

__all__ = [
    "PhysicalConfig",
    "DimensionlessProblem",
    "Mesh",
    "TimeGrid",
    "nondimensionalize",
    "assemble_capacity",
    "assemble_conductance",
    "step",
    "solve_forward",
    "solve_forward_full",
    "sensor_node_indices",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class PhysicalConfig:
    """Dimensional description of the experiment (SI units).

    length       slab thickness [m]
    t0           initial/reference temperature [K]
    flux         heating flux at x = 0 [W/m^2]
    h            convection coefficient at x = L [W/m^2 K]
    t_inf        ambient temperature [K]
    rho          density [kg/m^3]
    cp           specific heat [J/kg K]
    dt           sampling interval [s]
    duration     total measurement time [s], an integer multiple of dt
    """

    length: float
    t0: float
    flux: float
    h: float
    t_inf: float
    rho: float
    cp: float
    dt: float
    duration: float

    def __post_init__(self):
        for name in ("length", "t0", "flux", "h", "t_inf", "rho", "cp", "dt", "duration"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ConfigError(f"physical parameter '{name}' must be positive, got {value}")
        steps = self.duration / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError(
                f"duration ({self.duration}) must be an integer multiple of dt ({self.dt})"
            )


@dataclass(frozen=True)
class DimensionlessProblem:
    """Dimensionless boundary-value data: h = dimensionless heat transfer
    coefficient, theta_inf = ambient over reference temperature."""

    h: float
    theta_inf: float
    theta_init: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.h) or self.h <= 0.0:
            raise ConfigError(f"dimensionless h must be positive, got {self.h}")
        for name in ("theta_inf", "theta_init"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh of linear elements on [0, 1]."""

    n_elements: int

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ConfigError(f"n_elements must be a positive integer, got {self.n_elements}")

    @property
    def n_nodes(self) -> int:
        return self.n_elements + 1

    @property
    def dx(self) -> float:
        return 1.0 / self.n_elements

    @property
    def node_coords(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_nodes)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform dimensionless time grid: states at tau = dtau, 2 dtau, ..."""

    dtau: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.dtau) or self.dtau <= 0.0:
            raise ConfigError(f"dtau must be positive, got {self.dtau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def times(self) -> np.ndarray:
        return self.dtau * np.arange(1, self.n_steps + 1)


def nondimensionalize(config: PhysicalConfig):
    """Map a dimensional setup to (DimensionlessProblem, TimeGrid).

    Scales: X = x/L, theta = T/T0, tau = q t / (rho cp T0 L), and
    kappa = T0 k / (q L), which turns the flux boundary condition into
    kappa theta_X = -1 and yields h_dimensionless = h T0 / q.
    """
    h_star = config.h * config.t0 / config.flux
    theta_inf = config.t_inf / config.t0
    dtau = config.flux * config.dt / (config.rho * config.cp * config.t0 * config.length)
    n_steps = int(round(config.duration / config.dt))
    return (
        DimensionlessProblem(h=h_star, theta_inf=theta_inf, theta_init=1.0),
        TimeGrid(dtau=dtau, n_steps=n_steps),
    )


def assemble_capacity(mesh: Mesh) -> np.ndarray:
    """Consistent mass (capacity) matrix for linear elements.

    Element contribution (dx/6) [[2, 1], [1, 2]]; the assembled entries sum
    to 1 (the capacity of the unit slab).
    """
    z = mesh.n_nodes
    dx = mesh.dx
    cap = np.zeros((z, z))
    for e in range(mesh.n_elements):
        cap[e, e] += dx / 3.0
        cap[e + 1, e + 1] += dx / 3.0
        cap[e, e + 1] += dx / 6.0
        cap[e + 1, e] += dx / 6.0
    return cap


def assemble_conductance(mesh: Mesh, model, theta) -> np.ndarray:
    """Stiffness (conductance) matrix at the given nodal temperatures.

    Element e uses kappa at the mean of its two nodal temperatures and
    contributes (kappa_e/dx) [[1, -1], [-1, 1]]; row sums are zero.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mesh.n_nodes,):
        raise ConfigError(f"theta must have shape ({mesh.n_nodes},), got {theta.shape}")
    z = mesh.n_nodes
    dx = mesh.dx
    stiff = np.zeros((z, z))
    for e in range(mesh.n_elements):
        t_mean = 0.5 * (theta[e] + theta[e + 1])
        kappa_e = float(evaluate(model, t_mean))
        if kappa_e <= 0.0:
            raise NonPositiveConductivityError(
                f"kappa({t_mean}) = {kappa_e} <= 0 in element {e}", value=kappa_e
            )
        w = kappa_e / dx
        stiff[e, e] += w
        stiff[e + 1, e + 1] += w
        stiff[e, e + 1] -= w
        stiff[e + 1, e] -= w
    return stiff


def _kernel_model_args(model):
    if isinstance(model, CubicByCoefficients):
        return _kernels.KIND_CUBIC, model.coefficients, _kernels._EMPTY, _kernels._EMPTY
    if isinstance(model, CubicByValues):
        return _kernels.KIND_CUBIC, model.coefficients(), _kernels._EMPTY, _kernels._EMPTY
    if isinstance(model, PiecewiseLinear):
        return _kernels.KIND_PIECEWISE, _kernels._EMPTY, model.theta_grid, model.kappa_values
    raise TypeError(f"not a conductivity model: {type(model).__name__}")


def step(theta, problem: DimensionlessProblem, mesh: Mesh, grid: TimeGrid, model) -> np.ndarray:
    """One backward-Euler step from the given nodal temperatures.

    Assembles the same tridiagonal system as the marching kernel and solves
    it with the same Thomas routine, so repeated ``step`` calls reproduce
    ``solve_forward_full`` rows.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mesh.n_nodes,):
        raise ConfigError(f"theta must have shape ({mesh.n_nodes},), got {theta.shape}")
    kind, coeffs, kgrid, kvalues = _kernel_model_args(model)
    out = np.empty((1, mesh.n_nodes))
    status = _kernels.march(
        np.ascontiguousarray(theta),
        1,
        grid.dtau,
        mesh.dx,
        problem.h,
        problem.theta_inf,
        kind,
        np.ascontiguousarray(coeffs),
        np.ascontiguousarray(kgrid),
        np.ascontiguousarray(kvalues),
        out,
    )
    _raise_for_status(status)
    return out[0]


def _raise_for_status(status):
    if status == _kernels.STATUS_OK:
        return
    if status == _kernels.STATUS_SINGULAR:
        raise SingularSystemError("tridiagonal solve hit a zero pivot")
    raise NonPositiveConductivityError(
        f"non-positive conductivity at time step {status + 1}", step=int(status) + 1
    )


def solve_forward_full(problem: DimensionlessProblem, mesh: Mesh, grid: TimeGrid, model) -> np.ndarray:
    """Full nodal history, shape (n_steps, n_nodes); row m is the state after
    step m+1 (the initial condition is not included)."""
    theta0 = np.full(mesh.n_nodes, float(problem.theta_init))
    kind, coeffs, kgrid, kvalues = _kernel_model_args(model)
    out = np.empty((grid.n_steps, mesh.n_nodes))
    status = _kernels.march(
        theta0,
        grid.n_steps,
        grid.dtau,
        mesh.dx,
        problem.h,
        problem.theta_inf,
        kind,
        np.ascontiguousarray(coeffs),
        np.ascontiguousarray(kgrid),
        np.ascontiguousarray(kvalues),
        out,
    )
    _raise_for_status(status)
    return out


def sensor_node_indices(mesh: Mesh, positions) -> np.ndarray:
    """Node index of each sensor position; positions must sit on mesh nodes."""
    positions = np.atleast_1d(np.asarray(positions, dtype=float))
    coords = mesh.node_coords
    indices = np.empty(positions.size, dtype=int)
    for i, pos in enumerate(positions):
        hits = np.nonzero(np.abs(coords - pos) <= 1e-12)[0]
        if hits.size != 1:
            raise ConfigError(f"sensor position {pos} does not coincide with a mesh node")
        indices[i] = hits[0]
    return indices


def solve_forward(
    problem: DimensionlessProblem,
    mesh: Mesh,
    grid: TimeGrid,
    model,
    sensor_positions=(0.0, 1.0),
) -> np.ndarray:
    """Temperature histories at the sensor nodes, shape (n_steps, n_sensors)."""
    indices = sensor_node_indices(mesh, sensor_positions)
    full = solve_forward_full(problem, mesh, grid, model)
    return full[:, indices]


def write_field_csv(path, grid: TimeGrid, field: np.ndarray):
    """Dump a full nodal history as CSV with header tau,X0,...,X{z-1}.

    Floats are written with shortest round-trip precision so downstream
    checks (e.g. energy-balance residuals) see the solver's exact output.
    """
    field = np.asarray(field, dtype=float)
    if field.ndim != 2 or field.shape[0] != grid.n_steps:
        raise ConfigError(
            f"field must have shape (n_steps, n_nodes) = ({grid.n_steps}, ...), got {field.shape}"
        )
    times = grid.times
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau"] + [f"X{i}" for i in range(field.shape[1])])
        for m in range(field.shape[0]):
            writer.writerow([repr(float(times[m]))] + [repr(float(v)) for v in field[m]])


def read_field_csv(path):
    """Inverse of write_field_csv: returns (times, field)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "tau":
            raise ConfigError(f"{path}: not a field dump (header must start with 'tau')")
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    return data[:, 0], data[:, 1:]
