"""Forward solver: assembly closed forms, conservation, steady state."""

import numpy as np
import pytest

from heatbayes import (
    CubicByCoefficients,
    DimensionlessProblem,
    Mesh,
    PhysicalConfig,
    PiecewiseLinear,
    TimeGrid,
    nondimensionalize,
    solve_forward,
    solve_forward_full,
)
from heatbayes.forward import (
    assemble_capacity,
    assemble_conductance,
    read_field_csv,
    sensor_node_indices,
    step,
    write_field_csv,
)

from conftest import REFERENCE_PHYSICAL, TRUTH_COEFFICIENTS


# --- nondimensionalization ---------------------------------------------------


def test_reference_constants(problem, grid):
    # h* = h T0 / q and theta_inf = T_inf / T0 for the reference experiment
    assert problem.h == pytest.approx(0.36, rel=1e-12)
    assert problem.theta_inf == pytest.approx(1.0, rel=1e-12)
    assert grid.dtau == pytest.approx(8.716e-3, rel=5e-3)
    assert grid.n_steps == 3000


def test_dtau_exact_value(grid):
    # dtau = q dt / (rho cp T0 L) with the reference numbers is the rational
    # 1e5 / 11474460, about 8.71501e-3.
    assert grid.dtau == pytest.approx(1e5 / 11474460, rel=1e-12)


def test_duration_must_be_multiple_of_dt():
    bad = dict(REFERENCE_PHYSICAL)
    bad["duration"] = 600.1
    with pytest.raises(Exception):
        nondimensionalize(PhysicalConfig(**bad))


# --- element assembly --------------------------------------------------------


def test_capacity_matrix_closed_form():
    # Consistent mass matrix of linear elements on [0, 1]: tridiagonal with
    # interior diagonal 2/3 dx, off-diagonal dx/6, ends dx/3; entries sum to 1.
    mesh = Mesh(4)
    dx = 0.25
    c = assemble_capacity(mesh)
    expected = np.zeros((5, 5))
    expected[np.arange(5), np.arange(5)] = 2 * dx / 3
    expected[0, 0] = expected[-1, -1] = dx / 3
    expected[np.arange(4), np.arange(1, 5)] = dx / 6
    expected[np.arange(1, 5), np.arange(4)] = dx / 6
    np.testing.assert_allclose(c, expected, rtol=1e-14)
    assert c.sum() == pytest.approx(1.0, rel=1e-14)


def test_conductance_matrix_constant_kappa():
    # With kappa == k0 the stiffness matrix is the standard k0/dx Laplacian
    # and its row sums vanish.
    mesh = Mesh(4)
    dx = 0.25
    k0 = 2.0
    model = CubicByCoefficients([0.0, 0.0, 0.0, k0])
    k = assemble_conductance(mesh, model, np.ones(5))
    lap = np.diag([1.0, 2.0, 2.0, 2.0, 1.0]) - np.diag(np.ones(4), 1) - np.diag(np.ones(4), -1)
    np.testing.assert_allclose(k, (k0 / dx) * lap, rtol=1e-14)
    np.testing.assert_allclose(k.sum(axis=1), 0.0, atol=1e-14)


def test_conductance_uses_element_mean_temperature():
    # kappa(theta) = theta: an element spanning nodal temperatures (1, 3)
    # must be assembled with kappa evaluated at the mean, i.e. 2.
    mesh = Mesh(1)
    model = CubicByCoefficients([0.0, 0.0, 1.0, 0.0])
    k = assemble_conductance(mesh, model, np.array([1.0, 3.0]))
    np.testing.assert_allclose(k[0, 0], 2.0 / 1.0, rtol=1e-14)


# --- time stepping -----------------------------------------------------------


def test_step_matches_march(problem, mesh, grid, truth_model):
    theta = np.full(mesh.n_nodes, problem.theta_init)
    for _ in range(3):
        theta = step(theta, problem, mesh, grid, truth_model)
    full = solve_forward_full(problem, mesh, grid, truth_model)
    np.testing.assert_allclose(theta, full[2], rtol=1e-12, atol=1e-12)


def test_forward_solution_is_deterministic(problem, mesh, grid, truth_model):
    a = solve_forward(problem, mesh, grid, truth_model, (0.0, 1.0))
    b = solve_forward(problem, mesh, grid, truth_model, (0.0, 1.0))
    np.testing.assert_array_equal(a, b)


def test_sensor_positions_map_to_end_nodes(mesh):
    idx = sensor_node_indices(mesh, (0.0, 1.0))
    np.testing.assert_array_equal(idx, [0, mesh.n_nodes - 1])


def test_heating_monotonicity(problem, mesh, grid, truth_model):
    # The heated face must warm up monotonically from the start.
    history = solve_forward(problem, mesh, grid, truth_model, (0.0,))
    x0 = history[:, 0]
    assert x0[0] > problem.theta_init
    assert np.all(np.diff(x0[:200]) > 0)


def test_energy_balance_every_step(problem, mesh, grid, truth_model):
    # Integrated heat content must equal net boundary influx at every step:
    # d/dtau int theta dX = 1 + H (theta_inf - theta(1)).
    capacity = assemble_capacity(mesh)

    def heat_content(theta):
        # sum(C @ theta) = int theta dX for linear elements
        return (capacity @ theta).sum()

    theta_prev = np.full(mesh.n_nodes, problem.theta_init)
    full = solve_forward_full(problem, mesh, grid, truth_model)
    worst = 0.0
    for m in range(grid.n_steps):
        theta = full[m]
        lhs = (heat_content(theta) - heat_content(theta_prev)) / grid.dtau
        rhs = 1.0 + problem.h * (problem.theta_inf - theta[-1])
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
        theta_prev = theta
    assert worst <= 1e-10


def test_steady_state_constant_kappa():
    # Long-time limit with kappa = 2: linear profile
    # theta(X) = 1 + 1/H + (1 - X)/2, independent of kappa's value.
    phys = dict(REFERENCE_PHYSICAL)
    phys["duration"] = 6000.0
    problem, grid = nondimensionalize(PhysicalConfig(**phys))
    mesh = Mesh(5)
    model = CubicByCoefficients([0.0, 0.0, 0.0, 2.0])
    final = solve_forward_full(problem, mesh, grid, model)[-1]
    x = np.linspace(0.0, 1.0, mesh.n_nodes)
    exact = 1.0 + 1.0 / problem.h + (1.0 - x) / 2.0
    np.testing.assert_allclose(final, exact, atol=1e-6)


def test_steady_state_right_boundary_value(problem, mesh, truth_model):
    # At equilibrium the convective boundary fixes theta(1) = theta_inf + 1/H
    # regardless of the conductivity model.
    long_grid = TimeGrid(dtau=8.715e-3, n_steps=30000)
    final = solve_forward_full(problem, mesh, long_grid, truth_model)[-1]
    assert final[-1] == pytest.approx(problem.theta_inf + 1.0 / problem.h, abs=1e-6)


def test_nonpositive_conductivity_raises(problem, mesh, grid):
    from heatbayes import NonPositiveConductivityError

    model = CubicByCoefficients([0.0, 0.0, 0.0, -1.0])
    with pytest.raises(NonPositiveConductivityError):
        solve_forward(problem, mesh, grid, model, (0.0, 1.0))


def test_piecewise_model_close_to_cubic(problem, mesh, grid, truth_model):
    # A 100-knot piecewise version of the truth curve produces nearly the
    # same sensor histories as the cubic itself.
    from heatbayes import evaluate

    knots = np.linspace(0.9, 4.6, 100)
    pw = PiecewiseLinear(knots, evaluate(truth_model, knots))
    a = solve_forward(problem, mesh, grid, truth_model, (0.0, 1.0))
    b = solve_forward(problem, mesh, grid, pw, (0.0, 1.0))
    np.testing.assert_allclose(a, b, rtol=2e-4)


def test_field_csv_round_trip(tmp_path, problem, mesh, truth_model):
    grid = TimeGrid(dtau=8.715e-3, n_steps=10)
    field = solve_forward_full(problem, mesh, grid, truth_model)
    path = tmp_path / "field.csv"
    write_field_csv(path, grid, field)
    tau, back = read_field_csv(path)
    np.testing.assert_array_equal(back, field)
    np.testing.assert_allclose(tau, grid.dtau * np.arange(1, 11), rtol=1e-15)
