"""Finite-difference sensitivity analysis of the forward model.

The sensitivity matrix J stacks, sensor by sensor, the derivative of every
predicted temperature with respect to each parameter component:

    J[m, n] ~= [T_m(P * (1 + eps e_n)) - T_m(P * (1 - eps e_n))] / (2 eps P_n)

(central differences with a relative perturbation, eps = 1e-5 by default).
det(J^T J) summarizes identifiability of the parametrization around P: a
near-zero determinant means some direction in parameter space leaves the
data essentially unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .forward import DimensionlessProblem, Mesh, TimeGrid, solve_forward

__all__ = ["SensitivityReport", "sensitivity_matrix", "identifiability_summary"]


@dataclass(eq=False)
class SensitivityReport:
    """Sensitivity matrix plus the scalar identifiability measures."""

    matrix: np.ndarray  # (U, N)
    reference: np.ndarray  # (N,)
    epsilon: float
    det: float  # det(J^T J); may overflow to inf for large N
    log_det: float  # log |det(J^T J)|
    sign: float  # sign of the determinant
    column_magnitudes: np.ndarray  # (N,) max |J[:, n]|


def sensitivity_matrix(
    reference,
    model_builder,
    problem: DimensionlessProblem,
    mesh: Mesh,
    grid: TimeGrid,
    sensor_positions=(0.0, 1.0),
    epsilon: float = 1e-5,
    support=None,
) -> SensitivityReport:
    """Central-difference sensitivities around a reference parameter vector.

    ``model_builder`` maps a parameter vector to a conductivity model (this is
    what fixes the parametrization).  ``support``, when given, is a predicate
    on parameter vectors; perturbed vectors that leave it raise ConfigError
    instead of feeding the solver an invalid conductivity.

    Cost: 2 N forward solves.
    """
    p_ref = np.asarray(reference, dtype=float).copy()
    if p_ref.ndim != 1 or p_ref.size == 0:
        raise ConfigError("reference parameter vector must be 1-D and non-empty")
    if epsilon <= 0.0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    if np.any(p_ref == 0.0):
        zero = int(np.nonzero(p_ref == 0.0)[0][0])
        raise ConfigError(
            f"component {zero} of the reference vector is 0; the relative "
            "perturbation P_n (1 +/- eps) is undefined there"
        )
    if support is not None and not support(p_ref):
        raise ConfigError("reference vector is outside the positivity domain")

    n = p_ref.size
    columns = []
    for comp in range(n):
        plus = p_ref.copy()
        minus = p_ref.copy()
        plus[comp] *= 1.0 + epsilon
        minus[comp] *= 1.0 - epsilon
        if support is not None and (not support(plus) or not support(minus)):
            raise ConfigError(
                f"perturbing component {comp} by {epsilon:g} leaves the positivity domain"
            )
        t_plus = _stacked_prediction(model_builder(plus), problem, mesh, grid, sensor_positions)
        t_minus = _stacked_prediction(model_builder(minus), problem, mesh, grid, sensor_positions)
        columns.append((t_plus - t_minus) / (2.0 * epsilon * p_ref[comp]))
    matrix = np.column_stack(columns)

    gram = matrix.T @ matrix
    sign, log_det = np.linalg.slogdet(gram)
    with np.errstate(over="ignore"):
        det = float(sign * np.exp(log_det))
    return SensitivityReport(
        matrix=matrix,
        reference=p_ref,
        epsilon=float(epsilon),
        det=det,
        log_det=float(log_det),
        sign=float(sign),
        column_magnitudes=np.max(np.abs(matrix), axis=0),
    )


def _stacked_prediction(model, problem, mesh, grid, sensor_positions):
    history = solve_forward(problem, mesh, grid, model, sensor_positions)
    return np.concatenate([history[:, j] for j in range(history.shape[1])])


def identifiability_summary(report: SensitivityReport, det_threshold: float = 1e-6) -> dict:
    """JSON-ready digest: determinant, conditioning flag, parameter ranking.

    Parameters are ranked from most to least informed by the largest absolute
    entry of their sensitivity column; ties keep index order.
    """
    magnitudes = report.column_magnitudes
    ranking = [int(i) for i in np.argsort(-magnitudes, kind="stable")]
    # An overflowed (infinite) determinant is enormous, not degenerate.
    ill = bool(np.isfinite(report.det) and abs(report.det) < det_threshold)
    notes = []
    if np.any(magnitudes == 0.0):
        dead = [int(i) for i in np.nonzero(magnitudes == 0.0)[0]]
        ill = True
        notes.append(f"ill-conditioned, det ~ 0: zero sensitivity column(s) {dead}")
    elif ill:
        notes.append(f"ill-conditioned: |det(JtJ)| = {abs(report.det):.3e} < {det_threshold:g}")
    return {
        "epsilon": report.epsilon,
        "reference": report.reference.tolist(),
        "det_jtj": report.det,
        "log_det_jtj": report.log_det,
        "det_sign": report.sign,
        "column_magnitudes": magnitudes.tolist(),
        "ranking_most_to_least_informed": ranking,
        "least_informed": ranking[-1],
        "ill_conditioned": ill,
        "det_threshold": det_threshold,
        "notes": notes,
    }
