"""Compiled kernels for the time-marching loop.

Every likelihood evaluation runs thousands of implicit time steps, so the
per-step work (conductivity evaluation, tridiagonal assembly, Thomas solve)
lives here as numba-compiled routines.  The arithmetic is written out by hand
so the Python-level ``step`` and the compiled march share one code path.
"""

import numpy as np
from numba import njit

KIND_CUBIC = 0
KIND_PIECEWISE = 1

# march() status codes: >= 0 is the time-step index of a failure.
STATUS_OK = -1
STATUS_SINGULAR = -2

_EMPTY = np.empty(0, dtype=np.float64)


@njit(cache=True)
def thomas_solve(lower, diag, upper, rhs, work, out):
    """Solve a tridiagonal system in O(z).

    lower[i] multiplies x[i-1] in row i (lower[0] unused); upper[i] multiplies
    x[i+1] (upper[z-1] unused).  ``work`` is scratch of length z.  Returns
    False when a pivot underflows (singular system).
    """
    z = diag.shape[0]
    piv = diag[0]
    if abs(piv) < 1e-300:
        return False
    work[0] = upper[0] / piv
    out[0] = rhs[0] / piv
    for i in range(1, z):
        piv = diag[i] - lower[i] * work[i - 1]
        if abs(piv) < 1e-300:
            return False
        work[i] = upper[i] / piv
        out[i] = (rhs[i] - lower[i] * out[i - 1]) / piv
    for i in range(z - 2, -1, -1):
        out[i] -= work[i] * out[i + 1]
    return True


@njit(cache=True)
def kappa_at(kind, coeffs, grid, values, theta):
    """Scalar conductivity at one temperature."""
    if kind == KIND_CUBIC:
        acc = coeffs[0]
        for i in range(1, coeffs.shape[0]):
            acc = acc * theta + coeffs[i]
        return acc
    # Piecewise linear with endpoint clamping.
    n = grid.shape[0]
    if theta <= grid[0]:
        return values[0]
    if theta >= grid[n - 1]:
        return values[n - 1]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if grid[mid] <= theta:
            lo = mid
        else:
            hi = mid
    w = (theta - grid[lo]) / (grid[lo + 1] - grid[lo])
    return values[lo] + w * (values[lo + 1] - values[lo])


@njit(cache=True)
def march(theta0, n_steps, dtau, dx, h, theta_inf, kind, coeffs, grid, values, out):
    """Backward-Euler march of the semi-discrete heat equation.

    Row m of ``out`` receives the nodal temperatures after step m+1 (the
    initial condition is not stored).  The conductivity in step m+1 is
    evaluated at the previous temperatures (one-step lag), at the mean of the
    two nodal temperatures of each element.

    System per step: (C/dtau + K + G) theta_new = C/dtau theta_old + g, with
    G zero except G[z-1, z-1] = h and g = (1, 0, ..., 0, h*theta_inf).
    """
    z = theta0.shape[0]
    nel = z - 1

    cap_b = dx / (3.0 * dtau)  # boundary diagonal of C / dtau
    cap_d = 2.0 * dx / (3.0 * dtau)  # interior diagonal of C / dtau
    cap_o = dx / (6.0 * dtau)  # off-diagonal of C / dtau

    theta = theta0.copy()
    ke = np.empty(nel)
    lower = np.empty(z)
    diagv = np.empty(z)
    upper = np.empty(z)
    rhs = np.empty(z)
    work = np.empty(z)
    new = np.empty(z)

    for m in range(n_steps):
        for e in range(nel):
            t_mean = 0.5 * (theta[e] + theta[e + 1])
            k = kappa_at(kind, coeffs, grid, values, t_mean)
            if k <= 0.0:
                return m
            ke[e] = k / dx

        diagv[0] = cap_b + ke[0]
        upper[0] = cap_o - ke[0]
        rhs[0] = cap_b * theta[0] + cap_o * theta[1] + 1.0
        for i in range(1, z - 1):
            lower[i] = cap_o - ke[i - 1]
            diagv[i] = cap_d + ke[i - 1] + ke[i]
            upper[i] = cap_o - ke[i]
            rhs[i] = cap_o * theta[i - 1] + cap_d * theta[i] + cap_o * theta[i + 1]
        lower[z - 1] = cap_o - ke[nel - 1]
        diagv[z - 1] = cap_b + ke[nel - 1] + h
        rhs[z - 1] = cap_o * theta[z - 2] + cap_b * theta[z - 1] + h * theta_inf

        if not thomas_solve(lower, diagv, upper, rhs, work, new):
            return STATUS_SINGULAR
        for i in range(z):
            theta[i] = new[i]
            out[m, i] = new[i]

    return STATUS_OK
