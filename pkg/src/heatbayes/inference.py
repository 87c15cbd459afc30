"""Priors, likelihood, and the two-phase random-walk Metropolis sampler.

Parameter vectors are plain float arrays; what they mean is fixed by the
parametrization of the likelihood context:

* ``"coefficients"``        -- P are the four cubic coefficients, highest power first.
* ``"conductivity_values"`` -- P are kappa at four equally spaced temperature nodes.
* ``"piecewise"``           -- P are kappa at the N knots of a temperature grid.

The log-likelihood for data D with known noise levels sigma is

    log L(P) = -1/2 sum_j (D_j - T_j(P))^2 / sigma_j^2

up to an additive constant, where T(P) is one forward solve.  Priors are
evaluated before the likelihood, so proposals outside the support never cost
a solve.

Sampling follows the usual two phases: an adaptive-Metropolis phase that
learns a proposal covariance from the chain history (scaled by 2.38^2/N with
a small diagonal regularization), then a plain Metropolis-Hastings phase with
that covariance frozen.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conductivity import (
    CubicByCoefficients,
    PiecewiseLinear,
    TemperatureRange,
    cubic_is_positive_on,
    values_to_coefficients,
)
from .errors import ConfigError, HeatBayesError
from .forward import DimensionlessProblem, Mesh, TimeGrid, solve_forward
from .measurements import MeasurementSet

__all__ = [
    "PARAM_COEFFICIENTS",
    "PARAM_VALUES",
    "PARAM_PIECEWISE",
    "PositivityDomain",
    "TruncatedUniformImproper",
    "TruncatedNormal",
    "GMRFPrior",
    "log_prior",
    "LikelihoodContext",
    "log_likelihood",
    "Chain",
    "run_adaptive",
    "run_mh",
    "attach_derived_coefficients",
    "save_chain",
    "load_chain",
]

logger = logging.getLogger(__name__)

PARAM_COEFFICIENTS = "coefficients"
PARAM_VALUES = "conductivity_values"
PARAM_PIECEWISE = "piecewise"
_PARAMETRIZATIONS = (PARAM_COEFFICIENTS, PARAM_VALUES, PARAM_PIECEWISE)


@dataclass(frozen=True)
class PositivityDomain:
    """Support test: vectors whose conductivity stays positive on the range.

    For the cubic parametrizations the test is the exact stationary-point
    check over [theta_min, theta_max]; for the piecewise parametrization it
    is simply min(P) > 0.
    """

    parametrization: str
    temperature_range: TemperatureRange | None = None
    theta_nodes: np.ndarray | None = None  # conductivity_values only

    def __post_init__(self):
        if self.parametrization not in _PARAMETRIZATIONS:
            raise ConfigError(f"unknown parametrization '{self.parametrization}'")
        if self.parametrization in (PARAM_COEFFICIENTS, PARAM_VALUES):
            if self.temperature_range is None:
                raise ConfigError("cubic positivity checks need a temperature range")
        if self.parametrization == PARAM_VALUES:
            if self.theta_nodes is None:
                raise ConfigError("conductivity_values support needs theta_nodes")
            object.__setattr__(
                self, "theta_nodes", np.asarray(self.theta_nodes, dtype=float)
            )

    def __call__(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        if self.parametrization == PARAM_PIECEWISE:
            return bool(np.min(p) > 0.0)
        if self.parametrization == PARAM_VALUES:
            coeffs = values_to_coefficients(self.theta_nodes, p)
        else:
            coeffs = p
        return cubic_is_positive_on(coeffs, self.temperature_range)


@dataclass(eq=False)
class TruncatedUniformImproper:
    """Flat over the positivity domain, zero mass outside (improper)."""

    domain: PositivityDomain

    def log_density(self, p) -> float:
        return 0.0 if self.domain(p) else -np.inf


@dataclass(eq=False)
class TruncatedNormal:
    """Independent normals truncated to the positivity domain.

    The normalization constant is dropped; only differences of log densities
    matter to the sampler.
    """

    mean: np.ndarray
    std: np.ndarray
    domain: PositivityDomain

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).ravel()
        self.std = np.asarray(self.std, dtype=float).ravel()
        if self.mean.size != self.std.size:
            raise ConfigError(
                f"prior mean ({self.mean.size}) and std ({self.std.size}) lengths differ"
            )
        if np.any(self.std <= 0.0):
            raise ConfigError("prior stds must all be positive")

    def log_density(self, p) -> float:
        p = np.asarray(p, dtype=float)
        if p.size != self.mean.size:
            raise ConfigError(f"parameter size {p.size} does not match prior size {self.mean.size}")
        if not self.domain(p):
            return -np.inf
        zscores = (p - self.mean) / self.std
        return -0.5 * float(zscores @ zscores)


@dataclass(eq=False)
class GMRFPrior:
    """First-difference Gaussian Markov random field on positive values.

    With Z the (N-1) x N first-difference matrix,
    log p(P) = -||Z P - qbar||^2 / (2 gamma^2) for min(P) > 0, else -inf.
    Adding a constant to every component leaves Z P, and hence the density,
    unchanged: the prior constrains the shape of the curve, not its level.
    """

    qbar: np.ndarray
    gamma2: float

    def __post_init__(self):
        self.qbar = np.asarray(self.qbar, dtype=float).ravel()
        if self.qbar.size < 1:
            raise ConfigError("qbar must have at least one entry (N >= 2)")
        if not np.isfinite(self.gamma2) or self.gamma2 <= 0.0:
            raise ConfigError(f"gamma2 must be positive, got {self.gamma2}")

    def log_density(self, p) -> float:
        p = np.asarray(p, dtype=float)
        if p.size != self.qbar.size + 1:
            raise ConfigError(
                f"parameter size {p.size} does not match qbar size {self.qbar.size} + 1"
            )
        if np.min(p) <= 0.0:
            return -np.inf
        residual = np.diff(p) - self.qbar
        return -float(residual @ residual) / (2.0 * self.gamma2)


Prior = TruncatedUniformImproper | TruncatedNormal | GMRFPrior


def log_prior(prior, p) -> float:
    """Log prior density (up to a constant) of a parameter vector."""
    return prior.log_density(p)


def _as_log_density(obj):
    """Accept a Prior object, a likelihood context, or any callable."""
    if hasattr(obj, "log_density"):
        return obj.log_density
    if callable(obj):
        return obj
    raise TypeError(f"expected a prior/likelihood or a callable, got {type(obj).__name__}")


@dataclass(eq=False)
class LikelihoodContext:
    """Everything needed to score a parameter vector against the data.

    Builds the conductivity model implied by the parametrization, runs one
    forward solve, and compares against the stacked measurement vector.  For
    ``conductivity_values`` the Vandermonde conversion to coefficients happens
    here on every evaluation.
    """

    problem: DimensionlessProblem
    mesh: Mesh
    grid: TimeGrid
    measurements: MeasurementSet
    parametrization: str
    theta_nodes: np.ndarray | None = None  # conductivity_values: (4,)
    knot_grid: np.ndarray | None = None  # piecewise: (N,)

    def __post_init__(self):
        if self.parametrization not in _PARAMETRIZATIONS:
            raise ConfigError(f"unknown parametrization '{self.parametrization}'")
        if self.parametrization == PARAM_VALUES:
            if self.theta_nodes is None:
                raise ConfigError("conductivity_values parametrization needs theta_nodes")
            self.theta_nodes = np.asarray(self.theta_nodes, dtype=float)
        if self.parametrization == PARAM_PIECEWISE:
            if self.knot_grid is None:
                raise ConfigError("piecewise parametrization needs a knot_grid")
            self.knot_grid = np.asarray(self.knot_grid, dtype=float)
        expected = self.grid.n_steps
        if self.measurements.n_times != expected:
            raise ConfigError(
                f"measurement set has {self.measurements.n_times} times per sensor "
                f"but the time grid has {expected} steps"
            )

    @property
    def n_parameters(self) -> int:
        if self.parametrization == PARAM_COEFFICIENTS:
            return 4
        if self.parametrization == PARAM_VALUES:
            return 4
        return int(self.knot_grid.size)

    def model_for(self, p):
        p = np.asarray(p, dtype=float)
        if p.size != self.n_parameters:
            raise ConfigError(f"expected {self.n_parameters} parameters, got {p.size}")
        if self.parametrization == PARAM_COEFFICIENTS:
            return CubicByCoefficients(p)
        if self.parametrization == PARAM_VALUES:
            return CubicByCoefficients(values_to_coefficients(self.theta_nodes, p))
        return PiecewiseLinear(self.knot_grid, p)

    def predicted(self, p) -> np.ndarray:
        """Stacked model prediction of the data vector (one forward solve)."""
        history = solve_forward(
            self.problem,
            self.mesh,
            self.grid,
            self.model_for(p),
            self.measurements.sensor_positions,
        )
        return np.concatenate([history[:, j] for j in range(history.shape[1])])

    def log_density(self, p) -> float:
        """Gaussian log-likelihood with known sigma; -inf if the solve fails."""
        p = np.asarray(p, dtype=float)
        if p.size != self.n_parameters:
            # a size mismatch is a caller bug, not a bad proposal
            raise ConfigError(f"expected {self.n_parameters} parameters, got {p.size}")
        try:
            predicted = self.predicted(p)
        except HeatBayesError as exc:
            logger.warning("forward solve failed during likelihood evaluation: %s", exc)
            return -np.inf
        residual = (self.measurements.d - predicted) / self.measurements.sigma
        return -0.5 * float(residual @ residual)

    __call__ = log_density


def log_likelihood(p, ctx: LikelihoodContext) -> float:
    """Module-level convenience wrapper around ``ctx.log_density``."""
    return ctx.log_density(p)


@dataclass(eq=False)
class Chain:
    """A recorded Markov chain: every state, accepted or repeated."""

    samples: np.ndarray  # (R, N)
    log_posterior: np.ndarray  # (R,)
    accepted: int
    seed: int | None
    proposal_covariance: np.ndarray | None = None  # (N, N), MH phase only
    burn_in: int = 0
    parametrization: str | None = None
    derived_coefficients: np.ndarray | None = None  # (R, 4) for conductivity_values
    phase: str = "mh"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.log_posterior = np.asarray(self.log_posterior, dtype=float)
        if self.samples.ndim != 2 or self.log_posterior.shape != (self.samples.shape[0],):
            raise ConfigError("chain arrays are inconsistent")
        if not 0 <= self.burn_in < self.samples.shape[0]:
            raise ConfigError(
                f"burn_in must be in [0, {self.samples.shape[0]}), got {self.burn_in}"
            )

    @property
    def n_steps(self) -> int:
        return self.samples.shape[0]

    @property
    def n_parameters(self) -> int:
        return self.samples.shape[1]

    @property
    def acceptance_ratio(self) -> float:
        return self.accepted / self.n_steps

    def retained(self) -> np.ndarray:
        """Post-burn-in samples."""
        return self.samples[self.burn_in :]


def _validate_start(p, log_prior_fn, log_likelihood_fn):
    lp = float(log_prior_fn(p))
    if not np.isfinite(lp):
        raise ConfigError("initial state is outside the prior support")
    ll = float(log_likelihood_fn(p))
    if not np.isfinite(ll):
        raise ConfigError("likelihood is not finite at the initial state")
    return lp + ll


def run_mh(
    init,
    proposal_covariance,
    prior,
    likelihood,
    n_steps: int,
    seed: int,
    burn_in: int = 0,
    parametrization: str | None = None,
) -> Chain:
    """Metropolis-Hastings with a frozen Gaussian proposal.

    Symmetric proposals, acceptance min(1, exp(delta log-posterior)); a
    rejected proposal repeats the previous state in the chain.  The prior is
    evaluated first, so out-of-support proposals never trigger a solve.
    """
    p = np.asarray(init, dtype=float).copy()
    n = p.size
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    cov = np.asarray(proposal_covariance, dtype=float)
    if cov.shape != (n, n):
        raise ConfigError(f"proposal covariance must be ({n}, {n}), got {cov.shape}")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ConfigError(f"proposal covariance is not positive definite: {exc}") from exc

    log_prior_fn = _as_log_density(prior)
    log_likelihood_fn = _as_log_density(likelihood)
    log_post = _validate_start(p, log_prior_fn, log_likelihood_fn)

    rng = np.random.default_rng(seed)
    samples = np.empty((n_steps, n))
    log_posts = np.empty(n_steps)
    accepted = 0
    for i in range(n_steps):
        proposal = p + chol @ rng.standard_normal(n)
        lp = float(log_prior_fn(proposal))
        if np.isfinite(lp):
            ll = float(log_likelihood_fn(proposal))
            delta = lp + ll - log_post
            if delta >= 0.0 or rng.random() < np.exp(delta):
                p = proposal
                log_post = lp + ll
                accepted += 1
        samples[i] = p
        log_posts[i] = log_post
    return Chain(
        samples=samples,
        log_posterior=log_posts,
        accepted=accepted,
        seed=int(seed),
        proposal_covariance=cov.copy(),
        burn_in=burn_in,
        parametrization=parametrization,
        phase="mh",
    )


def run_adaptive(
    init,
    prior,
    likelihood,
    n_adapt: int,
    seed: int,
    scale: float | None = None,
    regularization: float = 1e-10,
    warmup: int | None = None,
    init_rel_step: float = 0.05,
    init_step_floor: float = 0.01,
    stall_steps: int = 1000,
    stall_shrink: float = 0.5,
    target_acceptance: float = 0.28,
    parametrization: str | None = None,
):
    """Adaptive-Metropolis phase; returns (proposal_covariance, chain).

    For the first ``warmup`` steps (10 N by default) proposals are isotropic
    with per-component std max(init_rel_step * |init|, init_step_floor).
    Afterwards the proposal covariance tracks scale * (cov + regularization * I),
    where cov is the running empirical covariance of recent states and scale
    defaults to 2.38^2 / N.

    Three details keep a cold start from poisoning the result.

    * The whole active proposal carries a global factor lambda, adapted every
      step by a Robbins-Monro recursion toward ``target_acceptance``.  This
      corrects a mis-scaled proposal exponentially fast in both directions -
      the empirical-covariance feedback alone re-expands a collapsed proposal
      only like sqrt(steps), which can burn an entire budget.  The returned
      covariance includes the final lambda**2, so the frozen MH proposal is
      the proposal the adaptive phase actually used at its end.  When the
      empirical estimate matches the posterior, lambda settles near 1 and the
      factor is a no-op; in many dimensions the windowed estimate is biased
      small by within-window autocorrelation, and lambda is the measured
      correction.
    * The covariance accumulator is reset at the midpoint of the phase, so
      the returned (frozen) covariance is estimated from the second half
      only - the drift from the initial guess toward the posterior mode
      would otherwise dominate the estimate and inflate the MH proposal by
      an order of magnitude.
    * ``stall_steps`` consecutive rejections shrink lambda, log a warning,
      and also reset the accumulator: a stuck chain is direct evidence the
      current estimate is wrong.  Across resets the proposal keeps using the
      last usable Cholesky factor (a reset discards history, not the ability
      to move); the learned proposal switches on only once the estimate is
      usable (>= 2N accumulated states, >= 5 acceptances).
    """
    p = np.asarray(init, dtype=float).copy()
    n = p.size
    if warmup is None:
        warmup = 10 * n
    if scale is None:
        scale = 2.38**2 / n
    if n_adapt <= warmup + 2 * n:
        raise ConfigError(
            f"n_adapt = {n_adapt} is too short: need more than warmup + 2N = {warmup + 2 * n} "
            "steps to estimate a proposal covariance"
        )
    if not 0.0 < stall_shrink < 1.0:
        raise ConfigError("stall_shrink must be in (0, 1)")
    if not 0.0 < target_acceptance < 1.0:
        raise ConfigError("target_acceptance must be in (0, 1)")

    log_prior_fn = _as_log_density(prior)
    log_likelihood_fn = _as_log_density(likelihood)
    log_post = _validate_start(p, log_prior_fn, log_likelihood_fn)

    rng = np.random.default_rng(seed)
    iso_step = np.maximum(init_rel_step * np.abs(p), init_step_floor)
    eye = np.eye(n)
    estimation_start = max(warmup, n_adapt // 2)

    # Running mean / scatter (Welford) of the states since the last reset.
    count = 0
    mean = np.zeros(n)
    scatter = np.zeros((n, n))
    accepted_since_reset = 0

    def reset_accumulator():
        nonlocal count, mean, scatter, accepted_since_reset
        count = 0
        mean = np.zeros(n)
        scatter = np.zeros((n, n))
        accepted_since_reset = 0

    samples = np.empty((n_adapt, n))
    log_posts = np.empty(n_adapt)
    accepted = 0
    consecutive_rejects = 0
    active_chol = None
    log_lambda = 0.0

    for i in range(n_adapt):
        if i == estimation_start:
            reset_accumulator()

        lam = np.exp(log_lambda)
        z = rng.standard_normal(n)
        if i >= warmup and active_chol is not None:
            proposal = p + lam * (active_chol @ z)
        else:
            proposal = p + lam * iso_step * z

        moved = False
        accept_prob = 0.0
        lp = float(log_prior_fn(proposal))
        if np.isfinite(lp):
            ll = float(log_likelihood_fn(proposal))
            delta = lp + ll - log_post
            accept_prob = min(1.0, np.exp(min(delta, 0.0)))
            if delta >= 0.0 or rng.random() < np.exp(delta):
                p = proposal
                log_post = lp + ll
                accepted += 1
                accepted_since_reset += 1
                moved = True
        log_lambda += min(0.25, (i + 1.0) ** -0.6) * (accept_prob - target_acceptance)

        if moved:
            consecutive_rejects = 0
        else:
            consecutive_rejects += 1
            if consecutive_rejects >= stall_steps:
                log_lambda += 0.5 * np.log(stall_shrink)
                consecutive_rejects = 0
                # Leave enough room to re-estimate, otherwise keep the data.
                if n_adapt - i > 2 * n + 1:
                    reset_accumulator()
                logger.warning(
                    "adaptive phase: %d consecutive rejections at step %d; "
                    "shrinking the proposal by %g and restarting the covariance estimate",
                    stall_steps,
                    i,
                    stall_shrink,
                )

        samples[i] = p
        log_posts[i] = log_post

        if i >= warmup:
            count += 1
            delta_vec = p - mean
            mean += delta_vec / count
            scatter += np.outer(delta_vec, p - mean)
            if count >= 2 * n and accepted_since_reset >= 5:
                cov_emp = scatter / (count - 1)
                try:
                    active_chol = np.linalg.cholesky(scale * (cov_emp + regularization * eye))
                except np.linalg.LinAlgError:
                    pass  # keep the previous factor; the estimate may recover

    cov_emp = scatter / max(count - 1, 1)
    proposal_covariance = np.exp(2.0 * log_lambda) * scale * (cov_emp + regularization * eye)
    chain = Chain(
        samples=samples,
        log_posterior=log_posts,
        accepted=accepted,
        seed=int(seed),
        proposal_covariance=proposal_covariance,
        burn_in=0,
        parametrization=parametrization,
        phase="adaptive",
    )
    return proposal_covariance, chain


def attach_derived_coefficients(chain: Chain, theta_nodes) -> None:
    """For conductivity_values chains: store the cubic-coefficient chain.

    The map values -> coefficients is the fixed linear solve used inside the
    likelihood, applied to every recorded state.
    """
    theta_nodes = np.asarray(theta_nodes, dtype=float)
    vander = np.vander(theta_nodes, 4)
    chain.derived_coefficients = np.linalg.solve(vander, chain.samples.T).T


def save_chain(chain: Chain, directory, stem: str = "chain") -> Path:
    """Write <stem>.csv (states + log posterior) and <stem>.manifest.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{stem}.csv"
    n = chain.n_parameters
    headers = [f"p{j}" for j in range(n)]
    derived = chain.derived_coefficients
    if derived is not None:
        headers += [f"c{j}" for j in range(derived.shape[1])]
    headers.append("log_posterior")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for i in range(chain.n_steps):
            row = [repr(float(v)) for v in chain.samples[i]]
            if derived is not None:
                row += [repr(float(v)) for v in derived[i]]
            row.append(repr(float(chain.log_posterior[i])))
            writer.writerow(row)
    manifest = {
        "format": "heatbayes-chain",
        "phase": chain.phase,
        "n_steps": chain.n_steps,
        "n_parameters": n,
        "accepted": chain.accepted,
        "acceptance_ratio": chain.acceptance_ratio,
        "seed": chain.seed,
        "burn_in": chain.burn_in,
        "parametrization": chain.parametrization,
        "proposal_covariance": None
        if chain.proposal_covariance is None
        else np.asarray(chain.proposal_covariance).tolist(),
        "has_derived_coefficients": derived is not None,
    }
    with open(directory / f"{stem}.manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


def load_chain(directory, stem: str = "chain") -> Chain:
    directory = Path(directory)
    csv_path = directory / f"{stem}.csv"
    manifest_path = directory / f"{stem}.manifest.json"
    if not csv_path.exists() or not manifest_path.exists():
        raise ConfigError(f"chain files not found under {directory}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows, dtype=float)
    n = manifest["n_parameters"]
    param_cols = [header.index(f"p{j}") for j in range(n)]
    samples = data[:, param_cols]
    log_post = data[:, header.index("log_posterior")]
    derived = None
    if manifest.get("has_derived_coefficients"):
        derived_cols = [header.index(f"c{j}") for j in range(4)]
        derived = data[:, derived_cols]
    cov = manifest.get("proposal_covariance")
    return Chain(
        samples=samples,
        log_posterior=log_post,
        accepted=int(manifest["accepted"]),
        seed=manifest.get("seed"),
        proposal_covariance=None if cov is None else np.asarray(cov, dtype=float),
        burn_in=int(manifest.get("burn_in", 0)),
        parametrization=manifest.get("parametrization"),
        derived_coefficients=derived,
        phase=manifest.get("phase", "mh"),
    )
