"""Priors, likelihood, and both sampler phases."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatbayes import (
    ConfigError,
    GMRFPrior,
    LikelihoodContext,
    Mesh,
    PARAM_COEFFICIENTS,
    PARAM_PIECEWISE,
    PARAM_VALUES,
    PositivityDomain,
    TemperatureRange,
    TimeGrid,
    TruncatedNormal,
    TruncatedUniformImproper,
    generate_synthetic,
    load_chain,
    run_adaptive,
    run_mh,
    save_chain,
)
from heatbayes.inference import Chain

from conftest import TRUTH_COEFFICIENTS


# --- positivity domain -------------------------------------------------------


def test_domain_coefficients_checks_whole_range():
    domain = PositivityDomain(PARAM_COEFFICIENTS, TemperatureRange(0.0, 4.0))
    assert domain(np.array([0.081, -0.486, 0.0918, 4.206]))
    # a cubic dipping negative inside the range is out even though the
    # endpoints are positive
    assert not domain(np.array([0.0, 1.0, -4.0, 3.9]))


def test_domain_piecewise_is_min_positive():
    domain = PositivityDomain(PARAM_PIECEWISE)
    assert domain(np.array([0.1, 5.0, 2.0]))
    assert not domain(np.array([0.1, 0.0, 2.0]))


def test_domain_values_goes_through_vandermonde():
    nodes = np.linspace(1.0, 4.0, 4)
    domain = PositivityDomain(
        PARAM_VALUES, TemperatureRange(1.0, 4.0), theta_nodes=nodes
    )
    assert domain(np.array([3.9, 3.0, 2.1, 2.1]))
    # values positive at the nodes but interpolating cubic dips between them
    assert not domain(np.array([0.05, 3.0, 0.05, 3.0]))


def test_domain_requires_range_for_cubics():
    with pytest.raises(ConfigError):
        PositivityDomain(PARAM_COEFFICIENTS)


# --- priors ------------------------------------------------------------------


@pytest.fixture(scope="module")
def piecewise_domain():
    return PositivityDomain(PARAM_PIECEWISE)


def test_uniform_prior_is_indicator(piecewise_domain):
    prior = TruncatedUniformImproper(piecewise_domain)
    assert prior.log_density(np.array([1.0, 2.0])) == 0.0
    assert prior.log_density(np.array([1.0, -2.0])) == -np.inf


def test_normal_prior_quadratic_form(piecewise_domain):
    prior = TruncatedNormal(
        mean=np.array([2.0, 3.0]), std=np.array([0.5, 1.0]), domain=piecewise_domain
    )
    # z-scores (1, -1) -> -0.5 * 2
    assert prior.log_density(np.array([2.5, 2.0])) == pytest.approx(-1.0)
    assert prior.log_density(np.array([2.0, 3.0])) == 0.0
    assert prior.log_density(np.array([-1.0, 3.0])) == -np.inf


def test_normal_prior_validates_shapes(piecewise_domain):
    with pytest.raises(ConfigError):
        TruncatedNormal(np.zeros(3), np.ones(2), piecewise_domain)
    with pytest.raises(ConfigError):
        TruncatedNormal(np.zeros(2), np.array([1.0, 0.0]), piecewise_domain)


def test_gmrf_zero_at_its_own_shape():
    qbar = np.array([0.5, -0.25])
    prior = GMRFPrior(qbar=qbar, gamma2=2e-4)
    p = np.array([1.0, 1.5, 1.25])  # diffs == qbar exactly
    assert prior.log_density(p) == 0.0


def test_gmrf_quadratic_form_value():
    prior = GMRFPrior(qbar=np.zeros(2), gamma2=0.5)
    p = np.array([1.0, 2.0, 1.0])  # diffs (1, -1)
    assert prior.log_density(p) == pytest.approx(-2.0)


def test_gmrf_rejects_nonpositive_components():
    prior = GMRFPrior(qbar=np.zeros(2), gamma2=1.0)
    assert prior.log_density(np.array([1.0, 0.0, 1.0])) == -np.inf
    assert prior.log_density(np.array([1.0, -3.0, 1.0])) == -np.inf


# Exact (bitwise) shift invariance is only testable when p + shift carries no
# rounding at all, so draw p from a dyadic lattice: multiples of 2**-49 below
# 0.025 are exact after adding 0.1, 1, or 10 (each sum lands on a multiple of
# the result's ulp), and adjacent differences then cancel the shift exactly.
_LATTICE = 2.0**-49


@pytest.mark.parametrize("shift", [0.1, 1.0, 10.0])
def test_gmrf_shift_invariance_exact(shift):
    rng = np.random.default_rng(12)
    k = rng.integers(1, 10**12, size=6)
    p = k * _LATTICE
    prior = GMRFPrior(qbar=np.array([0.02, -0.01, 0.005, 0.0, 0.003]), gamma2=2e-4)
    assert prior.log_density(p + shift) == prior.log_density(p)


@given(
    ints=st.lists(st.integers(min_value=1, max_value=10**12), min_size=2, max_size=12),
    shift=st.sampled_from([0.1, 1.0, 10.0]),
)
@settings(max_examples=60, deadline=None)
def test_gmrf_shift_invariance_property(ints, shift):
    p = np.asarray(ints, dtype=float) * _LATTICE
    prior = GMRFPrior(qbar=np.zeros(p.size - 1), gamma2=3e-3)
    assert prior.log_density(p + shift) == prior.log_density(p)


def test_gmrf_validates_gamma2():
    with pytest.raises(ConfigError):
        GMRFPrior(qbar=np.zeros(2), gamma2=0.0)


# --- likelihood --------------------------------------------------------------


@pytest.fixture(scope="module")
def short_ctx(problem, mesh, truth_model):
    grid = TimeGrid(dtau=8.715e-3, n_steps=30)
    data = generate_synthetic(problem, mesh, grid, truth_model, seed=5, noise_scale=0.0)
    rng = TemperatureRange.from_measurements(data.d)
    return LikelihoodContext(
        problem=problem,
        mesh=mesh,
        grid=grid,
        measurements=data,
        parametrization=PARAM_COEFFICIENTS,
    )


def test_likelihood_zero_at_truth_with_noiseless_data(short_ctx):
    # D equals the model prediction exactly, so the log-likelihood peaks at 0.
    assert short_ctx.log_density(TRUTH_COEFFICIENTS) == 0.0


def test_likelihood_single_standardized_residual(problem, mesh, truth_model):
    from heatbayes.measurements import MeasurementSet

    grid = TimeGrid(dtau=8.715e-3, n_steps=30)
    clean = generate_synthetic(problem, mesh, grid, truth_model, seed=5, noise_scale=0.0)
    d = clean.d.copy()
    d[17] += clean.sigma[17]  # move one observation by exactly one sigma
    bumped = MeasurementSet(
        sensor_positions=clean.sensor_positions,
        times=clean.times,
        d=d,
        sigma=clean.sigma,
        t_noiseless=clean.t_noiseless,
    )
    ctx = LikelihoodContext(
        problem=problem,
        mesh=mesh,
        grid=grid,
        measurements=bumped,
        parametrization=PARAM_COEFFICIENTS,
    )
    assert ctx.log_density(TRUTH_COEFFICIENTS) == pytest.approx(-0.5, rel=1e-12)


def test_likelihood_solver_failure_is_minus_inf(short_ctx, caplog):
    with caplog.at_level(logging.WARNING):
        value = short_ctx.log_density(np.array([0.0, 0.0, 0.0, -2.0]))
    assert value == -np.inf


def test_likelihood_parameter_count_enforced(short_ctx):
    with pytest.raises(ConfigError):
        short_ctx.log_density(np.ones(3))
    with pytest.raises(ConfigError):
        short_ctx.model_for(np.ones(3))


# --- fixed-proposal Metropolis-Hastings ---------------------------------------


def _standard_normal_2d():
    cov = np.array([[1.0, 0.6], [0.6, 2.0]])
    prec = np.linalg.inv(cov)
    mean = np.array([1.0, -2.0])

    def log_target(p):
        d = p - mean
        return -0.5 * float(d @ prec @ d)

    return mean, cov, log_target


def test_mh_recovers_analytic_gaussian():
    mean, cov, log_target = _standard_normal_2d()
    chain = run_mh(
        mean.copy(), (2.38**2 / 2) * cov, lambda p: 0.0, log_target, 100_000, seed=123
    )
    x = chain.samples
    # batch-means standard error of the mean
    nb = 100
    bs = x.shape[0] // nb
    batch_means = x[: nb * bs].reshape(nb, bs, 2).mean(axis=1)
    se = batch_means.std(axis=0, ddof=1) / np.sqrt(nb)
    np.testing.assert_array_less(np.abs(x.mean(axis=0) - mean), 3.0 * se)
    c = np.cov(x.T)
    np.testing.assert_allclose(c, cov, rtol=0.10)


def test_mh_rejected_proposals_duplicate_previous_state():
    mean, cov, log_target = _standard_normal_2d()
    chain = run_mh(mean.copy(), 25.0 * cov, lambda p: 0.0, log_target, 2000, seed=9)
    assert chain.accepted < chain.n_steps  # plenty of rejections with a huge step
    x = chain.samples
    changes = int(np.sum(np.any(x[1:] != x[:-1], axis=1)))
    # every change corresponds to an acceptance; the first row may or may not
    # have been an acceptance itself, so the counts differ by at most one
    assert changes in (chain.accepted, chain.accepted - 1)
    # rejected steps must copy the state bit-for-bit, which the change count
    # already established; spot-check one repeated pair explicitly
    repeat_rows = np.nonzero(np.all(x[1:] == x[:-1], axis=1))[0]
    assert repeat_rows.size > 0
    i = int(repeat_rows[0])
    np.testing.assert_array_equal(x[i + 1], x[i])


def test_mh_stored_log_posterior_matches_recomputation():
    mean, cov, log_target = _standard_normal_2d()
    chain = run_mh(mean.copy(), cov, lambda p: 0.0, log_target, 500, seed=3)
    idx = np.linspace(0, chain.n_steps - 1, 25).astype(int)
    for i in idx:
        assert chain.log_posterior[i] == pytest.approx(log_target(chain.samples[i]), rel=1e-12)


def test_mh_tiny_proposal_accepts_everything():
    mean, cov, log_target = _standard_normal_2d()
    chain = run_mh(mean.copy(), 1e-20 * np.eye(2), lambda p: 0.0, log_target, 2000, seed=1)
    assert chain.acceptance_ratio > 0.999


def test_mh_rejects_non_spd_covariance():
    mean, cov, log_target = _standard_normal_2d()
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
    with pytest.raises((ConfigError, np.linalg.LinAlgError)):
        run_mh(mean.copy(), bad, lambda p: 0.0, log_target, 100, seed=1)


def test_mh_requires_supported_init():
    prior = GMRFPrior(qbar=np.zeros(1), gamma2=1.0)
    with pytest.raises(ConfigError, match="support"):
        run_mh(np.array([-1.0, 1.0]), np.eye(2), prior, lambda p: 0.0, 100, seed=1)


def test_mh_never_retains_out_of_domain_states():
    # With a positivity prior, every recorded state must stay positive.
    prior = GMRFPrior(qbar=np.zeros(3), gamma2=0.05)
    init = np.array([0.3, 0.3, 0.3, 0.3])
    chain = run_mh(init, 0.2 * np.eye(4), prior, lambda p: 0.0, 5000, seed=11)
    assert np.min(chain.samples) > 0.0


def test_mh_prior_only_gmrf_difference_means():
    # Likelihood disabled: the chain samples the prior, so the mean of the
    # differences Z P must converge to qbar.
    qbar = np.array([0.05, -0.03, 0.01])
    gamma2 = 4e-4
    prior = GMRFPrior(qbar=qbar, gamma2=gamma2)
    init = np.array([2.0, 2.05, 2.02, 2.03])
    chain = run_mh(init, (2.38**2 / 4) * gamma2 * np.eye(4), prior, lambda p: 0.0, 60_000, seed=21)
    diffs = np.diff(chain.samples, axis=1)
    nb = 60
    bs = diffs.shape[0] // nb
    batch = diffs[: nb * bs].reshape(nb, bs, 3).mean(axis=1)
    se = batch.std(axis=0, ddof=1) / np.sqrt(nb)
    np.testing.assert_array_less(np.abs(diffs.mean(axis=0) - qbar), 3.0 * se)


def test_mh_deterministic_given_seed():
    mean, cov, log_target = _standard_normal_2d()
    a = run_mh(mean.copy(), cov, lambda p: 0.0, log_target, 400, seed=77)
    b = run_mh(mean.copy(), cov, lambda p: 0.0, log_target, 400, seed=77)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = run_mh(mean.copy(), cov, lambda p: 0.0, log_target, 400, seed=78)
    assert not np.array_equal(c.samples, a.samples)


# --- adaptive phase ------------------------------------------------------------


def test_adaptive_too_short_budget_raises():
    mean, cov, log_target = _standard_normal_2d()
    with pytest.raises(ConfigError, match="too short"):
        run_adaptive(mean.copy(), lambda p: 0.0, log_target, n_adapt=20, seed=1)


def test_adaptive_returns_spd_covariance_and_chain():
    mean, cov, log_target = _standard_normal_2d()
    proposal, chain = run_adaptive(mean.copy(), lambda p: 0.0, log_target, 4000, seed=2)
    assert proposal.shape == (2, 2)
    np.testing.assert_allclose(proposal, proposal.T, rtol=1e-12)
    assert np.all(np.linalg.eigvalsh(proposal) > 0)
    assert chain.phase == "adaptive"
    assert chain.n_steps == 4000


def test_adaptive_then_mh_lands_in_acceptance_window():
    mean, cov, log_target = _standard_normal_2d()
    proposal, adaptive_chain = run_adaptive(
        np.array([5.0, 5.0]), lambda p: 0.0, log_target, 20_000, seed=4
    )
    chain = run_mh(adaptive_chain.samples[-1], proposal, lambda p: 0.0, log_target, 5000, seed=5)
    assert 0.15 <= chain.acceptance_ratio <= 0.45


def test_adaptive_stall_warning(caplog):
    # A prior that forbids everything except a needle around the start makes
    # every proposal fail, which must trigger the consecutive-rejection
    # warning and a proposal shrink rather than an exception.
    center = np.array([1.0, 1.0])

    def needle_prior(p):
        return 0.0 if np.max(np.abs(p - center)) < 1e-12 else -np.inf

    with caplog.at_level(logging.WARNING, logger="heatbayes.inference"):
        run_adaptive(center.copy(), needle_prior, lambda p: 0.0, 1200, seed=6)
    assert any("consecutive rejections" in r.message for r in caplog.records)


def test_adaptive_deterministic_given_seed():
    mean, cov, log_target = _standard_normal_2d()
    p1, c1 = run_adaptive(mean.copy(), lambda p: 0.0, log_target, 3000, seed=42)
    p2, c2 = run_adaptive(mean.copy(), lambda p: 0.0, log_target, 3000, seed=42)
    np.testing.assert_array_equal(c1.samples, c2.samples)
    np.testing.assert_array_equal(p1, p2)


# --- chain persistence ----------------------------------------------------------


def test_chain_round_trip(tmp_path):
    mean, cov, log_target = _standard_normal_2d()
    chain = run_mh(mean.copy(), cov, lambda p: 0.0, log_target, 300, seed=8, burn_in=50)
    chain.parametrization = PARAM_COEFFICIENTS
    save_chain(chain, tmp_path)
    back = load_chain(tmp_path)
    np.testing.assert_array_equal(back.samples, chain.samples)
    np.testing.assert_array_equal(back.log_posterior, chain.log_posterior)
    assert back.accepted == chain.accepted
    assert back.burn_in == 50
    assert back.seed == 8
    assert back.parametrization == PARAM_COEFFICIENTS
    np.testing.assert_array_equal(back.proposal_covariance, chain.proposal_covariance)


def test_chain_burn_in_validation():
    with pytest.raises(ConfigError):
        Chain(
            samples=np.zeros((10, 2)),
            log_posterior=np.zeros(10),
            accepted=5,
            seed=1,
            burn_in=10,
        )
