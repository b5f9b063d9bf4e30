import math

import numpy as np
import pytest
from scipy import integrate, stats

from betaselect import (BetaLikelihood, BetaParams, Dataset, FitOptions, ModelSpec, RankDeficiencyError,
                        DomainError, fit_mle, fit_null, log_density, loglik, score,
                        score_test_constant_dispersion, wald_table)
from betaselect.estimation import z_test

import oracles
from conftest import synthetic

SPEC = ModelSpec(("a", "b"), ("a", "b"))


def test_loglik_single_uniform_observation():
    ds = Dataset(np.array([0.3]), {})
    # mu = 0.5 and phi = 2 (sigma^2 = 1/3)
    g0 = math.log(math.sqrt(1 / 3) / (1 - math.sqrt(1 / 3)))
    assert loglik(ds, ModelSpec(), [0.0], [g0]) == pytest.approx(0.0, abs=1e-13)


def test_loglik_matches_density_sum(synth):
    rng = np.random.default_rng(3)
    X = oracles.design(dict(synth.covariates), ("a", "b"))
    for _ in range(20):
        beta, gamma = rng.normal(0, 0.7, 3), rng.normal(-0.5, 0.5, 3)
        mu = 1 / (1 + np.exp(-X @ beta))
        sig = 1 / (1 + np.exp(-X @ gamma))
        by_core = sum(log_density(y, BetaParams(m, s)) for y, m, s in zip(synth.y, mu, sig))
        got = loglik(synth, SPEC, beta, gamma)
        assert got == pytest.approx(by_core, abs=1e-10)
        assert got == pytest.approx(oracles.loglik(synth.y, X, X, beta, gamma), abs=1e-9)


@pytest.mark.parametrize("links", [("logit", "logit"), ("probit", "cloglog"), ("loglog", "cauchy")])
def test_score_matches_central_differences(synth, links):
    spec = ModelSpec(("a", "b"), ("a", "b"), *links)
    lik = BetaLikelihood.from_spec(synth, spec)
    rng = np.random.default_rng(5)
    worst, points = 0.0, 0
    while points < 100:
        theta = np.concatenate([rng.normal(0, 0.5, 3), rng.normal(-0.6, 0.3, 3)])
        _, _, mu, sigma = lik.fitted(theta)
        # the clamp at 1e-12 flattens the likelihood; stay where it is inactive
        if min(mu.min(), 1 - mu.max(), sigma.min(), 1 - sigma.max()) < 1e-8:
            continue
        points += 1
        U = lik.score(theta)
        for i in range(theta.size):
            h = 1e-5 * max(1.0, abs(theta[i]))
            e = np.zeros(theta.size)
            e[i] = h
            # fourth-order central difference
            fd = (-lik.loglik(theta + 2 * e) + 8 * lik.loglik(theta + e)
                  - 8 * lik.loglik(theta - e) + lik.loglik(theta - 2 * e)) / (12 * h)
            worst = max(worst, abs(U[i] - fd) / max(1.0, abs(fd)))
    assert worst <= 1e-6


def test_score_reflection_symmetry(synth):
    flipped = Dataset(1.0 - synth.y, synth.covariates)
    beta, gamma = np.array([0.4, -0.3, 0.2]), np.array([-0.8, 0.1, 0.3])
    u = score(synth, SPEC, beta, gamma)
    v = score(flipped, SPEC, -beta, gamma)
    np.testing.assert_allclose(v[:3], -u[:3], atol=1e-10)
    np.testing.assert_allclose(v[3:], u[3:], atol=1e-10)


def test_expected_information_single_observation_quadrature():
    # K = E[U U'] for one observation, by quadrature over y
    theta = np.array([0.4, -0.7])
    sig = 1 / (1 + math.exp(0.7))
    p = BetaParams(1 / (1 + math.exp(-0.4)), sig)

    def lik_at(y):
        return BetaLikelihood(np.array([y]), np.ones((1, 1)), np.ones((1, 1)))

    K = lik_at(0.5).expected_information(theta)
    for i, j in [(0, 0), (0, 1), (1, 1)]:
        f = lambda y: lik_at(y).score(theta)[i] * lik_at(y).score(theta)[j] * math.exp(log_density(y, p))  # noqa: E731
        val = integrate.quad(f, 0, 1, limit=400, epsabs=1e-12, epsrel=1e-10)[0]
        assert K[i, j] == pytest.approx(val, rel=1e-7)


@pytest.fixture(scope="module")
def synth_fit():
    ds = synthetic(n=80, seed=2)
    return ds, fit_mle(ds, SPEC, FitOptions(keep_trace=True))


def test_first_order_conditions(synth_fit):
    ds, fit = synth_fit
    assert fit.converged
    U = score(ds, SPEC, fit.beta_hat, fit.gamma_hat)
    assert np.max(np.abs(U)) <= 1e-6
    assert np.all((fit.mu_hat > 0) & (fit.mu_hat < 1)) and np.all((fit.sigma_hat > 0) & (fit.sigma_hat < 1))


def test_trace_monotone(synth_fit):
    _, fit = synth_fit
    assert len(fit.trace) >= 2
    # steps below the rounding level of the objective may move it by that much
    slack = 1e-10 * max(1.0, abs(fit.loglik))
    assert np.all(np.diff(fit.trace) >= -slack)
    assert fit.trace[-1] > fit.trace[0]


def test_matches_independent_fit(synth_fit):
    ds, fit = synth_fit
    ref = oracles.fit(ds.y, dict(ds.covariates), ("a", "b"), ("a", "b"))
    assert fit.loglik == pytest.approx(ref["loglik"], abs=1e-7)
    np.testing.assert_allclose(fit.beta_hat, ref["beta"], atol=1e-4)
    np.testing.assert_allclose(fit.gamma_hat, ref["gamma"], atol=1e-4)


def test_nesting(synth_fit):
    ds, full = synth_fit
    subs = [ModelSpec(m, d) for m in [(), ("a",), ("b",), ("a", "b")] for d in [(), ("a",), ("b",), ("a", "b")]]
    fits = {s: fit_mle(ds, s, FitOptions(std_errors=False)) for s in subs}
    for s, f in fits.items():
        for t, g in fits.items():
            if set(s.mean_terms) <= set(t.mean_terms) and set(s.disp_terms) <= set(t.disp_terms):
                assert g.loglik >= f.loglik - 1e-6
    assert full.loglik >= fits[ModelSpec()].loglik - 1e-6


def test_reparametrisation(synth_fit):
    ds, fit = synth_fit
    scaled = Dataset(ds.y, {"a": ds["a"] * -3.0, "b": ds["b"]})
    f2 = fit_mle(scaled, SPEC)
    assert f2.loglik == pytest.approx(fit.loglik, abs=1e-8)
    assert f2.beta_hat[1] == pytest.approx(fit.beta_hat[1] / -3.0, abs=1e-6)
    assert f2.gamma_hat[1] == pytest.approx(fit.gamma_hat[1] / -3.0, abs=1e-6)
    np.testing.assert_allclose(f2.mu_hat, fit.mu_hat, atol=1e-8)
    np.testing.assert_allclose(f2.sigma_hat, fit.sigma_hat, atol=1e-8)


def test_intercept_only_recovers_half():
    rng = np.random.default_rng(8)
    ds = Dataset(rng.beta(3.0, 3.0, 300), {})
    fit = fit_mle(ds, ModelSpec())
    assert abs(fit.beta_hat[0]) <= 3 * fit.std_errors[0]


def test_serialisation_round_trip(synth_fit):
    import json
    from betaselect import FitResult
    _, fit = synth_fit
    back = FitResult.from_dict(json.loads(fit.to_json()))
    np.testing.assert_array_equal(back.params, fit.params)
    np.testing.assert_array_equal(back.mu_hat, fit.mu_hat)
    assert back.spec == fit.spec and back.loglik == fit.loglik


def test_too_many_parameters():
    ds = Dataset(np.array([0.2, 0.4, 0.5]), {"a": np.array([1.0, 2.0, 4.0])})
    with pytest.raises(DomainError):
        fit_mle(ds, ModelSpec(("a",), ("a",)))


def test_wald_examples():
    z, p = z_test(-0.8559, 0.2633)
    assert z == pytest.approx(-3.251, abs=5e-4)
    _, p_t = z_test(-0.8559, 0.2633, "t", 35)
    assert p_t == pytest.approx(0.0025, abs=1e-4)
    assert p == pytest.approx(2 * stats.norm.sf(3.2507), abs=1e-5)
    assert z_test(0.0, 0.3) == (0.0, 1.0)


def test_wald_table_layout(synth_fit):
    _, fit = synth_fit
    rows = wald_table(fit, "t")
    assert [r.name for r in rows] == fit.param_names
    for r in rows:
        assert r.z == pytest.approx(r.estimate / r.std_error)
        assert r.p_value == pytest.approx(2 * stats.t.sf(abs(r.z), fit.n - fit.k))
    with pytest.raises(ValueError):
        wald_table(fit, "cauchy")


def test_score_test_errors(synth):
    with pytest.raises(DomainError, match="nothing to test"):
        score_test_constant_dispersion(synth, ModelSpec(("a",), ()))
    ds = Dataset(synth.y, {**synth.covariates, "one": np.ones(synth.n)})
    with pytest.raises(RankDeficiencyError):
        score_test_constant_dispersion(ds, ModelSpec(("a",), ("one",)))


def test_score_test_nonnegative_both_informations(synth):
    for info in ("expected", "observed"):
        res = score_test_constant_dispersion(synth, ModelSpec(("a", "b"), ("a", "b")), info)
        assert res.statistic >= 0 and res.df == 2 and 0 <= res.p_value <= 1


def test_score_test_null_distribution():
    # constant dispersion: S should follow chi2 with df = 2
    rng = np.random.default_rng(123)
    n, reps = 100, 2000
    a, b = rng.uniform(size=n), rng.uniform(size=n)
    mu = 1 / (1 + np.exp(-(0.5 - a)))
    phi = 20.0
    stats_ = []
    for _ in range(reps):
        ds = Dataset(rng.beta(mu * phi, (1 - mu) * phi), {"a": a, "b": b})
        stats_.append(score_test_constant_dispersion(ds, ModelSpec(("a",), ("a", "b"))).statistic)
    stats_ = np.array(stats_)
    assert abs(np.mean(stats_ > stats.chi2.ppf(0.95, 2)) - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / reps)
    assert stats.kstest(stats_, "chi2", args=(2,)).pvalue > 0.01
