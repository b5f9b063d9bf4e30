"""Maximum-likelihood fitting of beta regressions with varying dispersion.

The mean submodel is ``g(mu_t) = x_t' beta`` and the dispersion submodel
``h(sigma_t) = z_t' gamma``; parameters are stacked as ``theta = (beta, gamma)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.special import digamma, gammaln, polygamma

from .design import Dataset, DesignPair, ModelSpec, build_design
from .distribution import DomainError
from .links import get_link
from .optimize import bfgs


class EvaluationError(ArithmeticError):
    """The log-likelihood is not finite at the requested parameters."""


class ConvergenceError(RuntimeError):
    pass


class BetaLikelihood:
    """Log-likelihood, score and information for fixed data and design."""

    def __init__(self, y, X, Z, mean_link="logit", disp_link="logit"):
        self.y = np.asarray(y, dtype=float)
        self.X = np.asarray(X, dtype=float)
        self.Z = np.asarray(Z, dtype=float)
        self.g = get_link(mean_link)
        self.h = get_link(disp_link)
        self.logy = np.log(self.y)
        self.log1my = np.log1p(-self.y)
        self.r = self.X.shape[1]
        self.s = self.Z.shape[1]

    @classmethod
    def from_spec(cls, ds: Dataset, spec: ModelSpec, design: DesignPair | None = None):
        design = build_design(ds, spec) if design is None else design
        return cls(ds.y, design.X, design.Z, spec.mean_link, spec.disp_link)

    @property
    def n(self):
        return self.y.size

    @property
    def k(self):
        return self.r + self.s

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta[:self.r], theta[self.r:]

    def fitted(self, theta):
        beta, gamma = self.split(theta)
        eta = self.X @ beta
        nu = self.Z @ gamma
        return eta, nu, self.g.inverse_unchecked(eta), self.h.inverse_unchecked(nu)

    def loglik(self, theta) -> float:
        return self._evaluate(theta, with_grad=False)[0]

    def score(self, theta) -> np.ndarray:
        return self._evaluate(theta, with_grad=True)[1]

    def loglik_and_score(self, theta):
        return self._evaluate(theta, with_grad=True)

    def _evaluate(self, theta, with_grad):
        _, _, mu, sigma = self.fitted(theta)
        phi = (1.0 - sigma) * (1.0 + sigma) / (sigma * sigma)
        a = mu * phi
        b = phi - a
        ll = np.sum(gammaln(phi) - gammaln(a) - gammaln(b)
                    + (a - 1.0) * self.logy + (b - 1.0) * self.log1my)
        if not with_grad:
            return ll, None
        psi_a = digamma(a)
        psi_b = digamma(b)
        d_mu = phi * (self.logy - self.log1my - psi_a + psi_b)
        d_phi = (digamma(phi) - mu * psi_a - (1.0 - mu) * psi_b
                 + mu * self.logy + (1.0 - mu) * self.log1my)
        dphi_dsigma = -2.0 / sigma**3
        w_beta = d_mu / self.g._dg(mu)
        w_gamma = d_phi * dphi_dsigma / self.h._dg(sigma)
        return ll, np.concatenate([self.X.T @ w_beta, self.Z.T @ w_gamma])

    def expected_information(self, theta) -> np.ndarray:
        """Fisher information ``K(beta, gamma)`` in closed form (trigamma weights)."""
        _, _, mu, sigma = self.fitted(theta)
        phi = (1.0 - sigma) * (1.0 + sigma) / (sigma * sigma)
        a = mu * phi
        b = phi - a
        t_a = polygamma(1, a)
        t_b = polygamma(1, b)
        t_phi = polygamma(1, phi)
        dmu = 1.0 / self.g._dg(mu)
        dphi = -2.0 / sigma**3 / self.h._dg(sigma)
        w = phi * phi * (t_a + t_b) * dmu * dmu
        c = phi * (mu * t_a - (1.0 - mu) * t_b) * dmu * dphi
        d = (mu * mu * t_a + (1.0 - mu) ** 2 * t_b - t_phi) * dphi * dphi
        X, Z = self.X, self.Z
        Kbg = X.T @ (c[:, None] * Z)
        return np.block([[X.T @ (w[:, None] * X), Kbg],
                         [Kbg.T, Z.T @ (d[:, None] * Z)]])

    def observed_information(self, theta, rel_step=1e-5) -> np.ndarray:
        """Negative Hessian by central differences of the analytic score."""
        theta = np.asarray(theta, dtype=float)
        k = theta.size
        H = np.empty((k, k))
        for i in range(k):
            h = rel_step * max(1.0, abs(theta[i]))
            e = np.zeros(k)
            e[i] = h
            H[:, i] = (self.score(theta + e) - self.score(theta - e)) / (2.0 * h)
        return -(H + H.T) / 2.0

    def start(self):
        """OLS of ``g(y)`` on ``X`` for beta; moment-based constant dispersion for gamma."""
        gy = self.g._g(self.y)
        beta0, *_ = np.linalg.lstsq(self.X, gy, rcond=None)
        mu0 = self.g.inverse_unchecked(self.X @ beta0)
        resid = gy - self.X @ beta0
        dof = max(self.n - self.r, 1)
        var_t = (resid @ resid) / dof / self.g._dg(mu0) ** 2
        phi0 = np.mean(mu0 * (1.0 - mu0) / np.maximum(var_t, 1e-300)) - 1.0
        if not np.isfinite(phi0) or phi0 <= 0.0:
            phi0 = 1.0
        sigma0 = np.clip(np.sqrt(1.0 / (1.0 + phi0)), 1e-6, 1.0 - 1e-6)
        gamma0 = np.zeros(self.s)
        gamma0[0] = float(self.h._g(sigma0))
        return np.concatenate([beta0, gamma0])


@dataclass
class FitOptions:
    max_iter: int = 500
    gtol: float = 1e-8
    ftol: float = 0.0
    std_errors: bool = True
    keep_trace: bool = False


@dataclass
class FitResult:
    spec: ModelSpec
    beta_hat: np.ndarray
    gamma_hat: np.ndarray
    loglik: float
    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    eta_hat: np.ndarray
    nu_hat: np.ndarray
    std_errors: np.ndarray | None
    converged: bool
    iterations: int
    grad_norm: float
    message: str = ""
    trace: list = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.mu_hat.size

    @property
    def r(self) -> int:
        return self.beta_hat.size

    @property
    def s(self) -> int:
        return self.gamma_hat.size

    @property
    def k(self) -> int:
        return self.r + self.s

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.beta_hat, self.gamma_hat])

    @property
    def param_names(self) -> list[str]:
        return ([f"beta:{t}" for t in ("(intercept)",) + self.spec.mean_terms]
                + [f"gamma:{t}" for t in ("(intercept)",) + self.spec.disp_terms])

    def to_dict(self) -> dict:
        se = None if self.std_errors is None else self.std_errors.tolist()
        return {
            "spec": self.spec.to_dict(),
            "n": self.n,
            "beta_hat": self.beta_hat.tolist(),
            "gamma_hat": self.gamma_hat.tolist(),
            "param_names": self.param_names,
            "std_errors": se,
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "message": self.message,
            "mu_hat": self.mu_hat.tolist(),
            "sigma_hat": self.sigma_hat.tolist(),
            "eta_hat": self.eta_hat.tolist(),
            "nu_hat": self.nu_hat.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        arr = lambda key: np.asarray(d[key], dtype=float)  # noqa: E731
        se = d.get("std_errors")
        return cls(ModelSpec.from_dict(d["spec"]), arr("beta_hat"), arr("gamma_hat"),
                   float(d["loglik"]), arr("mu_hat"), arr("sigma_hat"), arr("eta_hat"),
                   arr("nu_hat"), None if se is None else np.asarray(se, dtype=float),
                   bool(d["converged"]), int(d["iterations"]), float(d["grad_norm"]),
                   d.get("message", ""))


def loglik(ds: Dataset, spec: ModelSpec, beta, gamma) -> float:
    """Log-likelihood of ``(beta, gamma)`` under ``spec``."""
    lik = BetaLikelihood.from_spec(ds, spec)
    val = lik.loglik(np.concatenate([np.ravel(beta), np.ravel(gamma)]))
    if not np.isfinite(val):
        raise EvaluationError("log-likelihood is not finite")
    return float(val)


def score(ds: Dataset, spec: ModelSpec, beta, gamma) -> np.ndarray:
    """Analytic gradient of :func:`loglik` with respect to ``(beta, gamma)``."""
    lik = BetaLikelihood.from_spec(ds, spec)
    ll, U = lik.loglik_and_score(np.concatenate([np.ravel(beta), np.ravel(gamma)]))
    if not np.isfinite(ll) or not np.all(np.isfinite(U)):
        raise EvaluationError("score is not finite")
    return U


def _standard_errors(lik, theta):
    J = lik.observed_information(theta)
    try:
        np.linalg.cholesky(J)
        cov = np.linalg.inv(J)
    except np.linalg.LinAlgError:
        return None
    se = np.sqrt(np.diag(cov))
    return se if np.all(np.isfinite(se)) else None


def fit_likelihood(lik: BetaLikelihood, spec: ModelSpec, options: FitOptions | None = None,
                   theta0=None) -> FitResult:
    opts = options or FitOptions()
    if lik.k >= lik.n:
        raise DomainError(f"need k < n, got k={lik.k}, n={lik.n}")
    theta0 = lik.start() if theta0 is None else np.asarray(theta0, dtype=float)

    def objective(theta):
        ll, U = lik.loglik_and_score(theta)
        return -ll, -U

    H0 = None
    try:
        K0 = lik.expected_information(theta0)
        np.linalg.cholesky(K0)
        H0 = np.linalg.inv(K0)
    except np.linalg.LinAlgError:
        pass
    res = bfgs(objective, theta0, inv_hess0=H0, gtol=opts.gtol, ftol=opts.ftol,
               max_iter=opts.max_iter, keep_trace=opts.keep_trace)
    theta = res.x
    eta, nu, mu, sigma = lik.fitted(theta)
    se = _standard_errors(lik, theta) if opts.std_errors else None
    return FitResult(spec, theta[:lik.r].copy(), theta[lik.r:].copy(), -float(res.fun), mu, sigma,
                     eta, nu, se, bool(res.converged and np.isfinite(res.fun)), res.iterations,
                     float(np.max(np.abs(res.grad))), res.message,
                     [-f for f in res.trace])


def fit_mle(ds: Dataset, spec: ModelSpec, options: FitOptions | None = None,
            design: DesignPair | None = None) -> FitResult:
    """Maximise the log-likelihood of ``spec`` on ``ds`` by BFGS.

    Standard errors come from the inverse observed information; they are
    ``None`` when that matrix is singular or not positive definite.
    """
    return fit_likelihood(BetaLikelihood.from_spec(ds, spec, design), spec, options)


def null_spec(spec: ModelSpec | None = None) -> ModelSpec:
    if spec is None:
        return ModelSpec()
    return ModelSpec((), (), spec.mean_link, spec.disp_link)


def fit_null(ds: Dataset, spec: ModelSpec | None = None, options: FitOptions | None = None) -> FitResult:
    """Fit with intercepts only in both submodels."""
    return fit_mle(ds, null_spec(spec), options or FitOptions(std_errors=False))


@dataclass(frozen=True)
class WaldRow:
    name: str
    estimate: float
    std_error: float
    z: float
    p_value: float


def wald_table(fit: FitResult, ref_dist: str = "normal") -> list[WaldRow]:
    """Estimates, standard errors, ``z = estimate / se`` and two-sided p-values.

    ``ref_dist="t"`` uses a Student-t reference with ``n - k`` degrees of freedom.
    """
    if fit.std_errors is None:
        raise ValueError("fit has no standard errors")
    est = fit.params
    z = est / fit.std_errors
    if ref_dist == "normal":
        p = 2.0 * stats.norm.sf(np.abs(z))
    elif ref_dist == "t":
        p = 2.0 * stats.t.sf(np.abs(z), fit.n - fit.k)
    else:
        raise ValueError(f"ref_dist must be 'normal' or 't', got {ref_dist!r}")
    return [WaldRow(nm, float(e), float(s), float(zz), float(pp))
            for nm, e, s, zz, pp in zip(fit.param_names, est, fit.std_errors, z, p)]


def z_test(estimate: float, std_error: float, ref_dist: str = "normal", df: int | None = None):
    """Single-coefficient Wald statistic and two-sided p-value."""
    z = estimate / std_error
    if ref_dist == "t":
        return z, float(2.0 * stats.t.sf(abs(z), df))
    return z, float(2.0 * stats.norm.sf(abs(z)))


@dataclass(frozen=True)
class ScoreTestResult:
    statistic: float
    df: int
    p_value: float
    restricted: FitResult = field(repr=False, compare=False)


def score_test_constant_dispersion(ds: Dataset, spec: ModelSpec, information: str = "expected",
                                   options: FitOptions | None = None) -> ScoreTestResult:
    """Score test of ``gamma_2 = ... = gamma_s = 0`` (constant dispersion).

    The restricted model keeps the mean submodel of ``spec`` and only an
    intercept for the dispersion.  ``information`` selects the matrix whose
    inverse weighs the score: ``"expected"`` (Fisher information, default)
    or ``"observed"`` (negative Hessian).
    """
    if spec.s < 2:
        raise DomainError("nothing to test: the dispersion submodel has no covariates")
    lik = BetaLikelihood.from_spec(ds, spec)
    restricted_spec = replace(spec, disp_terms=())
    restricted = fit_mle(ds, restricted_spec, options or FitOptions(std_errors=False))
    if not restricted.converged:
        raise ConvergenceError(f"restricted fit did not converge: {restricted.message}")
    theta = np.concatenate([restricted.beta_hat, restricted.gamma_hat, np.zeros(spec.s - 1)])
    U = lik.score(theta)
    if information == "expected":
        K = lik.expected_information(theta)
    elif information == "observed":
        K = lik.observed_information(theta)
    else:
        raise ValueError("information must be 'expected' or 'observed'")
    q = spec.s - 1
    block = np.linalg.inv(K)[-q:, -q:]
    S = float(max(U[-q:] @ block @ U[-q:], 0.0))
    return ScoreTestResult(S, q, float(stats.chi2.sf(S, q)), restricted)


__all__ = [
    "BetaLikelihood", "ConvergenceError", "EvaluationError", "FitOptions", "FitResult",
    "ScoreTestResult", "WaldRow", "fit_likelihood", "fit_mle", "fit_null", "loglik",
    "null_spec", "score", "score_test_constant_dispersion", "wald_table",
    "z_test",
]
