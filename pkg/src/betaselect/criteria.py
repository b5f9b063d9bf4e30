"""Model-selection criteria for beta regressions with varying dispersion.

Information criteria (AIC, AICc, SIC, SICc, HQ, HQc) are minimised; the
penalised pseudo-R2 family (FC, LR, HS, the dispersion-aware D and the
weighted LR) is maximised.  :class:`CriterionConfig` bundles a criterion with
its tuning constants and knows its direction.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .distribution import DomainError
from .estimation import FitResult
from .links import get_link

MINIMIZED = ("AIC", "AICc", "SIC", "SICc", "HQ", "HQc")
MAXIMIZED = ("R2FC_adj", "R2LR_adj", "R2HS_adj", "R2D", "R2LRW")
KINDS = MINIMIZED + MAXIMIZED

PENALTY_RATES = ("one", "log_n", "sqrt_n")


class CriterionUndefined(DomainError):
    """The criterion's penalty or denominator is undefined for this (n, k)."""


def rate(name: str, n: int) -> float:
    """Evaluate a penalty rate ``lambda_n`` / ``delta_n`` by name."""
    if name == "one":
        return 1.0
    if name == "log_n":
        return math.log(n)
    if name == "sqrt_n":
        return math.sqrt(n)
    raise ValueError(f"unknown penalty rate {name!r}; use one of {PENALTY_RATES}")


def aic_family(loglik: float, n: int, k: int, kind: str) -> float:
    """``-2 loglik`` plus the penalty of the requested information criterion."""
    dev = -2.0 * loglik
    if kind in ("AICc", "SICc", "HQc") and not n > k + 1:
        raise CriterionUndefined(f"{kind} needs n > k + 1 (n={n}, k={k})")
    if kind in ("HQ", "HQc") and n < 3:
        raise CriterionUndefined(f"{kind} needs n >= 3 so that log(log(n)) is defined")
    if kind == "AIC":
        return dev + 2.0 * k
    if kind == "AICc":
        return dev + 2.0 * n * k / (n - k - 1)
    if kind == "SIC":
        return dev + k * math.log(n)
    if kind == "SICc":
        return dev + n * k * math.log(n) / (n - k - 1)
    if kind == "HQ":
        return dev + 2.0 * k * math.log(math.log(n))
    if kind == "HQc":
        return dev + 2.0 * n * k * math.log(math.log(n)) / (n - k - 1)
    raise ValueError(f"not an information criterion: {kind!r}")


def _adjust(r2: float, n: int, k: int) -> float:
    if not n > k:
        raise CriterionUndefined(f"adjusted R2 needs n > k (n={n}, k={k})")
    return 1.0 - (1.0 - r2) * ((n - 1) / (n - k))


def r2_fc(y, fit: FitResult) -> float:
    """Squared correlation between ``g(y)`` and the fitted mean linear predictor.

    Zero when the linear predictor is constant (intercept-only mean submodel).
    """
    gy = get_link(fit.spec.mean_link).eval(np.asarray(y, dtype=float))
    eta = fit.eta_hat
    if np.ptp(eta) == 0.0 or np.ptp(gy) == 0.0:
        return 0.0
    return float(np.corrcoef(gy, eta)[0, 1] ** 2)


def r2_fc_adj(y, fit: FitResult) -> float:
    return _adjust(r2_fc(y, fit), fit.n, fit.k)


def r2_lr(fit: FitResult, null_fit: FitResult) -> float:
    """``1 - (L_null / L_fit)^(2/n)``, evaluated in log space."""
    if null_fit is None:
        raise ValueError("R2_LR needs the intercept-only fit on the same data")
    return float(1.0 - math.exp(2.0 * (null_fit.loglik - fit.loglik) / fit.n))


def r2_lr_adj(fit: FitResult, null_fit: FitResult) -> float:
    return _adjust(r2_lr(fit, null_fit), fit.n, fit.k)


def _hs_term(resid_ss, total_ss, n, penalty):
    if not n > penalty:
        raise CriterionUndefined(f"penalised R2 needs n > {penalty:g} (n={n})")
    if total_ss <= 0.0:
        raise CriterionUndefined("total sum of squares is zero")
    return 1.0 - ((n - 1) / (n - penalty)) * (resid_ss / total_ss)


def r2_hs_adj(y, fit: FitResult, lambda_n: str = "log_n", n_params: int | None = None) -> float:
    """Penalised R2 on the response scale; the penalty counts ``n_params``
    parameters (all ``k`` by default, pass ``fit.r`` to count the mean only)."""
    y = np.asarray(y, dtype=float)
    n = y.size
    k = fit.k if n_params is None else n_params
    return _hs_term(np.sum((y - fit.mu_hat) ** 2), np.sum((y - y.mean()) ** 2),
                    n, rate(lambda_n, n) * k)


def r2_lrw(fit: FitResult, null_fit: FitResult, alpha: float, delta: float) -> float:
    """Weighted penalised R2_LR; mean covariates weigh ``1 + alpha``, dispersion ``1 - alpha``."""
    n, r, s = fit.n, fit.r, fit.s
    denom = n - (1.0 + alpha) * r - (1.0 - alpha) * s
    if not denom > 0.0:
        raise CriterionUndefined(f"weighted R2_LR denominator is {denom:g} <= 0")
    return float(1.0 - (1.0 - r2_lr(fit, null_fit)) * ((n - 1) / denom) ** delta)


def sigma_star(y, fit: FitResult) -> np.ndarray:
    """Crude per-observation dispersion ``|y - mu| / sqrt(mu (1 - mu))``."""
    mu = fit.mu_hat
    return np.abs(np.asarray(y, dtype=float) - mu) / np.sqrt(mu * (1.0 - mu))


def r2_d(y, fit: FitResult, alpha: float, lambda_n: str = "log_n", delta_n: str = "log_n") -> float:
    """Convex combination of penalised mean and dispersion goodness-of-fit."""
    y = np.asarray(y, dtype=float)
    n = y.size
    mean_part = _hs_term(np.sum((y - fit.mu_hat) ** 2), np.sum((y - y.mean()) ** 2),
                         n, rate(lambda_n, n) * fit.r)
    if alpha == 1.0:
        return float(mean_part)
    ss = sigma_star(y, fit)
    disp_part = _hs_term(np.sum((ss - fit.sigma_hat) ** 2), np.sum((ss - ss.mean()) ** 2),
                         n, rate(delta_n, n) * fit.s)
    return float(alpha * mean_part + (1.0 - alpha) * disp_part)


@dataclass(frozen=True)
class CriterionConfig:
    kind: str
    alpha: float | None = None
    delta: float | None = None
    lambda_n: str | None = None
    delta_n: str | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        if self.kind == "R2HS_adj" and self.lambda_n is None:
            object.__setattr__(self, "lambda_n", "log_n")
        if self.kind in ("R2D", "R2LRW"):
            if self.alpha is None or not 0.0 <= self.alpha <= 1.0:
                raise ValueError(f"{self.kind} needs 0 <= alpha <= 1")
        if self.kind == "R2LRW" and (self.delta is None or not self.delta > 0.0):
            raise ValueError("R2LRW needs delta > 0")
        if self.kind == "R2D":
            if self.lambda_n is None or self.delta_n is None:
                raise ValueError("R2D needs lambda_n and delta_n")
        for v in (self.lambda_n, self.delta_n):
            if v is not None and v not in PENALTY_RATES:
                raise ValueError(f"unknown penalty rate {v!r}")

    @property
    def direction(self) -> str:
        return "minimize" if self.kind in MINIMIZED else "maximize"

    @property
    def label(self) -> str:
        return self.name or self.kind

    def needs_null(self) -> bool:
        return self.kind in ("R2LR_adj", "R2LRW")

    def evaluate(self, fit: FitResult, y, null_fit: FitResult | None = None) -> float:
        """Criterion value for ``fit``; raises :class:`CriterionUndefined` when undefined."""
        if self.kind in MINIMIZED:
            val = aic_family(fit.loglik, fit.n, fit.k, self.kind)
        elif self.kind == "R2FC_adj":
            val = r2_fc_adj(y, fit)
        elif self.kind == "R2LR_adj":
            val = r2_lr_adj(fit, null_fit)
        elif self.kind == "R2HS_adj":
            val = r2_hs_adj(y, fit, self.lambda_n)
        elif self.kind == "R2D":
            val = r2_d(y, fit, self.alpha, self.lambda_n, self.delta_n)
        else:
            val = r2_lrw(fit, null_fit, self.alpha, self.delta)
        if not math.isfinite(val):
            raise CriterionUndefined(f"{self.label} is not finite")
        return val

    def better(self, a: float, b: float) -> bool:
        """Whether value ``a`` is strictly better than ``b``."""
        return a < b if self.direction == "minimize" else a > b

    def to_dict(self) -> dict:
        return {k: v for k, v in (("kind", self.kind), ("name", self.name), ("alpha", self.alpha),
                                  ("delta", self.delta), ("lambda_n", self.lambda_n),
                                  ("delta_n", self.delta_n)) if v is not None}


PRESETS = {
    "D1": CriterionConfig("R2D", alpha=0.4, lambda_n="log_n", delta_n="log_n", name="R2D1"),
    "D2": CriterionConfig("R2D", alpha=0.6, lambda_n="log_n", delta_n="log_n", name="R2D2"),
    "D3": CriterionConfig("R2D", alpha=0.6, lambda_n="log_n", delta_n="one", name="R2D3"),
    "D4": CriterionConfig("R2D", alpha=0.5, lambda_n="log_n", delta_n="one", name="R2D4"),
    "w1": CriterionConfig("R2LRW", alpha=0.0, delta=3.0, name="R2LRw1"),
    "w2": CriterionConfig("R2LRW", alpha=0.0, delta=2.0, name="R2LRw2"),
    "w3": CriterionConfig("R2LRW", alpha=0.0, delta=1.5, name="R2LRw3"),
    "w4": CriterionConfig("R2LRW", alpha=0.4, delta=1.0, name="R2LRw4"),
    "w5": CriterionConfig("R2LRW", alpha=0.4, delta=2.0, name="R2LRw5"),
}

_SIMPLE = {
    "aic": CriterionConfig("AIC"), "aicc": CriterionConfig("AICc"),
    "sic": CriterionConfig("SIC"), "bic": CriterionConfig("SIC"),
    "sicc": CriterionConfig("SICc"), "hq": CriterionConfig("HQ"), "hqc": CriterionConfig("HQc"),
    "r2fc": CriterionConfig("R2FC_adj", name="R2FC"), "r2lr": CriterionConfig("R2LR_adj", name="R2LR"),
    "r2hs": CriterionConfig("R2HS_adj", lambda_n="log_n", name="R2HS"),
}

_RATE_ALIASES = {"1": "one", "one": "one", "log": "log_n", "log_n": "log_n", "logn": "log_n",
                 "log(n)": "log_n", "sqrt": "sqrt_n", "sqrt_n": "sqrt_n", "sqrtn": "sqrt_n",
                 "sqrt(n)": "sqrt_n"}


def _kwargs(body: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        key, sep, val = part.partition("=")
        if not sep:
            raise ValueError(f"expected key=value in {body!r}")
        out[key.strip().lower()] = val.strip()
    return out


def parse_criterion(text: str) -> CriterionConfig:
    """Parse identifiers such as ``"sicc"``, ``"w4"``, ``"r2d:D3"``, ``"r2lrw:w4"``,
    ``"r2hs(lambda=sqrt_n)"`` or ``"r2lrw(alpha=0.4,delta=2)"``."""
    t = text.strip()
    low = t.lower()
    if low in _SIMPLE:
        return _SIMPLE[low]
    # bare preset keys ("w4", "D3") and their labels ("R2LRw4", "R2D3")
    for key, cfg in PRESETS.items():
        if low in (key.lower(), cfg.name.lower()):
            return cfg
    m = re.fullmatch(r"(r2d|r2lrw):(\w+)", low)
    if m:
        key = m.group(2).upper() if m.group(1) == "r2d" else m.group(2).lower()
        if key in PRESETS and PRESETS[key].kind == ("R2D" if m.group(1) == "r2d" else "R2LRW"):
            return PRESETS[key]
        raise ValueError(f"unknown preset in {text!r}")
    m = re.fullmatch(r"(r2d|r2lrw|r2hs)\((.*)\)", low)
    if m:
        kw = _kwargs(m.group(2))
        try:
            if m.group(1) == "r2hs":
                return CriterionConfig("R2HS_adj", lambda_n=_RATE_ALIASES[kw.get("lambda", "log_n")],
                                       name=t)
            if m.group(1) == "r2d":
                return CriterionConfig("R2D", alpha=float(kw["alpha"]),
                                       lambda_n=_RATE_ALIASES[kw["lambda"]],
                                       delta_n=_RATE_ALIASES[kw["delta"]], name=t)
            return CriterionConfig("R2LRW", alpha=float(kw["alpha"]), delta=float(kw["delta"]), name=t)
        except KeyError as exc:
            raise ValueError(f"missing or invalid argument {exc} in {text!r}") from None
    raise ValueError(f"unknown criterion {text!r}")


def all_criteria() -> list[CriterionConfig]:
    """The criteria reported in the simulation tables, in table order."""
    names = ["aic", "aicc", "sic", "sicc", "hq", "hqc", "r2fc", "r2lr", "r2hs",
             "r2d:D1", "r2d:D2", "r2d:D3", "r2d:D4",
             "r2lrw:w1", "r2lrw:w2", "r2lrw:w3", "r2lrw:w4", "r2lrw:w5"]
    return [parse_criterion(n) for n in names]
