"""Monte Carlo experiments: correct-selection frequencies and estimator efficiency.

The data generating process has four uniform covariates ``x2 .. x5`` drawn
once per experiment and shared by both submodels, logit links for mean and
dispersion, and coefficient presets for Models 1-4.  Replication ``r`` of an
experiment with master seed ``s`` draws its responses from the stream
``SeedSequence(s, spawn_key=(1, r))``, so replications can run in any order
or in parallel and still give identical tables.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .criteria import CriterionConfig, parse_criterion
from .design import Dataset, ModelSpec
from .estimation import FitOptions, fit_mle
from .selection import (SearchSpace, SelectionError, default_fitter, enumerate_candidates,
                        parse_scheme, rank_fits, two_step_select, _fit_all, _fit_one)

log = logging.getLogger(__name__)

COVARIATES = ("x2", "x3", "x4", "x5")

MODEL_PRESETS = {
    1: ((1.5, -1.0, -1.0, 0.0, 0.0), (-1.0, -1.0, -1.0, 0.0, 0.0)),
    2: ((-1.5, 1.0, 1.0, 0.0, 0.0), (-1.0, -1.25, -0.5, -0.25, 0.0)),
    3: ((1.0, -0.75, -0.25, 0.0, 0.0), (-1.0, -1.0, -1.0, 0.0, 0.0)),
    4: ((-1.0, 0.75, 0.25, 0.0, 0.0), (-1.0, -1.25, -0.5, -0.25, 0.0)),
}

APPROACHES = ("joint", "mean_given_disp", "disp_given_mean", "mean_const_disp", "two_step")


@dataclass(frozen=True)
class DgpConfig:
    beta: tuple = MODEL_PRESETS[1][0]
    gamma: tuple = MODEL_PRESETS[1][1]
    n: int = 200
    seed: int = 2024
    model_id: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if len(self.beta) != 5 or len(self.gamma) != 5:
            raise ValueError("beta and gamma must each have 5 entries (intercept + x2..x5)")
        if self.n < 2:
            raise ValueError("n must be at least 2")

    @classmethod
    def preset(cls, model_id: int, n: int = 200, seed: int = 2024) -> "DgpConfig":
        if model_id not in MODEL_PRESETS:
            raise ValueError(f"model_id must be one of 1-4, got {model_id!r}")
        beta, gamma = MODEL_PRESETS[model_id]
        return cls(beta, gamma, n, seed, model_id)

    @property
    def true_spec(self) -> ModelSpec:
        mean = tuple(c for c, b in zip(COVARIATES, self.beta[1:]) if b != 0.0)
        disp = tuple(c for c, g in zip(COVARIATES, self.gamma[1:]) if g != 0.0)
        return ModelSpec(mean, disp)

    def to_dict(self) -> dict:
        return {"beta": list(self.beta), "gamma": list(self.gamma), "n": self.n,
                "seed": self.seed, "model_id": self.model_id}


class Dgp:
    """Fixed covariates plus a per-replication response generator."""

    def __init__(self, config: DgpConfig):
        self.config = config
        cov_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0,)))
        W = cov_rng.uniform(size=(config.n, len(COVARIATES)))
        self.covariates = {c: W[:, j].copy() for j, c in enumerate(COVARIATES)}
        design = np.column_stack([np.ones(config.n), W])
        self.mu = expit(design @ np.asarray(config.beta))
        self.sigma = expit(design @ np.asarray(config.gamma))
        self.phi = (1.0 - self.sigma**2) / self.sigma**2

    def rng(self, rep: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.config.seed, spawn_key=(1, rep)))

    def responses(self, rep: int) -> np.ndarray:
        y = self.rng(rep).beta(self.mu * self.phi, (1.0 - self.mu) * self.phi)
        # beta draws can round to exactly 0 or 1 for extreme shapes
        return np.clip(y, 1e-15, 1.0 - 1e-15)

    def dataset(self, rep: int) -> Dataset:
        return Dataset(self.responses(rep), self.covariates)

    def __iter__(self):
        rep = 0
        while True:
            yield self.dataset(rep)
            rep += 1


def make_dgp(config: DgpConfig) -> Dgp:
    return Dgp(config)


@dataclass
class FrequencyTable:
    """Correct-selection counts keyed by ``(label, model_id, n)``."""

    counts: dict = field(default_factory=dict)
    replications: dict = field(default_factory=dict)

    def add(self, label: str, model_id, n: int, hits: int, reps: int):
        key = (label, model_id, n)
        self.counts[key] = self.counts.get(key, 0) + hits
        self.replications[key] = self.replications.get(key, 0) + reps

    def merge(self, other: "FrequencyTable") -> "FrequencyTable":
        for key, hits in other.counts.items():
            self.add(*key, hits, other.replications[key])
        return self

    def percent(self, label: str, model_id, n: int) -> float:
        key = (label, model_id, n)
        return 100.0 * self.counts[key] / self.replications[key]

    @property
    def labels(self) -> list[str]:
        return list(dict.fromkeys(k[0] for k in self.counts))

    def to_dict(self) -> dict:
        return {"rows": [{"label": lab, "model_id": m, "n": n, "hits": self.counts[(lab, m, n)],
                          "replications": self.replications[(lab, m, n)],
                          "percent": self.percent(lab, m, n)}
                         for (lab, m, n) in self.counts]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        """Criterion rows by ``(model, n)`` columns, as in the published tables."""
        cols = sorted({(m if m is not None else 0, n) for (_, m, n) in self.counts})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["criterion"] + [f"model{m}_n{n}" for m, n in cols])
        for lab in self.labels:
            row = [lab]
            for m, n in cols:
                key = (lab, m or None, n) if (lab, m or None, n) in self.counts else (lab, m, n)
                row.append(f"{self.percent(*key):.1f}" if key in self.counts else "")
            w.writerow(row)
        return buf.getvalue()


def _candidates(approach: str, space: SearchSpace, truth: ModelSpec) -> list[ModelSpec]:
    if approach == "joint":
        return [space.spec(m, d) for m in enumerate_candidates(space.mean_pool)
                for d in enumerate_candidates(space.disp_pool)]
    if approach == "mean_given_disp":
        return [space.spec(m, truth.disp_terms) for m in enumerate_candidates(space.mean_pool)]
    if approach == "disp_given_mean":
        return [space.spec(truth.mean_terms, d) for d in enumerate_candidates(space.disp_pool)]
    if approach == "mean_const_disp":
        return [space.spec(m, ()) for m in enumerate_candidates(space.mean_pool)]
    raise ValueError(f"unknown approach {approach!r}; choose from {', '.join(APPROACHES)}")


def is_correct(approach: str, chosen: ModelSpec, truth: ModelSpec) -> bool:
    """Exact recovery of the true covariate sets (the mean set only under constant dispersion)."""
    if approach == "mean_const_disp":
        return set(chosen.mean_terms) == set(truth.mean_terms)
    return chosen.same_terms(truth)


def _null_of(specs, fits):
    for spec, fit in zip(specs, fits):
        if not spec.mean_terms and not spec.disp_terms and fit is not None and fit.converged:
            return fit
    return None


def _one_replication(args):
    """Selections made by each criterion (or scheme) on replication ``rep``; None marks failure."""
    config, approach, selectors, rep, fitter = args
    dgp = Dgp(config)
    ds = dgp.dataset(rep)
    truth = config.true_spec
    space = SearchSpace(COVARIATES, COVARIATES)
    if callable(approach):
        chosen = approach(ds, space, truth)
        return [getattr(chosen, "winner", chosen)]
    if approach == "two_step":
        out = []
        for scheme in selectors:
            try:
                out.append(two_step_select(ds, space, scheme, fitter=fitter, quiet=True).winner)
            except SelectionError as exc:
                log.info("replication %d failed: %s", rep, exc)
                out.append(None)
        return out
    specs = _candidates(approach, space, truth)
    fits = [f for f, _ in _fit_all(ds, specs, fitter, None)]
    null_fit = _null_of(specs, fits)
    if null_fit is None and any(c.needs_null() for c in selectors):
        null_fit, _ = _fit_one((fitter, ds, space.spec()))
    out = []
    for crit in selectors:
        ranking, _ = rank_fits(ds, specs, fits, crit, null_fit, quiet=True)
        out.append(ranking[0].spec if ranking else None)
    return out


def _resolve(approach, crit_or_scheme):
    items = crit_or_scheme if isinstance(crit_or_scheme, (list, tuple)) else [crit_or_scheme]
    if callable(approach):
        return [getattr(approach, "__name__", "custom")], []
    if approach not in APPROACHES:
        raise ValueError(f"unknown approach {approach!r}; choose from {', '.join(APPROACHES)}")
    if approach == "two_step":
        sel = [parse_scheme(s) for s in items]
        return [s.name for s in sel], sel
    sel = [parse_criterion(c) if isinstance(c, str) else c for c in items]
    return [c.label for c in sel], sel


def run_frequency_experiment(config: DgpConfig, approach, crit_or_scheme, replications: int = 500,
                             workers: int | None = None, fitter: Callable = default_fitter,
                             progress: Callable | None = None) -> FrequencyTable:
    """Percentage of replications in which the selection recovers the true model.

    ``crit_or_scheme`` may be one criterion/scheme or a list; candidates are
    fitted once per replication and ranked under every listed criterion.
    ``approach`` may also be a callable ``(ds, space, truth) -> ModelSpec``.
    Failed selections count as incorrect.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    labels, selectors = _resolve(approach, crit_or_scheme)
    jobs = [(config, approach, selectors, rep, fitter) for rep in range(replications)]
    if workers and workers > 1 and not callable(approach):
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_one_replication, jobs, chunksize=max(1, replications // (8 * workers))))
    else:
        results = []
        for j in jobs:
            results.append(_one_replication(j))
            if progress is not None:
                progress(len(results), replications)
    truth = config.true_spec
    name = approach if isinstance(approach, str) else "custom"
    table = FrequencyTable()
    for i, label in enumerate(labels):
        hits = 0
        for res in results:
            chosen = res[i]
            if isinstance(chosen, ModelSpec) and is_correct(name, chosen, truth):
                hits += 1
        table.add(label, config.model_id, config.n, hits, replications)
    return table


@dataclass(frozen=True)
class EfficiencyConfig:
    """Single-covariate DGP with ``logit(mu) = b1 + b2 x`` and ``log(phi) = g1 + g2 x``.

    With ``x ~ U(0, 1)`` the defaults centre mu on 0.5 and let phi run from
    about 13 to 440, the precision range of simulation Model 1.
    """

    n: int = 50
    beta: tuple = (-0.75, 1.5)
    gamma: tuple = (2.55, 3.54)
    seed: int = 2024


@dataclass
class EfficiencySamples:
    fixed_disp: np.ndarray
    varying_disp: np.ndarray
    failures: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fixed_disp", "varying_disp"])
        for a, b in zip(self.fixed_disp, self.varying_disp):
            w.writerow([repr(float(a)), repr(float(b))])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {}
        for name, arr in (("fixed_disp", self.fixed_disp), ("varying_disp", self.varying_disp)):
            out[name] = {"mean": float(np.mean(arr)), "var": float(np.var(arr, ddof=1)) if arr.size > 1
                         else float("nan"), "count": int(arr.size)}
        out["failures"] = self.failures
        return out


def _efficiency_rep(args):
    cfg, x, mu, phi, rep = args
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1, rep)))
    y = np.clip(rng.beta(mu * phi, (1.0 - mu) * phi), 1e-15, 1.0 - 1e-15)
    ds = Dataset(y, {"x": x})
    opts = FitOptions(std_errors=False)
    fa = fit_mle(ds, ModelSpec(("x",), ()), opts)
    fb = fit_mle(ds, ModelSpec(("x",), ("x",)), opts)
    if not (fa.converged and fb.converged):
        return None
    return fa.beta_hat[1], fb.beta_hat[1]


def efficiency_experiment(n: int = 50, replications: int = 2000,
                          dgp: EfficiencyConfig | None = None,
                          workers: int | None = None) -> EfficiencySamples:
    """Slope estimates with the dispersion held constant versus modelled on ``x``.

    Replications where either fit fails are dropped and counted in ``failures``.
    """
    cfg = dgp or EfficiencyConfig(n=n)
    if dgp is not None and n != cfg.n:
        cfg = EfficiencyConfig(n, cfg.beta, cfg.gamma, cfg.seed)
    x = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0,))).uniform(size=cfg.n)
    mu = expit(cfg.beta[0] + cfg.beta[1] * x)
    phi = np.exp(cfg.gamma[0] + cfg.gamma[1] * x)
    jobs = [(cfg, x, mu, phi, rep) for rep in range(replications)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(_efficiency_rep, jobs, chunksize=max(1, replications // (8 * workers))))
    else:
        res = [_efficiency_rep(j) for j in jobs]
    ok = [r for r in res if r is not None]
    a = np.array([r[0] for r in ok])
    b = np.array([r[1] for r in ok])
    return EfficiencySamples(a, b, len(res) - len(ok))


def binomial_tolerance(paper_percent: float, replications: int, floor_pp: float = 4.0) -> float:
    """``max(floor_pp, 3 binomial standard errors)`` in percentage points."""
    p = paper_percent / 100.0
    return max(floor_pp, 300.0 * np.sqrt(p * (1.0 - p) / replications))
