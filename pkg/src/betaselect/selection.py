"""Exhaustive covariate selection for the mean and dispersion submodels.

Four searches are provided: joint (all mean subsets x all dispersion
subsets), mean-only with the dispersion submodel held fixed, dispersion-only
with the mean submodel held fixed, and mean-only under constant dispersion.
:func:`two_step_select` chains the last two: choose the mean covariates
assuming constant dispersion, then choose the dispersion covariates with that
mean submodel frozen.  It fits ``|M| + |D|`` models instead of ``|M| * |D|``.

Ranking rule: best criterion value in the criterion's direction; exact ties go
to the smaller ``k`` and then to the earlier candidate in enumeration order.
Fits that fail to converge, and specs for which the criterion is undefined,
are reported but never ranked.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .criteria import CriterionConfig, CriterionUndefined, parse_criterion
from .design import Dataset, ModelSpec, RankDeficiencyError
from .distribution import DomainError
from .estimation import FitOptions, FitResult, fit_mle

log = logging.getLogger(__name__)

MAX_POOL = 20


class SelectionError(RuntimeError):
    pass


def default_fitter(ds: Dataset, spec: ModelSpec) -> FitResult:
    return fit_mle(ds, spec, FitOptions(std_errors=False))


def enumerate_candidates(pool: Sequence[str], cap: int = MAX_POOL) -> list[tuple[str, ...]]:
    """All ``2**m`` subsets of ``pool``, ordered by binary counting.

    Bit ``i`` of the counter switches ``pool[i]`` on, so the empty subset
    comes first and the full pool last.
    """
    pool = tuple(pool)
    m = len(pool)
    if m > cap:
        raise ValueError(f"refusing to enumerate 2**{m} subsets: pool of {m} covariates "
                         f"exceeds the cap of {cap}")
    return [tuple(pool[i] for i in range(m) if mask >> i & 1) for mask in range(1 << m)]


@dataclass(frozen=True)
class SearchSpace:
    mean_pool: tuple[str, ...] = ()
    disp_pool: tuple[str, ...] = ()
    mean_link: str = "logit"
    disp_link: str = "logit"

    def __post_init__(self):
        object.__setattr__(self, "mean_pool", tuple(self.mean_pool))
        object.__setattr__(self, "disp_pool", tuple(self.disp_pool))

    def validate(self, ds: Dataset):
        missing = [c for c in self.mean_pool + self.disp_pool if c not in ds.covariates]
        if missing:
            raise KeyError(f"pool covariate(s) not in dataset: {', '.join(sorted(set(missing)))}")

    def spec(self, mean_terms=(), disp_terms=()) -> ModelSpec:
        return ModelSpec(tuple(mean_terms), tuple(disp_terms), self.mean_link, self.disp_link)


@dataclass
class RankedSpec:
    spec: ModelSpec
    index: int
    value: float | None = None
    converged: bool = False
    loglik: float | None = None
    note: str = ""

    @property
    def k(self) -> int:
        return self.spec.k

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "label": self.spec.label(), "k": self.k,
                "value": self.value, "converged": self.converged, "loglik": self.loglik,
                "note": self.note}


@dataclass
class SelectionReport:
    winner: ModelSpec
    criterion: str
    direction: str
    ranking: list[RankedSpec]
    excluded: list[RankedSpec]
    fits_attempted: int
    fits_converged: int
    scheme: str
    step_details: list["SelectionReport"] = field(default_factory=list)
    winner_fit: FitResult | None = field(default=None, repr=False)
    null_fit: FitResult | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "criterion": self.criterion,
            "direction": self.direction,
            "winner": self.winner.to_dict(),
            "winner_label": self.winner.label(),
            "fits_attempted": self.fits_attempted,
            "fits_converged": self.fits_converged,
            "ranking": [e.to_dict() for e in self.ranking],
            "excluded": [e.to_dict() for e in self.excluded],
            "steps": [s.to_dict() for s in self.step_details],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "rank", "mean_terms", "disp_terms", "k", "criterion", "value",
                    "converged"])
        reports = self.step_details or [self]
        for step, rep in enumerate(reports, start=1):
            rows = [(i, e) for i, e in enumerate(rep.ranking, start=1)] + [("", e) for e in rep.excluded]
            for rank, e in rows:
                w.writerow([step, rank, " ".join(e.spec.mean_terms), " ".join(e.spec.disp_terms),
                            e.k, rep.criterion, "" if e.value is None else repr(e.value),
                            int(e.converged)])
        return buf.getvalue()


def _fit_one(args):
    fitter, ds, spec = args
    try:
        return fitter(ds, spec), ""
    except (RankDeficiencyError, DomainError, ArithmeticError, KeyError,
            FloatingPointError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _fit_all(ds, specs, fitter, workers):
    jobs = [(fitter, ds, s) for s in specs]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_fit_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_fit_one(j) for j in jobs]


def rank_fits(ds: Dataset, specs: Sequence[ModelSpec], fits: Sequence[FitResult | None],
              crit: CriterionConfig, null_fit: FitResult | None = None,
              notes: Sequence[str] | None = None, quiet: bool = False):
    """Evaluate ``crit`` on converged fits and order them; returns ``(ranking, excluded)``.

    Candidates on which ``crit`` is undefined are excluded with one summary
    warning per call (debug level when ``quiet``).
    """
    ranking, excluded, undefined = [], [], []
    notes = notes or [""] * len(specs)
    for i, (spec, fit, note) in enumerate(zip(specs, fits, notes)):
        entry = RankedSpec(spec, i, note=note)
        if fit is None or not fit.converged:
            entry.note = note or (fit.message if fit is not None else "fit failed")
            if fit is not None:
                entry.loglik = fit.loglik
            log.info("excluding %s: %s", spec.label(), entry.note)
            excluded.append(entry)
            continue
        entry.converged = True
        entry.loglik = fit.loglik
        try:
            entry.value = crit.evaluate(fit, ds.y, null_fit)
        except CriterionUndefined as exc:
            entry.note = str(exc)
            undefined.append(entry)
            excluded.append(entry)
            continue
        ranking.append(entry)
    if undefined:
        log.log(logging.DEBUG if quiet else logging.WARNING, "%s undefined for %d of %d candidates, skipped (%s: %s)",
                crit.label, len(undefined), len(specs), undefined[0].spec.label(), undefined[0].note)
    sign = 1.0 if crit.direction == "minimize" else -1.0
    ranking.sort(key=lambda e: (sign * e.value, e.k, e.index))
    return ranking, excluded


def _is_null(spec: ModelSpec) -> bool:
    return not spec.mean_terms and not spec.disp_terms


def search(ds: Dataset, specs: Sequence[ModelSpec], crit: CriterionConfig | str, scheme: str,
           fitter: Callable = default_fitter, null_fit: FitResult | None = None,
           workers: int | None = None, quiet: bool = False) -> SelectionReport:
    """Fit every candidate in ``specs`` and rank them by ``crit``."""
    crit = parse_criterion(crit) if isinstance(crit, str) else crit
    specs = list(specs)
    results = _fit_all(ds, specs, fitter, workers)
    fits = [f for f, _ in results]
    notes = [msg for _, msg in results]
    attempted = len(specs)
    if null_fit is None:
        for spec, fit in zip(specs, fits):
            if _is_null(spec) and fit is not None and fit.converged:
                null_fit = fit
                break
    if null_fit is None and crit.needs_null():
        base = specs[0] if specs else ModelSpec()
        null_fit, msg = _fit_one((fitter, ds, ModelSpec((), (), base.mean_link, base.disp_link)))
        attempted += 1
        if null_fit is None or not null_fit.converged:
            raise SelectionError(f"intercept-only fit failed; {crit.label} cannot be evaluated {msg}")
    ranking, excluded = rank_fits(ds, specs, fits, crit, null_fit, notes, quiet=quiet)
    converged = sum(1 for f in fits if f is not None and f.converged)
    if not ranking:
        raise SelectionError(f"no candidate could be ranked by {crit.label} "
                             f"({converged} of {len(specs)} fits converged)")
    best = ranking[0]
    return SelectionReport(best.spec, crit.label, crit.direction, ranking, excluded, attempted,
                           converged, scheme, winner_fit=fits[best.index], null_fit=null_fit)


def joint_select(ds, space: SearchSpace, crit, **kw) -> SelectionReport:
    space.validate(ds)
    specs = [space.spec(m, d) for m in enumerate_candidates(space.mean_pool)
             for d in enumerate_candidates(space.disp_pool)]
    return search(ds, specs, crit, "joint", **kw)


def select_mean_given_disp(ds, space: SearchSpace, fixed_disp_terms, crit, **kw) -> SelectionReport:
    space.validate(ds)
    specs = [space.spec(m, fixed_disp_terms) for m in enumerate_candidates(space.mean_pool)]
    return search(ds, specs, crit, "mean_given_disp", **kw)


def select_disp_given_mean(ds, space: SearchSpace, fixed_mean_terms, crit, **kw) -> SelectionReport:
    space.validate(ds)
    specs = [space.spec(fixed_mean_terms, d) for d in enumerate_candidates(space.disp_pool)]
    return search(ds, specs, crit, "disp_given_mean", **kw)


def select_mean_constant_disp(ds, space: SearchSpace, crit, **kw) -> SelectionReport:
    """Mean covariate search with an intercept-only dispersion submodel."""
    space.validate(ds)
    specs = [space.spec(m, ()) for m in enumerate_candidates(space.mean_pool)]
    return search(ds, specs, crit, "mean_const_disp", **kw)


@dataclass(frozen=True)
class TwoStepScheme:
    name: str
    step1: CriterionConfig
    step2: CriterionConfig

    def to_dict(self) -> dict:
        return {"name": self.name, "step1": self.step1.to_dict(), "step2": self.step2.to_dict()}


def _scheme(name, c1, c2):
    return TwoStepScheme(name, parse_criterion(c1), parse_criterion(c2))


SCHEMES = {s.name: s for s in (
    _scheme("PS1", "sicc", "r2lrw:w4"),
    _scheme("PS2", "sicc", "r2d:D3"),
    _scheme("PS3", "sicc", "sicc"),
    _scheme("PS4", "hqc", "hqc"),
    _scheme("PS5", "aic", "r2lrw:w4"),
    _scheme("PS6", "r2lrw:w4", "r2d:D3"),
    _scheme("PS7", "r2lrw:w5", "r2lrw:w5"),
)}


def parse_scheme(name) -> TwoStepScheme:
    """Look up ``"PS1"`` .. ``"PS7"`` (case-insensitive) or ``"<crit1>/<crit2>"``."""
    if isinstance(name, TwoStepScheme):
        return name
    key = str(name).strip().upper()
    if key in SCHEMES:
        return SCHEMES[key]
    if "/" in str(name):
        a, b = str(name).split("/", 1)
        return TwoStepScheme(str(name), parse_criterion(a), parse_criterion(b))
    raise ValueError(f"unknown two-step scheme {name!r}; use PS1..PS7 or 'crit1/crit2'")


def two_step_select(ds, space: SearchSpace, scheme, **kw) -> SelectionReport:
    """Mean covariates under constant dispersion, then dispersion covariates given that mean."""
    scheme = parse_scheme(scheme)
    null_fit = kw.pop("null_fit", None)
    step1 = select_mean_constant_disp(ds, space, scheme.step1, null_fit=null_fit, **kw)
    step2 = select_disp_given_mean(ds, space, step1.winner.mean_terms, scheme.step2,
                                   null_fit=step1.null_fit, **kw)
    return SelectionReport(step2.winner, f"{step1.criterion} -> {step2.criterion}",
                           f"{step1.direction}/{step2.direction}", step2.ranking, step2.excluded,
                           step1.fits_attempted + step2.fits_attempted,
                           step1.fits_converged + step2.fits_converged,
                           f"two_step:{scheme.name}", [step1, step2],
                           winner_fit=step2.winner_fit, null_fit=step1.null_fit)


def recommend_scheme(n: int) -> TwoStepScheme:
    """PS1 for ``n <= 50`` (PS5 is the documented small-sample alternative), PS4 above."""
    if n < 1:
        raise ValueError("n must be positive")
    return SCHEMES["PS1"] if n <= 50 else SCHEMES["PS4"]


SMALL_SAMPLE_ALTERNATIVE = "PS5"
