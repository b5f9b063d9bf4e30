"""Datasets, model specifications and design matrices for the two submodels."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import qr

from .distribution import DomainError
from .links import get_link

RANK_TOL = 1e-10


class RankDeficiencyError(ValueError):
    """A design matrix does not have full column rank."""

    def __init__(self, submodel: str, columns: Sequence[str]):
        self.submodel = submodel
        self.columns = tuple(columns)
        super().__init__(
            f"{submodel} design is rank deficient; collinear column(s): {', '.join(self.columns)}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Responses in (0, 1) plus named numeric covariate columns."""

    y: np.ndarray
    covariates: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        y = np.array(self.y, dtype=float).ravel()
        if y.size < 1:
            raise ValueError("dataset needs at least one observation")
        if not np.all(np.isfinite(y)) or np.any(y <= 0.0) or np.any(y >= 1.0):
            raise DomainError("every response must lie strictly inside (0, 1)")
        y.setflags(write=False)
        cols = {}
        for name, col in dict(self.covariates).items():
            arr = np.array(col, dtype=float).ravel()
            if arr.shape != y.shape:
                raise ValueError(f"column {name!r} has length {arr.size}, expected {y.size}")
            arr.setflags(write=False)
            cols[str(name)] = arr
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "covariates", MappingProxyType(cols))

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.covariates)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.covariates[name]

    def __reduce__(self):
        # the read-only mapping proxy does not pickle; rebuild from plain dicts
        return (Dataset, (self.y, dict(self.covariates)))


@dataclass(frozen=True)
class ModelSpec:
    """Covariates entering each submodel; intercepts are always implicit."""

    mean_terms: tuple[str, ...] = ()
    disp_terms: tuple[str, ...] = ()
    mean_link: str = "logit"
    disp_link: str = "logit"

    def __post_init__(self):
        object.__setattr__(self, "mean_terms", tuple(self.mean_terms))
        object.__setattr__(self, "disp_terms", tuple(self.disp_terms))
        object.__setattr__(self, "mean_link", get_link(self.mean_link).name)
        object.__setattr__(self, "disp_link", get_link(self.disp_link).name)

    @property
    def r(self) -> int:
        return 1 + len(self.mean_terms)

    @property
    def s(self) -> int:
        return 1 + len(self.disp_terms)

    @property
    def k(self) -> int:
        return self.r + self.s

    def same_terms(self, other: "ModelSpec") -> bool:
        """Whether both submodels contain exactly the same covariate sets."""
        return (set(self.mean_terms) == set(other.mean_terms)
                and set(self.disp_terms) == set(other.disp_terms))

    def label(self) -> str:
        m = "+".join(self.mean_terms) or "1"
        d = "+".join(self.disp_terms) or "1"
        return f"mean[{m}] disp[{d}]"

    def to_dict(self) -> dict:
        return {"mean_terms": list(self.mean_terms), "disp_terms": list(self.disp_terms),
                "mean_link": self.mean_link, "disp_link": self.disp_link}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSpec":
        return cls(tuple(d.get("mean_terms", ())), tuple(d.get("disp_terms", ())),
                   d.get("mean_link", "logit"), d.get("disp_link", "logit"))


@dataclass(frozen=True, eq=False)
class DesignPair:
    X: np.ndarray
    Z: np.ndarray


def _matrix(ds: Dataset, terms, submodel):
    missing = [t for t in terms if t not in ds.covariates]
    if missing:
        raise KeyError(f"unknown covariate(s) in {submodel} submodel: {', '.join(missing)}")
    M = np.empty((ds.n, 1 + len(terms)))
    M[:, 0] = 1.0
    for j, t in enumerate(terms, start=1):
        M[:, j] = ds.covariates[t]
    return M


def check_full_rank(M: np.ndarray, names: Sequence[str], submodel: str, tol: float = RANK_TOL):
    """Raise :class:`RankDeficiencyError` naming the columns a pivoted QR drops."""
    if M.shape[1] > M.shape[0]:
        raise RankDeficiencyError(submodel, names[M.shape[0]:])
    _, R, piv = qr(M, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > tol * max(d[0], 1.0))) if d.size else 0
    if rank < M.shape[1]:
        raise RankDeficiencyError(submodel, [names[i] for i in sorted(piv[rank:])])


def build_design(ds: Dataset, spec: ModelSpec, check_rank: bool = True) -> DesignPair:
    """Assemble ``X`` (n x r) and ``Z`` (n x s), each with a leading column of ones."""
    X = _matrix(ds, spec.mean_terms, "mean")
    Z = _matrix(ds, spec.disp_terms, "dispersion")
    if check_rank:
        check_full_rank(X, ("(intercept)",) + spec.mean_terms, "mean")
        check_full_rank(Z, ("(intercept)",) + spec.disp_terms, "dispersion")
    return DesignPair(X, Z)


def rescale_to_unit(y_raw, lo: float, hi: float) -> np.ndarray:
    """Map ``[lo, hi]`` linearly onto the unit interval.

    Values landing exactly on 0 or 1 are compressed with
    ``(y * (n - 1) + 0.5) / n`` so the result stays in the open interval.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    y_raw = np.asarray(y_raw, dtype=float)
    if np.any(y_raw < lo) or np.any(y_raw > hi):
        raise DomainError(f"raw values must lie in [{lo}, {hi}]")
    y = (y_raw - lo) / (hi - lo)
    n = y.size
    edge = (y == 0.0) | (y == 1.0)
    y[edge] = (y[edge] * (n - 1) + 0.5) / n
    return y


def read_csv(path, response: str, columns: Sequence[str] | None = None) -> Dataset:
    """Read a headed, comma-separated numeric file into a :class:`Dataset`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if len(set(header)) != len(header):
        raise ValueError("duplicate column names in header")
    if response not in header:
        raise KeyError(f"response column {response!r} not found in {path}")
    data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"ragged rows in {path}")
    idx = {h: i for i, h in enumerate(header)}
    keep = [h for h in header if h != response] if columns is None else list(columns)
    return Dataset(data[:, idx[response]], {h: data[:, idx[h]] for h in keep})


def load_reading_skills() -> Dataset:
    """Reading accuracy of 44 primary-school children (19 dyslexic, 25 controls).

    Columns: ``x2`` nonverbal IQ z-score, ``x3`` dyslexia indicator coded
    +1/-1, ``x4 = x2*x3``, ``x5 = x2**2``, ``x6 = x3*x5``.  The response is
    the accuracy score already mapped into (0, 1).
    """
    path = resources.files("betaselect") / "data" / "reading_skills.csv"
    with resources.as_file(path) as p:
        return read_csv(p, "y")
