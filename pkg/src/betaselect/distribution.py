"""The beta law in the mean/dispersion parametrization.

A beta variate with mean ``mu`` and dispersion ``sigma`` has precision
``phi = (1 - sigma**2) / sigma**2`` and shape parameters
``(mu * phi, (1 - mu) * phi)``.  Its variance is ``mu * (1 - mu) * sigma**2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def _check_open_unit(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"{name} must lie strictly inside (0, 1), got {value!r}")
    return arr


@dataclass(frozen=True)
class BetaParams:
    """Mean and dispersion of a single beta observation."""

    mu: float
    sigma: float

    def __post_init__(self):
        _check_open_unit("mu", self.mu)
        _check_open_unit("sigma", self.sigma)

    @property
    def phi(self) -> float:
        return phi_from_sigma(self.sigma)

    @property
    def shapes(self) -> tuple[float, float]:
        phi = self.phi
        return self.mu * phi, (1.0 - self.mu) * phi

    @classmethod
    def from_phi(cls, mu: float, phi: float) -> "BetaParams":
        return cls(mu, sigma_from_phi(phi))


def sigma_from_phi(phi):
    """Dispersion ``sqrt(1 / (1 + phi))`` for precision ``phi > 0``."""
    arr = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"phi must be finite and positive, got {phi!r}")
    out = np.sqrt(1.0 / (1.0 + arr))
    return float(out) if out.ndim == 0 else out


def phi_from_sigma(sigma):
    """Precision ``(1 - sigma**2) / sigma**2`` for ``0 < sigma < 1``."""
    s = _check_open_unit("sigma", sigma)
    out = (1.0 - s) * (1.0 + s) / (s * s)
    return float(out) if out.ndim == 0 else out


def variance(p: BetaParams) -> float:
    return p.mu * (1.0 - p.mu) * p.sigma**2


def _log_density(y, mu, sigma):
    # vectorised core, no validation; shared with the likelihood code
    phi = (1.0 - sigma) * (1.0 + sigma) / (sigma * sigma)
    a = mu * phi
    b = (1.0 - mu) * phi
    return (gammaln(phi) - gammaln(a) - gammaln(b)
            + (a - 1.0) * np.log(y) + (b - 1.0) * np.log1p(-y))


def log_density(y, p: BetaParams):
    """Log of the beta density at ``y`` (scalar or array), computed in log-gamma space."""
    y = _check_open_unit("y", y)
    out = _log_density(y, p.mu, p.sigma)
    return float(out) if out.ndim == 0 else out


def density(y, p: BetaParams):
    return np.exp(log_density(y, p))


def sample(p: BetaParams, rng: np.random.Generator, size=None):
    """Draw from the beta law with shapes ``(mu * phi, (1 - mu) * phi)``.

    ``rng`` is a :class:`numpy.random.Generator` owned by the caller; equal
    seeds give equal streams.
    """
    a, b = p.shapes
    return rng.beta(a, b, size=size)
