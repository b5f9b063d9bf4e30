"""Link functions mapping (0, 1) onto the real line.

Every link is strictly increasing.  The log-log link is used in its
increasing orientation ``g(mu) = -log(-log(mu))``, the mirror image of the
complementary log-log link.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit, logit, ndtr, ndtri

from .distribution import DomainError

#: inverse links clamp their output to ``[EPS, 1 - EPS]``
EPS = 1e-12

LINK_NAMES = ("logit", "probit", "loglog", "cloglog", "cauchy")


def _norm_pdf(x):
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


class Link:
    """A link ``g`` with its inverse and first derivative.

    The ``_g``, ``_ginv`` and ``_dg`` hooks are unvalidated vectorised
    versions used by the likelihood code; the public methods check domains.
    """

    name = ""

    def __call__(self, mu):
        return self.eval(mu)

    def eval(self, mu):
        mu = _open_unit(mu)
        return _scalar(self._g(mu))

    def inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        if not np.all(np.isfinite(eta)):
            raise DomainError("linear predictor must be finite")
        return _scalar(self.inverse_unchecked(eta))

    def deriv(self, mu):
        """``dg/dmu``; always positive on (0, 1)."""
        mu = _open_unit(mu)
        return _scalar(self._dg(mu))

    def inverse_unchecked(self, eta):
        return np.clip(self._ginv(eta), EPS, 1.0 - EPS)

    def __repr__(self):
        return f"Link({self.name!r})"

    def __eq__(self, other):
        return isinstance(other, Link) and other.name == self.name

    def __hash__(self):
        return hash(self.name)


class Logit(Link):
    name = "logit"

    def _g(self, mu):
        return logit(mu)

    def _ginv(self, eta):
        return expit(eta)

    def _dg(self, mu):
        return 1.0 / (mu * (1.0 - mu))


class Probit(Link):
    name = "probit"

    def _g(self, mu):
        return ndtri(mu)

    def _ginv(self, eta):
        return ndtr(eta)

    def _dg(self, mu):
        return 1.0 / _norm_pdf(ndtri(mu))


class LogLog(Link):
    name = "loglog"

    def _g(self, mu):
        return -np.log(-np.log(mu))

    def _ginv(self, eta):
        return np.exp(-np.exp(-eta))

    def _dg(self, mu):
        return -1.0 / (mu * np.log(mu))


class CLogLog(Link):
    name = "cloglog"

    def _g(self, mu):
        return np.log(-np.log1p(-mu))

    def _ginv(self, eta):
        return -np.expm1(-np.exp(eta))

    def _dg(self, mu):
        return -1.0 / ((1.0 - mu) * np.log1p(-mu))


class Cauchy(Link):
    name = "cauchy"

    def _g(self, mu):
        return np.tan(np.pi * (mu - 0.5))

    def _ginv(self, eta):
        return 0.5 + np.arctan(eta) / np.pi

    def _dg(self, mu):
        return np.pi / np.cos(np.pi * (mu - 0.5)) ** 2


_LINKS = {cls.name: cls() for cls in (Logit, Probit, LogLog, CLogLog, Cauchy)}


def get_link(link) -> Link:
    """Look up a link by its lowercase name (instances pass through)."""
    if isinstance(link, Link):
        return link
    try:
        return _LINKS[str(link).lower()]
    except KeyError:
        raise ValueError(f"unknown link {link!r}; choose from {', '.join(LINK_NAMES)}") from None


def link_eval(link, mu):
    return get_link(link).eval(mu)


def link_inverse(link, eta):
    return get_link(link).inverse(eta)


def link_deriv(link, mu):
    return get_link(link).deriv(mu)


def _open_unit(mu):
    mu = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(mu)) or np.any(mu <= 0.0) or np.any(mu >= 1.0):
        raise DomainError("link argument must lie strictly inside (0, 1)")
    return mu


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x
