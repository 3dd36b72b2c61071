"""Univariate Poisson and negative binomial primitives.

Everything here is vectorized over numpy broadcasting and works in
log-space through ``gammaln``; no factorial tables are kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats


@dataclass(frozen=True)
class PoissonParam:
    """Poisson rate ``lam``; the natural parameter is ``eta = log(lam)``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"Poisson rate must be positive, got {self.lam}")

    @property
    def eta(self) -> float:
        return float(np.log(self.lam))

    @classmethod
    def from_natural(cls, eta: float) -> "PoissonParam":
        return cls(float(np.exp(eta)))


@dataclass(frozen=True)
class NegBinParam:
    r: float
    p: float

    def __post_init__(self):
        _check_negbin(self.r, self.p)

    @property
    def mean(self) -> float:
        return self.r * (1 - self.p) / self.p

    @property
    def var(self) -> float:
        return self.r * (1 - self.p) / self.p**2


def _check_rate(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise ValueError("Poisson rate must be positive")
    return lam


def _check_negbin(r, p):
    if np.any(~(np.asarray(r) > 0)):
        raise ValueError("negative binomial shape r must be positive")
    p = np.asarray(p)
    if np.any(~((p > 0) & (p < 1))):
        raise ValueError("negative binomial p must lie in (0, 1)")


def pois_logpmf(x, lam):
    """``x log(lam) - lam - log(x!)``; ``-inf`` for negative ``x``."""
    lam = _check_rate(lam)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = special.xlogy(x, lam) - lam - special.gammaln(x + 1)
    out = np.where(x < 0, -np.inf, out)
    return out if out.ndim else float(out)


def pois_pmf(x, lam):
    return np.exp(pois_logpmf(x, lam))


def pois_cdf(x, lam):
    """``P(X <= x)``; zero for ``x < 0`` (empty sum)."""
    lam = _check_rate(lam)
    x = np.floor(np.asarray(x, dtype=float))
    out = np.where(x < 0, 0.0, special.pdtr(np.maximum(x, 0), lam))
    return out if out.ndim else float(out)


def pois_quantile(u, lam):
    """Smallest integer ``x`` with ``pois_cdf(x, lam) >= u``.

    The scipy percent-point function provides the warm start; the result is
    then corrected step by step against :func:`pois_cdf` so the defining
    inequality holds exactly for the cdf used everywhere else in the package.
    """
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u >= 1)) or np.any(np.isnan(u)):
        raise ValueError("quantile level must lie in [0, 1)")
    lam = _check_rate(lam)
    u, lam = np.broadcast_arrays(u, lam)
    x = np.nan_to_num(stats.poisson.ppf(u, lam), nan=0.0, posinf=0.0)
    x = np.maximum(x, 0).astype(np.int64)
    # step down while the previous point already reaches u
    while True:
        down = (x > 0) & (pois_cdf(x - 1, lam) >= u)
        if not down.any():
            break
        x = x - down
    while True:
        up = pois_cdf(x, lam) < u
        if not up.any():
            break
        x = x + up
    return x if x.ndim else int(x)


def pois_sample(lam, rng: np.random.Generator, size=None):
    lam = _check_rate(lam)
    return rng.poisson(lam, size=size)


def negbin_logpmf(x, r, p):
    """``log Gamma(r+x) - log Gamma(r) - log x! + r log p + x log(1-p)``."""
    _check_negbin(r, p)
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    out = (
        special.gammaln(r + x)
        - special.gammaln(r)
        - special.gammaln(x + 1)
        + r * np.log(p)
        + special.xlogy(x, 1 - p)
    )
    out = np.where(x < 0, -np.inf, out)
    return out if out.ndim else float(out)


def negbin_sample(r, p, rng: np.random.Generator, size=None):
    _check_negbin(r, p)
    return rng.negative_binomial(r, p, size=size)


def support_bound(lam) -> int:
    """Grid edge ``lam + 40 sqrt(lam) + 40`` beyond which Poisson mass is negligible."""
    lam = float(np.max(lam))
    return int(np.ceil(lam + 40 * np.sqrt(lam) + 40))
