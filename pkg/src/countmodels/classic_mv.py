"""Latent-sum multivariate Poisson distributions with Poisson marginals.

Each observed count is a sum of independent latent Poisson variables; the
shared summands induce (necessarily non-negative) covariance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .core_data import CountMatrix
from .univariate import pois_logpmf

MAX_FULL_REDUCTION_D = 10
MAX_BRUTE_FORCE_TOTAL = 25
_CHUNK_ENTRIES = 2_000_000


@dataclass(frozen=True)
class BivariatePoisson:
    lam1: float
    lam2: float
    lam0: float

    def __post_init__(self):
        if not (self.lam1 > 0 and self.lam2 > 0 and self.lam0 >= 0):
            raise ValueError("need lam1, lam2 > 0 and lam0 >= 0")

    def as_common(self) -> "CommonCovMVP":
        return CommonCovMVP(self.lam0, (self.lam1, self.lam2))


@dataclass(frozen=True)
class CommonCovMVP:
    """``x_i = y_i + z`` with ``y_i ~ Pois(lam[i])`` and a shared ``z ~ Pois(lam0)``."""

    lam0: float
    lam: tuple[float, ...]

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lam)
        if len(lam) < 2:
            raise ValueError("multivariate Poisson needs d >= 2")
        if self.lam0 < 0 or any(not v > 0 for v in lam):
            raise ValueError("need lam0 >= 0 and all lam > 0")
        object.__setattr__(self, "lam", lam)

    @property
    def d(self) -> int:
        return len(self.lam)

    @property
    def marginal_rates(self) -> np.ndarray:
        return np.asarray(self.lam) + self.lam0


def mvpois_logpmf(x, params: CommonCovMVP | BivariatePoisson):
    """Log joint pmf of the common-covariance multivariate Poisson.

    ``x`` is a ``d``-vector or an ``(n, d)`` array. The sum over the shared
    latent count runs from 0 to ``min_i x_i`` and is carried out with
    log-sum-exp.
    """
    if isinstance(params, BivariatePoisson):
        params = params.as_common()
    X = np.atleast_2d(np.asarray(x, dtype=np.int64))
    lam = np.asarray(params.lam)
    if X.shape[1] != lam.size:
        raise ValueError(f"expected {lam.size} columns, got {X.shape[1]}")
    if np.any(X < 0):
        raise ValueError("counts must be non-negative")
    log_lam = np.log(lam)
    base = -(lam.sum() + params.lam0) + (X * log_lam - gammaln(X + 1)).sum(axis=1)
    zmax = X.min(axis=1)
    if params.lam0 == 0 or zmax.max() == 0:
        out = base
    else:
        z = np.arange(zmax.max() + 1)
        slope = np.log(params.lam0) - log_lam.sum()
        out = np.empty(X.shape[0])
        # bound the (rows, d, z) working array
        step = max(1, _CHUNK_ENTRIES // (X.shape[1] * z.size))
        for start in range(0, X.shape[0], step):
            Xf = X[start : start + step, :, None].astype(float)
            # log prod_i C(x_i, z), masked where z > x_i
            with np.errstate(invalid="ignore"):
                lchoose = gammaln(Xf + 1) - gammaln(z + 1) - gammaln(Xf - z + 1)
            lchoose = np.where(z <= Xf, lchoose, -np.inf).sum(axis=1)
            # sum_z (lam0 / prod lam)^z (z!)^(d-1) prod_i C(x_i, z)
            terms = lchoose + (params.d - 1) * gammaln(z + 1) + z * slope
            out[start : start + step] = logsumexp(terms, axis=1)
        out += base
    return out if np.ndim(x) > 1 else float(out[0])


def mvpois_pmf(x, params):
    return np.exp(mvpois_logpmf(x, params))


def bipois_pmf(x1, x2, params: BivariatePoisson):
    x = np.stack(np.broadcast_arrays(np.asarray(x1), np.asarray(x2)), axis=-1)
    shape = x.shape[:-1]
    out = np.exp(mvpois_logpmf(x.reshape(-1, 2), params)).reshape(shape)
    return out if out.ndim else float(out)


def mvpois_sample(params: CommonCovMVP | BivariatePoisson, n: int, rng: np.random.Generator) -> CountMatrix:
    if isinstance(params, BivariatePoisson):
        params = params.as_common()
    z = rng.poisson(params.lam0, size=(n, 1))
    y = rng.poisson(np.asarray(params.lam), size=(n, params.d))
    return CountMatrix(y + z)


@dataclass(frozen=True)
class ReductionMVP:
    """General multivariate reduction ``x = A y`` with independent ``y_j ~ Pois(lam[j])``."""

    A: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.int64)
        lam = np.asarray(self.lam, dtype=float)
        if A.ndim != 2 or not np.isin(A, (0, 1)).all():
            raise ValueError("A must be a 2-D zero-one matrix")
        if len({tuple(c) for c in A.T}) != A.shape[1]:
            raise ValueError("A has duplicate columns")
        if (A.sum(axis=0) == 0).any():
            raise ValueError("A has an all-zero column")
        if lam.shape != (A.shape[1],) or np.any(~(lam > 0)):
            raise ValueError("lam must hold one positive rate per column of A")
        A.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lam", lam)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def mean(self) -> np.ndarray:
        return self.A @ self.lam

    def cov(self) -> np.ndarray:
        return (self.A * self.lam) @ self.A.T


def full_reduction_matrix(d: int) -> np.ndarray:
    """``[A_1, ..., A_d]``: every non-empty subset of the ``d`` variables as a column.

    Blocks are ordered by subset size and, within a block, lexicographically.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if d > MAX_FULL_REDUCTION_D:
        raise ValueError(
            f"full reduction has 2^d - 1 latent variables; refusing d={d} > {MAX_FULL_REDUCTION_D}"
        )
    cols = []
    for size in range(1, d + 1):
        for subset in itertools.combinations(range(d), size):
            c = np.zeros(d, dtype=np.int64)
            c[list(subset)] = 1
            cols.append(c)
    return np.stack(cols, axis=1)


def build_full_reduction(d: int, lam=None) -> ReductionMVP:
    A = full_reduction_matrix(d)
    lam = np.ones(A.shape[1]) if lam is None else np.asarray(lam, dtype=float)
    return ReductionMVP(A, lam)


def reduction_sample(model: ReductionMVP, n: int, rng: np.random.Generator) -> CountMatrix:
    y = rng.poisson(model.lam, size=(n, model.lam.size))
    return CountMatrix(y @ model.A.T)


def reduction_pmf_bruteforce(x, model: ReductionMVP) -> float:
    """Exact pmf by enumerating all latent vectors with ``A y = x``.

    Only meant for small instances: the total count is capped at 25.
    """
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (model.d,) or np.any(x < 0):
        raise ValueError("x must be a non-negative d-vector")
    if x.sum() > MAX_BRUTE_FORCE_TOTAL:
        raise ValueError(f"total count {x.sum()} exceeds enumeration cap {MAX_BRUTE_FORCE_TOTAL}")
    A, lam = model.A, model.lam
    m = A.shape[1]
    logs = []

    def recurse(j: int, remaining: np.ndarray, acc: float):
        if j == m:
            if not remaining.any():
                logs.append(acc)
            return
        rows = A[:, j] == 1
        hi = int(remaining[rows].min())
        for yj in range(hi + 1):
            recurse(j + 1, remaining - yj * A[:, j], acc + pois_logpmf(yj, lam[j]))

    recurse(0, x.copy(), 0.0)
    return float(np.exp(logsumexp(logs))) if logs else 0.0
