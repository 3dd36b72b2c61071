"""Gaussian copula paired with Poisson marginals.

Fitting follows the two-stage IFM recipe: Poisson rates from column means,
then the copula correlation from data mapped to the unit cube either by the
expected distributional transform (default) or by a single-jitter continuous
extension.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from .core_data import CountMatrix
from .univariate import pois_cdf, pois_quantile

U_CLAMP = 1e-12


class TransformKind(str, Enum):
    DT = "DT"
    CE = "CE"


class CopulaFitError(ValueError):
    pass


def nearest_correlation(C: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Clip eigenvalues at ``floor``, rebuild and rescale to a unit diagonal."""
    C = 0.5 * (C + C.T)
    w, V = np.linalg.eigh(C)
    if w.min() >= floor:
        out = C
    else:
        out = (V * np.maximum(w, floor)) @ V.T
    s = np.sqrt(np.diag(out))
    out = out / np.outer(s, s)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


@dataclass(frozen=True)
class GaussianCopulaPoisson:
    R: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        lam = np.array(self.lam, dtype=float).ravel()
        d = lam.size
        if R.shape != (d, d):
            raise ValueError(f"R must be {d}x{d}")
        if np.any(~(lam > 0)):
            raise ValueError("Poisson rates must be positive")
        if not np.allclose(R, R.T, atol=1e-12) or not np.allclose(np.diag(R), 1.0, atol=1e-12):
            raise ValueError("R must be a symmetric matrix with unit diagonal")
        if np.linalg.eigvalsh(R).min() < -1e-10:
            raise ValueError("R is not positive semidefinite")
        R.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "lam", lam)

    @property
    def d(self) -> int:
        return self.lam.size

    def to_dict(self) -> dict:
        return {"lambda": self.lam.tolist(), "R": self.R.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "GaussianCopulaPoisson":
        return cls(np.asarray(obj["R"]), np.asarray(obj["lambda"]))

    def sample(self, n: int, rng: np.random.Generator) -> CountMatrix:
        return copula_sample(self, n, rng)


def dt_transform(x, lam):
    """Expected distributional transform ``0.5 (F(x-1) + F(x))``."""
    return 0.5 * (pois_cdf(np.asarray(x) - 1, lam) + pois_cdf(x, lam))


def ce_transform(x, rng: np.random.Generator):
    """Continuous extension ``x + (u - 1)`` with ``u ~ Uniform(0, 1]``."""
    x = np.asarray(x, dtype=float)
    u = 1.0 - rng.random(x.shape)  # (0, 1]
    return x + (u - 1.0)


def _normal_scores(u: np.ndarray) -> np.ndarray:
    return ndtri(np.clip(u, U_CLAMP, 1 - U_CLAMP))


def fit_ifm(
    X: CountMatrix,
    transform: TransformKind | str = TransformKind.DT,
    rng: np.random.Generator | None = None,
) -> GaussianCopulaPoisson:
    """Two-stage IFM fit of a Gaussian copula with Poisson marginals.

    Parameters
    ----------
    X : CountMatrix
        Training counts; every column must have a positive mean.
    transform : {"DT", "CE"}
        ``DT`` maps each cell to the midpoint of its CDF jump under the fitted
        Poisson marginal. ``CE`` jitters each cell once and uses the empirical
        CDF of the jittered column.
    rng : numpy Generator, optional
        Jitter source for ``CE``; ignored by ``DT``.
    """
    transform = TransformKind(transform)
    vals = X.values.astype(float)
    lam = vals.mean(axis=0)
    for j in np.flatnonzero(lam <= 0):
        raise CopulaFitError(f"column {X.column_names[j]!r} has zero mean")
    if transform is TransformKind.DT:
        u = dt_transform(vals, lam)
    else:
        rng = rng if rng is not None else np.random.default_rng()
        jittered = ce_transform(vals, rng)
        u = rankdata(jittered, axis=0) / (X.n + 1)
    z = _normal_scores(u)
    sd = z.std(axis=0)
    for j in np.flatnonzero(sd <= 1e-12):
        raise CopulaFitError(
            f"column {X.column_names[j]!r} is degenerate after transform; correlation undefined"
        )
    if X.d == 1:
        return GaussianCopulaPoisson(np.ones((1, 1)), lam)
    R = nearest_correlation(np.corrcoef(z, rowvar=False))
    return GaussianCopulaPoisson(R, lam)


def correlated_normals(R: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Rows of ``N(0, R)``; eigen-factor fallback when ``R`` is singular."""
    d = R.shape[0]
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(R)
        L = V * np.sqrt(np.maximum(w, 0))
    return rng.standard_normal((n, d)) @ L.T


def copula_sample(model: GaussianCopulaPoisson, n: int, rng: np.random.Generator) -> CountMatrix:
    z = correlated_normals(model.R, n, rng)
    u = np.minimum(ndtr(z), np.nextafter(1.0, 0.0))
    return CountMatrix(pois_quantile(u, model.lam[None, :]))


def rectangle_bounds(model: GaussianCopulaPoisson, x) -> tuple[np.ndarray, np.ndarray]:
    """Normal-scale rectangle ``[Phi^-1 F(x-1), Phi^-1 F(x)]`` for a count vector."""
    x = np.asarray(x)
    lo = ndtri(pois_cdf(x - 1, model.lam))
    hi = ndtri(pois_cdf(x, model.lam))
    return lo, hi


def sl_pmf_mc(
    model: GaussianCopulaPoisson,
    x,
    m: int,
    rng: np.random.Generator,
    chunk: int = 200_000,
) -> tuple[float, float]:
    """Monte Carlo estimate of ``P(X = x)`` as a normal rectangle probability.

    Returns the estimate and its binomial standard error.
    """
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (model.d,):
        raise ValueError(f"x must have length {model.d}")
    lo, hi = rectangle_bounds(model, x)
    hits = 0
    done = 0
    while done < m:
        b = min(chunk, m - done)
        z = correlated_normals(model.R, b, rng)
        hits += int(np.all((z > lo) & (z <= hi), axis=1).sum())
        done += b
    p = hits / m
    return p, float(np.sqrt(p * (1 - p) / m))
