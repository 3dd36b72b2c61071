"""Poisson mixtures: finite mixtures of independent Poissons and the Poisson log-normal."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp
from sklearn.cluster import KMeans

from .core_data import CountMatrix

RATE_FLOOR = 1e-6
EM_MAX_ITER = 100
EM_TOL = 1e-8  # per-row log-likelihood gain
KMEANS_RESTARTS = 10
PSD_FLOOR = 1e-10
MOMENT_ARG_FLOOR = 1e-6


class OverdispersionError(ValueError):
    pass


@dataclass(frozen=True)
class FiniteMixturePoisson:
    """``k`` components, each a product of independent Poissons.

    ``weights`` has shape ``(k,)`` and ``rates`` shape ``(k, d)``.
    """

    weights: np.ndarray
    rates: np.ndarray
    loglik_trace: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        L = np.atleast_2d(np.array(self.rates, dtype=float))
        if L.shape[0] != w.size:
            raise ValueError("one rate row per component required")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be non-negative and sum to one")
        if np.any(~(L >= RATE_FLOOR * (1 - 1e-12))):
            raise ValueError(f"rates must be >= {RATE_FLOOR}")
        w.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", L)

    @property
    def k(self) -> int:
        return self.weights.size

    @property
    def d(self) -> int:
        return self.rates.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.rates

    def to_dict(self) -> dict:
        return {"pi": self.weights.tolist(), "Lambda": self.rates.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "FiniteMixturePoisson":
        return cls(np.asarray(obj["pi"]), np.asarray(obj["Lambda"]))

    def sample(self, n: int, rng: np.random.Generator) -> CountMatrix:
        return fm_sample(self, n, rng)


def _component_logpmf(X: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """``(n, k)`` matrix of ``sum_i log Pois(x_i; rates[k, i])``."""
    X = X.astype(float)
    return X @ np.log(rates).T - rates.sum(axis=1) - gammaln(X + 1).sum(axis=1, keepdims=True)


def _joint_logpmf(X: np.ndarray, weights: np.ndarray, rates: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return _component_logpmf(X, rates) + logw


def fm_logpmf(x, model: FiniteMixturePoisson):
    X = np.atleast_2d(np.asarray(x))
    out = logsumexp(_joint_logpmf(X, model.weights, model.rates), axis=1)
    return out if np.ndim(x) > 1 else float(out[0])


def _kmeans_init(X: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Best-of-10 k-means (lowest within-cluster SSE) on the raw counts."""
    with warnings.catch_warnings():
        # fewer distinct rows than k is legitimate for count data
        warnings.simplefilter("ignore")
        km = KMeans(n_clusters=k, n_init=KMEANS_RESTARTS, random_state=seed).fit(X.astype(float))
    n, d = X.shape
    counts = np.bincount(km.labels_, minlength=k).astype(float)
    rates = np.empty((k, d))
    overall = X.mean(axis=0)
    for c in range(k):
        rows = X[km.labels_ == c]
        rates[c] = rows.mean(axis=0) if len(rows) else overall
    return counts / n, np.maximum(rates, RATE_FLOOR)


def fm_fit_em(
    X: CountMatrix,
    k: int,
    seed: int,
    max_iter: int = EM_MAX_ITER,
    tol: float = EM_TOL,
) -> FiniteMixturePoisson:
    """EM for a finite mixture of independent Poissons.

    Starts from the best of ten k-means clusterings, stops after ``max_iter``
    iterations or once the log-likelihood gain drops below ``tol * n``. The
    fitted model carries the log-likelihood trace (one value per visited
    parameter set), which is non-decreasing.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if k > X.n:
        raise ValueError(f"k={k} exceeds the number of rows n={X.n}")
    vals = X.values.astype(float)
    n = X.n
    weights, rates = _kmeans_init(X.values, k, seed)
    trace = []
    lp = _joint_logpmf(vals, weights, rates)
    lse = logsumexp(lp, axis=1)
    ll = float(lse.sum())
    trace.append(ll)
    for _ in range(max_iter):
        resp = np.exp(lp - lse[:, None])
        nk = resp.sum(axis=0)
        weights = nk / nk.sum()
        live = nk > 0
        new_rates = rates.copy()
        new_rates[live] = (resp[:, live].T @ vals) / nk[live, None]
        # floored rate is the constrained maximizer, so ascent is preserved
        rates = np.maximum(new_rates, RATE_FLOOR)
        lp = _joint_logpmf(vals, weights, rates)
        lse = logsumexp(lp, axis=1)
        new_ll = float(lse.sum())
        trace.append(new_ll)
        if new_ll - ll < tol * n:
            break
        ll = new_ll
    weights = weights / weights.sum()
    return FiniteMixturePoisson(weights, rates, loglik_trace=tuple(trace))


def fm_sample(model: FiniteMixturePoisson, n: int, rng: np.random.Generator) -> CountMatrix:
    comp = rng.choice(model.k, size=n, p=model.weights)
    return CountMatrix(rng.poisson(model.rates[comp]))


@dataclass(frozen=True)
class LogNormalPoisson:
    """``x_i | lam ~ Pois(lam_i)`` with ``log lam ~ N(mu, Sigma)``."""

    mu: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).ravel()
        S = np.array(self.Sigma, dtype=float)
        if S.shape != (mu.size, mu.size):
            raise ValueError("Sigma shape does not match mu")
        if not np.allclose(S, S.T, atol=1e-12):
            raise ValueError("Sigma must be symmetric")
        if np.linalg.eigvalsh(S).min() < -1e-8:
            raise ValueError("Sigma must be positive semidefinite")
        mu.setflags(write=False)
        S.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Sigma", S)

    @property
    def d(self) -> int:
        return self.mu.size

    @property
    def alpha(self) -> np.ndarray:
        return np.exp(self.mu + 0.5 * np.diag(self.Sigma))

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "Sigma": self.Sigma.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "LogNormalPoisson":
        return cls(np.asarray(obj["mu"]), np.asarray(obj["Sigma"]))

    def sample(self, n: int, rng: np.random.Generator) -> CountMatrix:
        return ln_sample(self, n, rng)


def ln_moments(mu, Sigma) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form mean and covariance of the Poisson log-normal."""
    mu = np.asarray(mu, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    alpha = np.exp(mu + 0.5 * np.diag(Sigma))
    cov = np.outer(alpha, alpha) * np.expm1(Sigma)
    cov[np.diag_indices_from(cov)] += alpha
    return alpha, cov


def _psd_clip(S: np.ndarray, floor: float = PSD_FLOOR) -> np.ndarray:
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    if w.min() >= floor:
        return S
    out = (V * np.maximum(w, floor)) @ V.T
    return 0.5 * (out + out.T)


def ln_fit_moments(X: CountMatrix) -> LogNormalPoisson:
    """Moment-matching fit: invert the closed-form log-normal moments.

    Every column must be overdispersed (sample variance above sample mean).
    """
    vals = X.values.astype(float)
    m = vals.mean(axis=0)
    S = np.atleast_2d(np.cov(vals, rowvar=False))
    for j in range(X.d):
        if m[j] <= 0:
            raise OverdispersionError(f"column {X.column_names[j]!r} has zero mean")
        if S[j, j] <= m[j]:
            raise OverdispersionError(
                f"log-normal mixture requires overdispersion; column "
                f"{X.column_names[j]!r} has variance {S[j, j]:.4g} <= mean {m[j]:.4g}"
            )
    arg = 1.0 + S / np.outer(m, m)
    arg[np.diag_indices_from(arg)] = 1.0 + (np.diag(S) - m) / m**2
    Sigma = _psd_clip(np.log(np.maximum(arg, MOMENT_ARG_FLOOR)))
    mu = np.log(m) - 0.5 * np.diag(Sigma)
    return LogNormalPoisson(mu, Sigma)


def ln_sample(model: LogNormalPoisson, n: int, rng: np.random.Generator) -> CountMatrix:
    w, V = np.linalg.eigh(model.Sigma)
    L = V * np.sqrt(np.maximum(w, 0))
    log_lam = model.mu + rng.standard_normal((n, model.d)) @ L.T
    return CountMatrix(rng.poisson(np.exp(log_lam)))
