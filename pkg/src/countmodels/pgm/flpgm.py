"""Fixed-length Poisson graphical model.

The joint law factors into a length law ``Pr(L)`` and a kernel on the
simplex ``{x : ||x||_1 = L}``:

    theta^T x + omega(L) x^T Phi x - sum_i log x_i!

With ``Phi = 0`` the length-conditional law is multinomial with
probabilities ``softmax(theta)``.
"""

from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np
from scipy.special import gammaln, logsumexp, softmax

from ..core_data import CountMatrix
from ..univariate import negbin_logpmf, negbin_sample, pois_logpmf
from .fit import REL_TOL, MAX_ITER, _convergence_meta, nodewise_regressions
from .params import PairwiseGMParams, VariantSpec

MAX_ENUM_D = 6
MAX_ENUM_L = 20


def compositions(L: int, d: int) -> np.ndarray:
    """All non-negative integer ``d``-vectors summing to ``L`` (stars and bars)."""
    if d < 1 or L < 0:
        raise ValueError("need d >= 1 and L >= 0")
    if d == 1:
        return np.array([[L]], dtype=np.int64)
    out = np.empty((comb(L + d - 1, d - 1), d), dtype=np.int64)
    for r, bars in enumerate(combinations(range(L + d - 1), d - 1)):
        edges = np.array((-1,) + bars + (L + d - 1,))
        out[r] = np.diff(edges) - 1
    return out


def _kernel(X: np.ndarray, model: PairwiseGMParams) -> np.ndarray:
    X = X.astype(float)
    L = X.sum(axis=1)
    quad = np.einsum("ni,ij,nj->n", X, model.Phi, X)
    return X @ model.theta + model.variant.omega_fn(L) * quad - gammaln(X + 1).sum(axis=1)


def flpgm_log_normalizer(model: PairwiseGMParams, L: int) -> float:
    """``A_L`` by enumerating the fixed-sum simplex."""
    if model.d > MAX_ENUM_D or L > MAX_ENUM_L:
        raise ValueError(
            f"exact normalization limited to d <= {MAX_ENUM_D} and L <= {MAX_ENUM_L} "
            f"(got d={model.d}, L={L})"
        )
    return float(logsumexp(_kernel(compositions(int(L), model.d), model)))


def _rows(x, d: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(x))
    if X.shape[1] != d:
        raise ValueError(f"rows must have length {d}")
    if np.any(X < 0) or np.any(X != np.round(X)):
        raise ValueError("FLPGM rows must be non-negative integers")
    return X.astype(np.int64)


def flpgm_logpmf_given_length(x, model: PairwiseGMParams):
    """``log Pr(x | ||x||_1 = L)`` for one row or an array of rows."""
    X = _rows(x, model.d)
    L = X.sum(axis=1)
    out = _kernel(X, model)
    for ell in np.unique(L):
        out[L == ell] -= flpgm_log_normalizer(model, int(ell))
    return out if np.ndim(x) > 1 else float(out[0])


def length_logpmf(L, variant: VariantSpec):
    kind, *params = variant.length_dist
    if kind == "poisson":
        return pois_logpmf(L, params[0])
    return negbin_logpmf(L, params[0], params[1])


def flpgm_logpmf(x, model: PairwiseGMParams):
    """Joint ``log Pr(L) + log Pr(x | L)``."""
    X = _rows(x, model.d)
    out = length_logpmf(X.sum(axis=1), model.variant) + flpgm_logpmf_given_length(X, model)
    return out if np.ndim(x) > 1 else float(out[0])


def sample_length(variant: VariantSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    kind, *params = variant.length_dist
    if kind == "poisson":
        return rng.poisson(params[0], size=n)
    return negbin_sample(params[0], params[1], rng, size=n)


def flpgm_sample(
    model: PairwiseGMParams,
    n: int,
    rng: np.random.Generator,
    sweeps: int | None = None,
) -> CountMatrix:
    """Length from the length law, then fixed-sum pair Gibbs.

    Rows start from a multinomial draw with probabilities ``softmax(theta)``.
    A sweep visits every pair ``(i, j)``, ``i < j``, and redraws how
    ``x_i + x_j`` is split between them by exact enumeration. The default
    is ``d**2`` sweeps.
    """
    if model.variant.tag != "FLPGM":
        raise ValueError("flpgm_sample needs an FLPGM model")
    d = model.d
    sweeps = d * d if sweeps is None else int(sweeps)
    L = sample_length(model.variant, n, rng)
    X = rng.multinomial(L, softmax(model.theta)).astype(np.int64)
    if d < 2 or n == 0 or not np.any(model.Phi) or L.max() == 0:
        # with no interactions the multinomial start is already exact
        return CountMatrix(X)
    w = model.variant.omega_fn(L)
    Phi, theta = model.Phi, model.theta
    a = np.arange(int(L.max()) + 1, dtype=float)
    lga = gammaln(a + 1)
    for _ in range(sweeps):
        for i in range(d - 1):
            for j in range(i + 1, d):
                t = (X[:, i] + X[:, j]).astype(float)
                rest = X.astype(float) @ Phi - X[:, i : i + 1] * Phi[i] - X[:, j : j + 1] * Phi[j]
                b = t[:, None] - a  # x_j when x_i = a
                valid = b >= 0
                b = np.maximum(b, 0)
                quad = Phi[i, i] * a**2 + Phi[j, j] * b**2 + 2 * Phi[i, j] * a * b
                quad = quad + 2 * a * rest[:, i : i + 1] + 2 * b * rest[:, j : j + 1]
                lw = theta[i] * a + theta[j] * b + w[:, None] * quad - lga - gammaln(b + 1)
                lw = np.where(valid, lw, -np.inf)
                p = np.exp(lw - lw.max(axis=1, keepdims=True))
                c = np.cumsum(p, axis=1)
                u = rng.random(n) * c[:, -1]
                xi = (c < u[:, None]).sum(axis=1)
                xi = np.minimum(xi, t.astype(np.int64))
                X[:, i] = xi
                X[:, j] = t.astype(np.int64) - xi
    return CountMatrix(X)


def flpgm_fit_heuristic(
    X,
    lam_reg: float,
    omega: str = "inverse_length",
    *,
    max_iter: int = MAX_ITER,
    tol: float = REL_TOL,
) -> PairwiseGMParams:
    """Heuristic FLPGM fit: Poisson node regressions with ``omega``-scaled rows.

    Node ``i``'s interactions in a row are scaled by ``omega(L - x_i)``, the
    weight at the length of the other coordinates, so the response never
    enters its own design. The weight function is fixed, not learned. The
    length law is a Poisson whose rate is the mean row sum. Nothing
    guarantees consistency, and the returned ``meta`` says so.
    """
    vals = (X.values if isinstance(X, CountMatrix) else np.asarray(X)).astype(float)
    rate = max(float(vals.sum(axis=1).mean()), 1e-12)
    variant = VariantSpec("FLPGM", length_dist=("poisson", rate), omega=omega)
    scale = variant.omega_fn(vals.sum(axis=1)[:, None] - vals)
    theta, _, off, results = nodewise_regressions(
        vals, variant, lam_reg, row_scale=scale, nonpositive=False, max_iter=max_iter, tol=tol
    )
    meta = _convergence_meta(results, lam_reg)
    meta["heuristic"] = True
    meta["warnings"].append("heuristic estimate: no consistency guarantee")
    Phi = 0.5 * (off + off.T)
    np.fill_diagonal(Phi, 0.0)
    return PairwiseGMParams(theta, Phi, variant, meta=meta)
