"""Synthetic count datasets drawn from the package's own samplers."""

from __future__ import annotations

import numpy as np

from ..classic_mv import BivariatePoisson, mvpois_sample
from ..copula_poisson import GaussianCopulaPoisson
from ..core_data import CountMatrix
from ..mixtures import FiniteMixturePoisson, LogNormalPoisson
from ..pgm import PairwiseGMParams, VariantSpec, gibbs_sample

SYNTH_KINDS = ("copula", "finite_mixture", "log_normal", "tpgm", "bivariate_poisson", "multinomial")


def extreme_lognormal_sigma(alpha, rho: float = 0.999) -> np.ndarray:
    """``2 log(alpha) [[1, rho], [rho, 1]]``; ``alpha`` is a scalar or a list of pairs.

    A list of alphas yields a block-diagonal covariance with one block per
    alpha; ``rho`` may likewise be a list (one sign per block).
    """
    alphas = np.atleast_1d(np.asarray(alpha, dtype=float))
    rhos = np.broadcast_to(np.asarray(rho, dtype=float), alphas.shape)
    k = alphas.size
    S = np.zeros((2 * k, 2 * k))
    for b, (a, r) in enumerate(zip(alphas, rhos)):
        S[2 * b : 2 * b + 2, 2 * b : 2 * b + 2] = 2 * np.log(a) * np.array([[1.0, r], [r, 1.0]])
    return S


def synth_generate(kind: str, params: dict, n: int, seed: int) -> CountMatrix:
    """Draw ``n`` rows from a named generator.

    ``params`` per kind:

    * ``copula``: ``R``, ``lam``
    * ``finite_mixture``: ``weights``, ``rates``
    * ``log_normal``: ``mu`` and ``Sigma``, or ``alpha`` (and optional
      ``rho``) for the extreme-correlation construction with zero mean
    * ``tpgm``: ``theta``, ``Phi``, ``R``, optional ``iters`` (default 5000)
    * ``bivariate_poisson``: ``lam1``, ``lam2``, ``lam0``
    * ``multinomial``: ``p`` plus either a fixed length ``L`` or a Poisson
      length rate ``rate``
    """
    rng = np.random.default_rng(seed)
    if kind == "copula":
        return GaussianCopulaPoisson(np.asarray(params["R"]), np.asarray(params["lam"])).sample(n, rng)
    if kind == "finite_mixture":
        return FiniteMixturePoisson(np.asarray(params["weights"]), np.asarray(params["rates"])).sample(n, rng)
    if kind == "log_normal":
        if "alpha" in params:
            Sigma = extreme_lognormal_sigma(params["alpha"], params.get("rho", 0.999))
            mu = np.zeros(Sigma.shape[0])
        else:
            mu, Sigma = np.asarray(params["mu"]), np.asarray(params["Sigma"])
        return LogNormalPoisson(mu, Sigma).sample(n, rng)
    if kind == "tpgm":
        model = PairwiseGMParams(
            np.asarray(params["theta"]), np.asarray(params["Phi"]), VariantSpec("TPGM", R=int(params["R"]))
        )
        return gibbs_sample(model, n, iters=int(params.get("iters", 5000)), rng=rng)
    if kind == "bivariate_poisson":
        bp = BivariatePoisson(float(params["lam1"]), float(params["lam2"]), float(params["lam0"]))
        return mvpois_sample(bp, n, rng)
    if kind == "multinomial":
        p = np.asarray(params["p"], dtype=float)
        if "L" in params:
            L = np.full(n, int(params["L"]))
        else:
            L = rng.poisson(float(params["rate"]), size=n)
        return CountMatrix(rng.multinomial(L, p / p.sum()))
    raise ValueError(f"unknown generator {kind!r}; choose from {', '.join(SYNTH_KINDS)}")
