"""Systematic-scan Gibbs sampling for the pairwise family.

Each output row is its own chain; all chains advance together, one node at a
time, and every node update is an exact inverse-CDF draw from the node
conditional.
"""

from __future__ import annotations

import numpy as np

from ..core_data import CountMatrix
from .fit import LocalPGM
from .node import START_STATES, sample_node
from .params import FREE_DIAGONAL, PairwiseGMParams, VariantSpec, suffstat

GIBBS_ITERS = 5000


def gibbs_chains(
    theta: np.ndarray,
    coef: np.ndarray,
    diag: np.ndarray,
    variant: VariantSpec,
    n: int,
    iters: int,
    rng: np.random.Generator,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Run ``n`` chains for ``iters`` sweeps and return the final states.

    Node ``i`` has ``eta2 = theta[i] + sum_j coef[i, j] T(x_j)`` and
    ``eta1 = diag[i]``; ``coef`` need not be symmetric, which lets the same
    loop drive pseudo-Gibbs on local (LPGM) conditionals.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    d = theta.size
    coef = np.array(coef, dtype=float)
    np.fill_diagonal(coef, 0.0)
    X = np.zeros((n, d)) if x0 is None else np.array(x0, dtype=float)
    T = suffstat(variant, X)
    starts = [START_STATES] * d
    for _ in range(iters):
        for i in range(d):
            eta2 = theta[i] + T @ coef[i]
            xi = sample_node(variant, diag[i], eta2, rng, start=starts[i])
            X[:, i] = xi
            T[:, i] = suffstat(variant, xi)
            top = int(xi.max()) if n else 0
            # keep the enumeration near the occupied range to avoid regrowth
            starts[i] = max(START_STATES, top + 1)
    return X.astype(np.int64)


def gibbs_sample(
    model: PairwiseGMParams,
    n: int,
    iters: int = GIBBS_ITERS,
    rng: np.random.Generator | None = None,
) -> CountMatrix:
    """Draw ``n`` rows, each the last state of an independent chain from zero.

    FLPGM models are routed to the fixed-length sampler.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if model.variant.tag == "FLPGM":
        from .flpgm import flpgm_sample

        return flpgm_sample(model, n, rng)
    diag = np.diag(model.Phi).copy() if model.variant.tag in FREE_DIAGONAL else np.zeros(model.d)
    X = gibbs_chains(model.theta, 2.0 * model.Phi, diag, model.variant, n, iters, rng)
    return CountMatrix(X)


def lpgm_sample(
    model: LocalPGM,
    n: int,
    iters: int = GIBBS_ITERS,
    rng: np.random.Generator | None = None,
) -> CountMatrix:
    """Pseudo-Gibbs on the local conditionals, each truncated to ``{0..R}``.

    The local regressions need not be compatible with any joint law, so the
    chain targets whatever stationary law they induce; truncation keeps it
    from running off when positive couplings are present.
    """
    if model.R is None:
        raise ValueError("LocalPGM sampling needs a truncation level R")
    rng = rng if rng is not None else np.random.default_rng()
    variant = VariantSpec("TPGM", R=int(model.R))
    X = gibbs_chains(model.theta, model.coef, np.zeros(model.d), variant, n, iters, rng)
    return CountMatrix(X)
