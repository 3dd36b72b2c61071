"""Node-conditional laws of the pairwise family.

Every node conditional has the two-parameter form

    log p(x) = eta1 * T(x)**2 + eta2 * T(x) + B(x) - A(eta1, eta2)

with ``T`` the variant statistic and ``B`` its log base measure, so PGM,
TPGM, QPGM, SPGM and SQR share one code path. Infinite-support series are
extended by doubling until a geometric bound on the remaining tail, valid for
every later term, falls below the relative tolerance.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .params import DivergenceError, VariantSpec, log_base_measure, spgm_suffstat, suffstat

SERIES_TOL = 1e-14
SAMPLER_TOL = 1e-12
MAX_STATES = 10**6
START_STATES = 32


def _as_rows(eta1, eta2):
    eta2 = np.atleast_1d(np.asarray(eta2, dtype=float))
    eta1 = np.broadcast_to(np.asarray(eta1, dtype=float), eta2.shape)
    return eta1, eta2


def node_log_terms(variant: VariantSpec, eta1, eta2, xs) -> np.ndarray:
    """``(n, len(xs))`` unnormalized log-probabilities."""
    eta1, eta2 = _as_rows(eta1, eta2)
    T = suffstat(variant, xs)
    return eta1[:, None] * T**2 + eta2[:, None] * T + log_base_measure(variant, xs)


def _tail_log_ratio(variant: VariantSpec, eta1, eta2, M: int) -> np.ndarray:
    """Upper bound on ``log(term(x+1) / term(x))`` over all ``x >= M``."""
    tag = variant.tag
    if tag == "SQR":
        return eta1 + np.maximum(eta2, 0) * (np.sqrt(M + 1) - np.sqrt(M)) - np.log(M + 1)
    if tag == "QPGM":
        # no base measure: the ratio is eta2 + eta1 (2x + 1), decreasing for eta1 < 0
        return eta2 + eta1 * (2 * M + 1)
    if tag == "SPGM":
        R0, R = variant.R0, variant.R
        dT = spgm_suffstat(M + 1, R0, R) - spgm_suffstat(M, R0, R)
        return np.abs(eta1) * dT * (R + R0) + np.abs(eta2) * dT - np.log(M + 1)
    # linear statistic with Poisson base measure
    return eta1 * (2 * M + 1) + eta2 - np.log(M + 1)


def node_support(
    variant: VariantSpec,
    eta1,
    eta2,
    tol: float = SERIES_TOL,
    max_states: int = MAX_STATES,
    start: int = START_STATES,
):
    """Enumerate enough support to capture all but ``tol`` of the mass.

    Returns ``(xs, log_terms, A)`` where ``A`` is the log of the enumerated
    partial sum.
    """
    eta1, eta2 = _as_rows(eta1, eta2)
    if variant.tag == "TPGM":
        xs = np.arange(variant.R + 1, dtype=float)
        lt = node_log_terms(variant, eta1, eta2, xs)
        return xs, lt, logsumexp(lt, axis=1)
    if variant.tag == "QPGM" and np.any(eta1 >= 0):
        raise DivergenceError("QPGM node series diverges unless the quadratic coefficient is negative")
    M = max(int(start), 2)
    log_tol = np.log(tol)
    while True:
        xs = np.arange(M + 1, dtype=float)
        lt = node_log_terms(variant, eta1, eta2, xs)
        A = logsumexp(lt, axis=1)
        logr = _tail_log_ratio(variant, eta1, eta2, M)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = lt[:, M] + logr - np.log(-np.expm1(logr))
        ok = (logr < 0) & (tail < log_tol + A)
        if ok.all():
            return xs, lt, A
        M *= 2
        if M + 1 > max_states:
            raise DivergenceError(
                f"node conditional needs more than {max_states} support points; "
                "the conditional is (numerically) divergent"
            )


def node_logpartition(variant: VariantSpec, eta1, eta2, tol: float = SERIES_TOL):
    """Log partition ``A(eta1, eta2)`` of the node conditional.

    PGM uses the closed form ``exp(eta2)`` (and requires ``eta1 == 0``); TPGM
    sums its finite domain; the rest sum a truncated series.
    """
    scalar = np.ndim(eta2) == 0
    e1, e2 = _as_rows(eta1, eta2)
    if variant.tag in ("PGM", "FLPGM"):
        if np.any(e1 != 0):
            raise ValueError(f"{variant.tag} node conditionals have no quadratic term")
        with np.errstate(over="ignore"):
            A = np.exp(e2)
    else:
        A = node_support(variant, e1, e2, tol)[2]
    return float(A[0]) if scalar else A


def node_moments(variant: VariantSpec, eta1, eta2, tol: float = SERIES_TOL):
    """``(A, E[T], E[T^2])`` under the node conditional, one entry per row."""
    e1, e2 = _as_rows(eta1, eta2)
    if variant.tag in ("PGM", "FLPGM"):
        with np.errstate(over="ignore"):
            lam = np.exp(e2)
        return lam, lam, lam + lam**2
    xs, lt, A = node_support(variant, e1, e2, tol)
    w = np.exp(lt - A[:, None])
    T = suffstat(variant, xs)
    return A, w @ T, w @ T**2


def sample_node(
    variant: VariantSpec,
    eta1,
    eta2,
    rng: np.random.Generator,
    tol: float = SAMPLER_TOL,
    start: int = START_STATES,
) -> np.ndarray:
    """One exact draw per row from the node conditional (inverse CDF)."""
    e1, e2 = _as_rows(eta1, eta2)
    if variant.tag in ("PGM", "FLPGM") and not np.any(e1):
        with np.errstate(over="ignore"):
            lam = np.exp(e2)
        if np.any(~(lam < MAX_STATES)):
            raise DivergenceError(f"Poisson conditional rate {lam.max():.3g} is divergent")
        return rng.poisson(lam)
    xs, lt, A = node_support(variant, e1, e2, tol, start=start)
    c = np.cumsum(np.exp(lt - A[:, None]), axis=1)
    u = rng.random(e2.size) * c[:, -1]
    idx = (c < u[:, None]).sum(axis=1)
    return np.minimum(idx, xs.size - 1)
