"""Node-wise l1-penalized pseudo-likelihood fitting.

Each node is an exponential-family regression of ``T(x_i)`` on the
statistics of the other nodes, solved by proximal gradient with a
backtracking line search. The smooth per-node loss is

    (1/n) sum_rows [A(eta1, eta2) - eta1 T(x_i)^2 - eta2 T(x_i)]

with ``eta2 = theta_i + 2 s(row) sum_j phi_ij T(x_j)`` and ``eta1 = phi_ii``
for the free-diagonal variants (zero otherwise). ``s(row)`` is 1 except in
the fixed-length heuristic, where it is ``omega(||row||_1)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..core_data import CountMatrix
from .node import node_moments
from .params import FREE_DIAGONAL, DivergenceError, PairwiseGMParams, VariantSpec, suffstat

logger = logging.getLogger(__name__)

MAX_ITER = 500
REL_TOL = 1e-7
ARMIJO = 1e-4
QPGM_DIAG_CAP = -1e-4
MEAN_FLOOR = 1e-3
PATH_LENGTH = 10
PATH_RATIO = 1e-4


@dataclass
class NodeProblem:
    """Data for one node regression.

    ``w`` is laid out as ``[theta_i, (phi_ii), phi_i,others]``.
    """

    variant: VariantSpec
    Ti: np.ndarray
    Z: np.ndarray  # (n, d-1) design for the off-diagonal block, already scaled by 2 s(row)
    lam: float
    free_diag: bool
    nonpositive: bool  # project off-diagonals onto (-inf, 0]
    weights: np.ndarray | None = None  # per-coordinate penalty weights

    @property
    def _lam_vec(self):
        return self.lam if self.weights is None else self.lam * self.weights

    @property
    def n_head(self) -> int:
        return 2 if self.free_diag else 1

    def etas(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        eta2 = w[0] + self.Z @ w[self.n_head :]
        eta1 = np.full_like(eta2, w[1] if self.free_diag else 0.0)
        return eta1, eta2

    def smooth(self, w: np.ndarray, grad: bool = True):
        """Smooth loss and (optionally) its gradient; ``inf`` if not finite."""
        eta1, eta2 = self.etas(w)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                A, ET, ET2 = node_moments(self.variant, eta1, eta2)
        except DivergenceError:
            return (np.inf, None) if grad else np.inf
        Ti = self.Ti
        with np.errstate(over="ignore", invalid="ignore"):
            f = float(np.mean(A - eta1 * Ti**2 - eta2 * Ti))
        if not np.isfinite(f):
            return (np.inf, None) if grad else np.inf
        if not grad:
            return f
        n = Ti.size
        r = ET - Ti
        g = np.empty_like(w)
        g[0] = r.mean()
        if self.free_diag:
            g[1] = np.mean(ET2 - Ti**2)
        g[self.n_head :] = self.Z.T @ r / n
        return f, g

    def penalty(self, w: np.ndarray) -> float:
        return float(np.sum(self._lam_vec * np.abs(w[self.n_head :])))

    def prox(self, v: np.ndarray, t: float) -> np.ndarray:
        out = v.copy()
        off = v[self.n_head :]
        off = np.sign(off) * np.maximum(np.abs(off) - t * self._lam_vec, 0.0)
        if self.nonpositive:
            off = np.minimum(off, 0.0)
        out[self.n_head :] = off
        if self.free_diag and self.variant.tag == "QPGM":
            out[1] = min(out[1], QPGM_DIAG_CAP)
        return out


@dataclass
class NodeResult:
    w: np.ndarray
    objective: float
    n_iter: int
    converged: bool
    trace: list[float] = field(default_factory=list)


def prox_gradient(
    prob: NodeProblem,
    w0: np.ndarray,
    max_iter: int = MAX_ITER,
    tol: float = REL_TOL,
) -> NodeResult:
    """Monotone proximal gradient with halving backtracking.

    The trial step starts from the Barzilai-Borwein estimate and is halved
    until
    ``F(w+) <= F(w) - 1e-4 ||w+ - w||^2 / t``.
    """
    w = prob.prox(np.asarray(w0, dtype=float), 0.0)
    f, g = prob.smooth(w)
    if not np.isfinite(f):
        raise DivergenceError("node loss is not finite at the starting point")
    F = f + prob.penalty(w)
    trace = [F]
    t = 1.0
    prev = None
    for it in range(1, max_iter + 1):
        if prev is not None:
            dw, dg = w - prev[0], g - prev[1]
            curv = float(dw @ dg)
            if curv > 0:
                t = float(dw @ dw) / curv
            else:
                t = 2 * t
        t = float(np.clip(t, 1e-12, 1e6))
        while True:
            w_new = prob.prox(w - t * g, t)
            step = w_new - w
            f_new = prob.smooth(w_new, grad=False)
            F_new = f_new + prob.penalty(w_new)
            if F_new <= F - ARMIJO * float(step @ step) / t:
                break
            t *= 0.5
            if t < 1e-14:
                # no descent left at machine precision: stationary
                return NodeResult(w, F, it, True, trace)
        f_new, g_new = prob.smooth(w_new)
        prev = (w, g)
        w, g = w_new, g_new
        change = abs(F - F_new) / max(abs(F), 1.0)
        F = F_new
        trace.append(F)
        if change < tol:
            return NodeResult(w, F, it, True, trace)
    return NodeResult(w, F, max_iter, False, trace)


def standardized(prob: NodeProblem):
    """Equivalent problem with centred, unit-variance design columns.

    With ``Z = m + Zs * s`` the substitution ``phi = phi_s / s`` and
    ``theta = theta_s - m . phi`` leaves every objective value unchanged;
    the penalty picks up weights ``1 / s``. Sign constraints survive since
    ``s > 0``. Returns the new problem and maps to and from its coordinates.
    """
    h = prob.n_head
    m = prob.Z.mean(axis=0)
    s = prob.Z.std(axis=0)
    s = np.where(s > 0, s, 1.0)
    base = np.ones(s.size) if prob.weights is None else prob.weights
    sprob = NodeProblem(
        prob.variant, prob.Ti, (prob.Z - m) / s, prob.lam, prob.free_diag, prob.nonpositive, base / s
    )

    def to_std(w):
        out = np.array(w, dtype=float)
        out[0] = w[0] + m @ w[h:]
        out[h:] = w[h:] * s
        return out

    def to_orig(ws):
        out = np.array(ws, dtype=float)
        out[h:] = ws[h:] / s
        out[0] = ws[0] - m @ out[h:]
        return out

    return sprob, to_std, to_orig


def _prepare(X, variant: VariantSpec) -> np.ndarray:
    vals = (X.values if isinstance(X, CountMatrix) else np.asarray(X)).astype(float)
    if vals.ndim != 2:
        raise ValueError("X must be a 2-D count array")
    if variant.tag == "TPGM":
        vals = np.minimum(vals, variant.R)
    return vals


def _init_node(variant: VariantSpec, x: np.ndarray, n_off: int) -> np.ndarray:
    m = max(float(x.mean()), MEAN_FLOOR)
    tag = variant.tag
    if tag == "SQR":
        head = [0.0, np.log(m)]
    elif tag == "SPGM":
        head = [np.log(m), 0.0]
    elif tag == "QPGM":
        v = max(float(x.var()), MEAN_FLOOR)
        head = [m / v, -1.0 / (2 * v)]
    else:
        head = [np.log(m)]
    return np.concatenate([head, np.zeros(n_off)])


def nodewise_regressions(
    X,
    variant: VariantSpec,
    lam_reg: float,
    *,
    row_scale: np.ndarray | None = None,
    nonpositive: bool | None = None,
    max_iter: int = MAX_ITER,
    tol: float = REL_TOL,
    init: np.ndarray | None = None,
):
    """Run the ``d`` node regressions; no symmetrization.

    Returns ``theta``, the diagonal, the asymmetric off-diagonal matrix
    (row ``i`` holds node ``i``'s neighbourhood coefficients) and the list of
    per-node results. ``init`` optionally gives a full ``(d, d)`` matrix whose
    off-diagonals warm-start the off-diagonal blocks. ``row_scale`` is either
    one weight per row or an ``(n, d)`` array whose column ``i`` scales node
    ``i``'s interactions.
    """
    if lam_reg < 0:
        raise ValueError("regularization must be non-negative")
    vals = _prepare(X, variant)
    n, d = vals.shape
    T = suffstat(variant, vals)
    scale = np.ones((n, 1)) if row_scale is None else np.asarray(row_scale, dtype=float)
    if scale.ndim == 1:
        scale = scale[:, None]
    if scale.shape[0] != n or scale.shape[1] not in (1, d):
        raise ValueError("row_scale must have shape (n,) or (n, d)")
    free = variant.tag in FREE_DIAGONAL
    if nonpositive is None:
        nonpositive = variant.tag == "PGM"
    theta = np.zeros(d)
    diag = np.zeros(d)
    off = np.zeros((d, d))
    results = []
    for i in range(d):
        others = np.delete(np.arange(d), i)
        prob = NodeProblem(
            variant=variant,
            Ti=T[:, i],
            Z=2.0 * scale[:, [min(i, scale.shape[1] - 1)]] * T[:, others],
            lam=float(lam_reg),
            free_diag=free,
            nonpositive=nonpositive,
        )
        w0 = _init_node(variant, vals[:, i], d - 1)
        if init is not None:
            w0[prob.n_head :] = np.asarray(init, dtype=float)[i, others]
        sprob, to_std, to_orig = standardized(prob)
        res = prox_gradient(sprob, to_std(w0), max_iter, tol)
        res.w = to_orig(res.w)
        results.append(res)
        theta[i] = res.w[0]
        if free:
            diag[i] = res.w[1]
        off[i, others] = res.w[prob.n_head :]
    return theta, diag, off, results


def _convergence_meta(results, lam_reg) -> dict:
    flags = [bool(r.converged) for r in results]
    meta = {
        "lambda": float(lam_reg),
        "converged": flags,
        "objectives": [float(r.objective) for r in results],
        "warnings": [],
    }
    if not all(flags):
        bad = [i for i, ok in enumerate(flags) if not ok]
        meta["warnings"].append(f"node regressions {bad} hit the iteration cap")
    return meta


def fit_nodewise(
    X,
    variant: VariantSpec,
    lam_reg: float,
    *,
    max_iter: int = MAX_ITER,
    tol: float = REL_TOL,
) -> PairwiseGMParams:
    """Fit a symmetric pairwise model by penalized node-wise regressions.

    Parameters
    ----------
    X : CountMatrix or array
        Training counts. For TPGM, entries above ``variant.R`` are clipped.
    variant : VariantSpec
    lam_reg : float
        l1 penalty on the off-diagonal interactions.

    Returns
    -------
    PairwiseGMParams
        ``Phi`` averages the two node estimates of each pair. ``meta`` records
        per-node convergence and a warning when any node hit the cap.
    """
    theta, diag, off, results = nodewise_regressions(
        X, variant, lam_reg, max_iter=max_iter, tol=tol
    )
    Phi = 0.5 * (off + off.T)
    Phi[np.diag_indices_from(Phi)] = diag
    return PairwiseGMParams(theta, Phi, variant, meta=_convergence_meta(results, lam_reg))


def reg_path(X, variant: VariantSpec | str, length: int = PATH_LENGTH) -> np.ndarray:
    """Log-spaced penalties from ``lam_max`` down to ``1e-4 lam_max``.

    ``lam_max`` is the largest off-diagonal of the empirical second-moment
    matrix; the square-root variant uses its square root. A non-positive
    ``lam_max`` falls back to 1.
    """
    vals = (X.values if isinstance(X, CountMatrix) else np.asarray(X)).astype(float)
    n, d = vals.shape
    if d < 2:
        raise ValueError("a regularization path needs at least two variables")
    M = vals.T @ vals / n
    lam_max = float(M[~np.eye(d, dtype=bool)].max())
    if not lam_max > 0:
        logger.warning("zero cross-moments; falling back to lam_max = 1")
        lam_max = 1.0
    tag = variant.tag if isinstance(variant, VariantSpec) else str(variant).upper()
    if tag == "SQR":
        lam_max = np.sqrt(lam_max)
    return np.geomspace(lam_max, PATH_RATIO * lam_max, length)


def tpgm_default_R(X) -> int:
    """99th percentile of the non-zero counts (at least 1)."""
    vals = X.values if isinstance(X, CountMatrix) else np.asarray(X)
    nz = vals[vals > 0]
    if nz.size == 0:
        return 1
    return max(1, int(np.ceil(np.percentile(nz, 99))))


@dataclass(frozen=True)
class LocalPGM:
    """Unconstrained neighbourhood regressions (no joint density).

    ``coef[i, j]`` is the coefficient of ``x_j`` in node ``i``'s log rate,
    i.e. ``log E[x_i | rest] = theta_i + sum_j coef[i, j] x_j``. ``R``, when
    set, truncates the conditionals for pseudo-Gibbs sampling.
    """

    theta: np.ndarray
    coef: np.ndarray
    R: int | None = None
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def d(self) -> int:
        return self.theta.size

    def adjacency(self, rule: str = "and") -> np.ndarray:
        return _signed_adjacency(self.coef, rule)

    def to_dict(self) -> dict:
        return {"model": "lpgm", "theta": self.theta.tolist(), "coef": self.coef.tolist(), "R": self.R}

    @classmethod
    def from_dict(cls, obj: dict) -> "LocalPGM":
        return cls(
            np.asarray(obj["theta"], dtype=float),
            np.asarray(obj["coef"], dtype=float),
            obj.get("R"),
        )


def _signed_adjacency(coef: np.ndarray, rule: str) -> np.ndarray:
    a = np.abs(coef)
    if rule == "and":
        present = np.minimum(a, a.T) > 0
    elif rule == "or":
        present = np.maximum(a, a.T) > 0
    else:
        raise ValueError(f"unknown edge rule {rule!r}")
    np.fill_diagonal(present, False)
    return np.where(present, 0.5 * (coef + coef.T), 0.0)


def lpgm_fit(X, lam_reg: float, R: int | None = None, **kw) -> LocalPGM:
    theta, _, off, results = nodewise_regressions(
        X, VariantSpec("PGM"), lam_reg, nonpositive=False, **kw
    )
    return LocalPGM(theta, 2.0 * off, R, meta=_convergence_meta(results, lam_reg))


def lpgm_structure(X, lam_reg: float, rule: str = "and") -> np.ndarray:
    """Signed, weighted adjacency from unconstrained Poisson neighbourhoods.

    An edge is kept when both node regressions select it (``rule="and"``) or
    either does (``rule="or"``); its weight is the average coefficient.
    """
    return lpgm_fit(X, lam_reg).adjacency(rule)


def edge_list_csv(W: np.ndarray, names=None) -> str:
    """``i,j,weight,sign`` rows for the upper triangle of a signed adjacency."""
    d = W.shape[0]
    names = list(names) if names is not None else [str(j) for j in range(d)]
    lines = ["i,j,weight,sign"]
    for i in range(d):
        for j in range(i + 1, d):
            if W[i, j] != 0:
                lines.append(f"{names[i]},{names[j]},{float(W[i, j])!r},{int(np.sign(W[i, j]))}")
    return "\n".join(lines) + "\n"
