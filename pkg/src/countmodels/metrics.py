"""Pairwise evaluation metrics: kernel-bank MMD and Spearman's rho difference."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .core_data import CountMatrix

AUTO_RFF_THRESHOLD = 4_000_000


@dataclass(frozen=True)
class KernelBank:
    """Gaussian kernel widths, log-spaced; plus the random-feature count."""

    n_sigmas: int = 21
    sigma_min: float = 0.01
    sigma_max: float = 100.0
    n_features: int = 64

    @property
    def sigmas(self) -> np.ndarray:
        return np.geomspace(self.sigma_min, self.sigma_max, self.n_sigmas)


DEFAULT_BANK = KernelBank()


@dataclass(frozen=True)
class MetricMatrix:
    values: np.ndarray
    metric: str  # "MMD" or "SpearmanDiff"
    column_names: tuple[str, ...] = field(default=())

    def mean(self) -> float:
        return float(np.nanmean(self.values))

    def to_dict(self) -> dict:
        vals = [[None if not np.isfinite(v) else float(v) for v in row] for row in self.values]
        out = {"metric": self.metric, "values": vals}
        if self.column_names:
            out["columns"] = list(self.column_names)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricMatrix":
        vals = np.array([[np.nan if v is None else v for v in row] for row in obj["values"]], dtype=float)
        return cls(vals, obj["metric"], tuple(obj.get("columns", ())))

    def to_csv(self) -> str:
        d = self.values.shape[0]
        names = self.column_names or tuple(str(j) for j in range(d))
        lines = ["s,t,value"]
        for s in range(d):
            for t in range(d):
                v = self.values[s, t]
                lines.append(f"{names[s]},{names[t]},{'' if not np.isfinite(v) else repr(float(v))}")
        return "\n".join(lines) + "\n"


def _as_2d(a) -> np.ndarray:
    a = a.values if isinstance(a, CountMatrix) else np.asarray(a)
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def _compress(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique rows and their empirical weights."""
    u, counts = np.unique(a, axis=0, return_counts=True)
    return u, counts / a.shape[0]


def _sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)


def _kernel_mean(D: np.ndarray, wa: np.ndarray, wb: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """``wa^T K_sigma wb`` for each width."""
    return np.array([wa @ np.exp(-D / (2 * s**2)) @ wb for s in sigmas])


def mmd_per_bandwidth(X, Y, bank: KernelBank = DEFAULT_BANK) -> np.ndarray:
    """Biased squared MMD for each kernel width (exact)."""
    ux, wx = _compress(_as_2d(X))
    uy, wy = _compress(_as_2d(Y))
    s = bank.sigmas
    kxx = _kernel_mean(_sqdist(ux, ux), wx, wx, s)
    kyy = _kernel_mean(_sqdist(uy, uy), wy, wy, s)
    kxy = _kernel_mean(_sqdist(ux, uy), wx, wy, s)
    return kxx + kyy - 2 * kxy


def mmd_rff_per_bandwidth(X, Y, bank: KernelBank = DEFAULT_BANK, seed: int = 0) -> np.ndarray:
    """Squared MMD under random Fourier features shared by both samples."""
    ux, wx = _compress(_as_2d(X))
    uy, wy = _compress(_as_2d(Y))
    dim = ux.shape[1]
    D = bank.n_features
    out = np.empty(bank.n_sigmas)
    for k, sigma in enumerate(bank.sigmas):
        rng = np.random.default_rng([seed, k])
        W = rng.standard_normal((dim, D)) / sigma
        b = rng.uniform(0, 2 * np.pi, D)
        fx = wx @ np.cos(ux @ W + b)
        fy = wy @ np.cos(uy @ W + b)
        out[k] = (2.0 / D) * np.sum((fx - fy) ** 2)
    return out


def mmd(X, Y, bank: KernelBank = DEFAULT_BANK, mode: str = "auto", seed: int = 0) -> float:
    """Max over the kernel bank of the biased MMD between two samples.

    ``mode`` is ``"exact"``, ``"rff"`` or ``"auto"``; auto switches to random
    features once ``n1 * n2`` exceeds four million.
    """
    X = _as_2d(X)
    Y = _as_2d(Y)
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise ValueError("MMD needs two non-empty samples")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if mode == "auto":
        mode = "rff" if X.shape[0] * Y.shape[0] > AUTO_RFF_THRESHOLD else "exact"
    if mode == "exact":
        m2 = mmd_per_bandwidth(X, Y, bank)
    elif mode == "rff":
        m2 = mmd_rff_per_bandwidth(X, Y, bank, seed)
    else:
        raise ValueError(f"unknown MMD mode {mode!r}")
    return float(np.sqrt(np.maximum(m2, 0.0)).max())


def pairwise_mmd_matrix(
    X, Xhat, bank: KernelBank = DEFAULT_BANK, mode: str = "auto", seed: int = 0
) -> MetricMatrix:
    """Univariate MMD on the diagonal, bivariate MMD of column pairs elsewhere."""
    names = X.column_names if isinstance(X, CountMatrix) else ()
    A = _as_2d(X)
    B = _as_2d(Xhat)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d = A.shape[1]
    out = np.zeros((d, d))
    for s in range(d):
        for t in range(s, d):
            cols = [s] if s == t else [s, t]
            out[s, t] = out[t, s] = mmd(A[:, cols], B[:, cols], bank, mode, seed)
    return MetricMatrix(out, "MMD", names)


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError("spearman needs equal-length inputs")
    if x.size < 2:
        raise ValueError("spearman needs at least two observations")
    rx = rankdata(x)
    ry = rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    den = np.sqrt((rx @ rx) * (ry @ ry))
    if den == 0:
        raise ValueError("spearman correlation undefined for a constant input")
    return float(np.clip((rx @ ry) / den, -1.0, 1.0))


def spearman_matrix(X) -> np.ndarray:
    """Spearman matrix of the columns; NaN rows/columns for constant columns."""
    A = _as_2d(X)
    R = rankdata(A, axis=0)
    R -= R.mean(axis=0)
    ss = np.sqrt((R**2).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (R.T @ R) / np.outer(ss, ss)
    const = ss == 0
    out[const, :] = np.nan
    out[:, const] = np.nan
    return np.clip(out, -1.0, 1.0)


def pairwise_spearman_diff(X, Xhat) -> MetricMatrix:
    names = X.column_names if isinstance(X, CountMatrix) else ()
    A = _as_2d(X)
    B = _as_2d(Xhat)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return MetricMatrix(np.abs(spearman_matrix(A) - spearman_matrix(B)), "SpearmanDiff", names)
