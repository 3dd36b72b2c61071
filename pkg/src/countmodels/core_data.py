"""Count datasets: CSV ingestion, summary statistics and cross-validation folds."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised when a dataset violates the count-matrix schema."""


@dataclass(frozen=True)
class CountMatrix:
    """An ``n x d`` table of non-negative integer observations.

    The underlying array is stored read-only so that instances can be shared
    freely between tasks.
    """

    values: np.ndarray
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DataError(f"expected a 2-D array, got shape {arr.shape}")
        n, d = arr.shape
        if n < 1 or d < 1:
            raise DataError("empty data: a count matrix needs n >= 1 and d >= 1")
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
                raise DataError("count matrix entries must be integer-valued")
        elif arr.dtype.kind not in "iub":
            raise DataError(f"unsupported dtype {arr.dtype}")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            r, c = np.argwhere(arr < 0)[0]
            raise DataError(f"negative count at row {r}, column {c}")
        arr.setflags(write=False)
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(d))
        if len(names) != d:
            raise DataError(f"{len(names)} column names for {d} columns")
        if len(set(names)) != d:
            raise DataError("column names must be distinct")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def rows(self, idx) -> "CountMatrix":
        return CountMatrix(self.values[idx], self.column_names)

    def columns(self, idx: Sequence[int]) -> "CountMatrix":
        idx = list(idx)
        return CountMatrix(self.values[:, idx], tuple(self.column_names[j] for j in idx))


def load_csv(path: str | Path) -> CountMatrix:
    """Read a headered, comma-separated file of non-negative integer counts."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (no header)") from None
        header = [h.strip() for h in header]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno} has {len(row)} cells, header has {len(header)}"
                )
            parsed = []
            for j, cell in enumerate(row):
                cell = cell.strip()
                try:
                    v = int(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: line {lineno}, column {header[j]!r}: "
                        f"{cell!r} is not an integer"
                    ) from None
                if v < 0:
                    raise DataError(
                        f"{path}: line {lineno}, column {header[j]!r}: "
                        f"negative count {v}"
                    )
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: empty data section")
    return CountMatrix(np.array(rows, dtype=np.int64), tuple(header))


def to_csv_text(X: CountMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(X.column_names)
    writer.writerows(X.values.tolist())
    return buf.getvalue()


def write_csv(X: CountMatrix, path: str | Path) -> None:
    Path(path).write_text(to_csv_text(X), encoding="utf-8")


def dispersion_index(column) -> float:
    """Sample variance (``n - 1`` denominator) over sample mean.

    Raises
    ------
    DataError
        If the column is empty or has zero mean, where the index is undefined.
    """
    x = np.asarray(column, dtype=float)
    if x.size == 0:
        raise DataError("dispersion index of an empty column")
    m = x.mean()
    if m <= 0:
        raise DataError("dispersion index undefined for a zero-mean column")
    if x.size == 1:
        return 0.0
    return float(x.var(ddof=1) / m)


def _min_med_max(v: np.ndarray) -> list[float]:
    v = v[np.isfinite(v)]
    if v.size == 0:
        return [math.nan] * 3
    return [float(v.min()), float(np.median(v)), float(v.max())]


@dataclass(frozen=True)
class DatasetSummary:
    means: np.ndarray
    dispersions: np.ndarray  # NaN marks undefined (zero-mean column)
    spearman: np.ndarray
    column_names: tuple[str, ...]

    @property
    def min_med_max(self) -> dict[str, list[float]]:
        d = self.spearman.shape[0]
        off = self.spearman[~np.eye(d, dtype=bool)]
        return {
            "means": _min_med_max(self.means),
            "dispersions": _min_med_max(self.dispersions),
            "spearman": _min_med_max(off) if d > 1 else [math.nan] * 3,
        }

    def to_dict(self) -> dict:
        return {
            "columns": list(self.column_names),
            "means": _jsonable(self.means),
            "dispersions": _jsonable(self.dispersions),
            "spearman": _jsonable(self.spearman),
            "min_med_max": {k: _jsonable(np.array(v)) for k, v in self.min_med_max.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "min", "med", "max"])
        for k, v in self.min_med_max.items():
            w.writerow([k] + [_fmt(x) for x in v])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return "" if not np.isfinite(x) else repr(float(x))


def _jsonable(a: np.ndarray):
    """Nested lists with NaN rendered as ``None``."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return None if not np.isfinite(a) else float(a)
    return [_jsonable(v) for v in a]


def summarize(X: CountMatrix) -> DatasetSummary:
    from .metrics import spearman_matrix

    vals = X.values.astype(float)
    means = vals.mean(axis=0)
    disp = np.full(X.d, np.nan)
    for j in range(X.d):
        if means[j] > 0:
            disp[j] = dispersion_index(vals[:, j])
    rho = spearman_matrix(vals) if X.n >= 2 else np.full((X.d, X.d), np.nan)
    np.fill_diagonal(rho, 1.0)
    return DatasetSummary(means, disp, rho, X.column_names)


def select_columns(X: CountMatrix, d: int, by: str = "mean") -> CountMatrix:
    """Keep the ``d`` columns with largest mean (or variance), in that order."""
    if by not in ("mean", "variance"):
        raise ValueError(f"unknown selection rule {by!r}")
    if d >= X.d:
        return X
    vals = X.values.astype(float)
    score = vals.mean(axis=0) if by == "mean" else vals.var(axis=0, ddof=1)
    order = np.argsort(-score, kind="stable")[:d]
    return X.columns(order)


@dataclass(frozen=True)
class FoldSplit:
    k: int
    assignments: np.ndarray  # labels in 1..k
    seed: int

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def make_folds(n: int, k: int, seed: int) -> FoldSplit:
    """Balanced random partition of ``range(n)`` into ``k`` folds."""
    if k < 2:
        raise ValueError("need at least two folds")
    if k > n:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    labels = np.empty(n, dtype=np.int64)
    labels[perm] = np.arange(n) % k + 1
    labels.setflags(write=False)
    return FoldSplit(k, labels, seed)
