"""Cross-validated benchmark: tune, refit, sample, score against held-out rows.

Every random draw is keyed by ``(seed, fold, model, grid point, purpose)``
through ``numpy.random.SeedSequence`` entropy lists, so a record depends
only on the config seed and its own coordinates. Parallel and serial runs,
or runs with a different model list, therefore give identical records.
"""

from __future__ import annotations

import json
import math
import os
import time
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core_data import CountMatrix, load_csv, make_folds, select_columns, summarize
from ..metrics import MetricMatrix, pairwise_mmd_matrix, pairwise_spearman_diff
from ..pgm import GIBBS_ITERS
from .registry import MODEL_NAMES, fit_model, get_entry, sample_model
from .synth import synth_generate

THREADS_ENV = "COUNTMODELS_THREADS"
TUNE_FRACTION = 0.75

# purpose tags mixed into the rng keys
_SPLIT, _FIT, _SAMPLE, _METRIC = 0, 1, 2, 3
_FINAL = 10**6


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run.

    ``dataset`` is a CSV path (relative paths resolve against ``base_dir``)
    or a generator spec ``{"kind", "params", "n", "seed"}``. ``models`` maps
    each registry name to an explicit grid (a list of hyperparameter dicts)
    or ``None`` for the model's default grid.
    """

    dataset: str | dict
    models: tuple[tuple[str, tuple[dict, ...] | None], ...]
    select_by: str = "mean"
    d: int | None = None
    folds: int = 3
    samples: int = 1000
    seed: int = 0
    out: str = "results"
    gibbs_iters: int = GIBBS_ITERS
    mmd_mode: str = "auto"
    tuning_metric: str = "mmd"
    tune_fraction: float = TUNE_FRACTION
    base_dir: str = "."

    def __post_init__(self):
        for name, _ in self.models:
            get_entry(name)
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.samples < 100:
            raise ValueError("samples must be at least 100")
        if self.tuning_metric not in ("mmd", "spearman"):
            raise ValueError("tuning_metric must be 'mmd' or 'spearman'")
        if self.mmd_mode not in ("auto", "exact", "rff"):
            raise ValueError("mmd_mode must be auto, exact or rff")
        if self.select_by not in ("mean", "variance"):
            raise ValueError("select_by must be 'mean' or 'variance'")
        if not 0 < self.tune_fraction < 1:
            raise ValueError("tune_fraction must lie in (0, 1)")
        if self.gibbs_iters < 1:
            raise ValueError("gibbs_iters must be positive")

    @property
    def model_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.models)

    @classmethod
    def from_dict(cls, obj: dict, base_dir: str | Path = ".") -> "ExperimentConfig":
        known = {
            "dataset", "models", "select", "folds", "samples", "seed", "out",
            "gibbs_iters", "mmd_mode", "tuning_metric", "tune_fraction",
        }
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "dataset" not in obj or "models" not in obj:
            raise ValueError("config needs 'dataset' and 'models'")
        raw = obj["models"]
        if isinstance(raw, dict):
            models = tuple(
                (name, None if spec is None or "grid" not in spec else tuple(spec["grid"]))
                for name, spec in raw.items()
            )
        else:
            models = tuple((name, None) for name in raw)
        select = obj.get("select") or {}
        kw = {k: obj[k] for k in known - {"dataset", "models", "select"} if k in obj}
        return cls(
            dataset=obj["dataset"],
            models=models,
            select_by=select.get("by", "mean"),
            d=select.get("d"),
            base_dir=str(base_dir),
            **kw,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        with open(path) as fh:
            obj = json.load(fh)
        return cls.from_dict(obj, base_dir=path.parent)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "models": {name: None if grid is None else {"grid": list(grid)} for name, grid in self.models},
            "select": {"by": self.select_by, "d": self.d},
            "folds": self.folds,
            "samples": self.samples,
            "seed": self.seed,
            "out": self.out,
            "gibbs_iters": self.gibbs_iters,
            "mmd_mode": self.mmd_mode,
            "tuning_metric": self.tuning_metric,
            "tune_fraction": self.tune_fraction,
        }


@dataclass
class ResultRecord:
    model: str
    fold: int
    status: str
    hyperparameters: dict = field(default_factory=dict)
    tuning: list = field(default_factory=list)
    mmd: MetricMatrix | None = None
    spearman_diff: MetricMatrix | None = None
    warnings: list[str] = field(default_factory=list)
    error: str | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        """JSON form; ``wall_time`` is left out so records stay reproducible."""
        return _clean(
            {
                "model": self.model,
                "fold": self.fold,
                "status": self.status,
                "hyperparameters": self.hyperparameters,
                "tuning": self.tuning,
                "mmd": None if self.mmd is None else self.mmd.to_dict(),
                "spearman_diff": None if self.spearman_diff is None else self.spearman_diff.to_dict(),
                "mean_mmd": None if self.mmd is None else self.mmd.mean(),
                "mean_spearman_diff": None if self.spearman_diff is None else self.spearman_diff.mean(),
                "warnings": self.warnings,
                "error": self.error,
            }
        )


def _clean(obj):
    """Recursively turn numpy scalars into Python ones and non-finite floats into ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def model_key(name: str) -> int:
    return zlib.crc32(name.encode())


def load_dataset(config: ExperimentConfig) -> CountMatrix:
    ds = config.dataset
    if isinstance(ds, dict):
        X = synth_generate(ds["kind"], ds.get("params", {}), int(ds["n"]), int(ds.get("seed", config.seed)))
    else:
        path = Path(ds)
        if not path.is_absolute():
            path = Path(config.base_dir) / path
        X = load_csv(path)
    if config.d is not None:
        X = select_columns(X, config.d, config.select_by)
    return X


def tuning_split(train: CountMatrix, config: ExperimentConfig, fold: int):
    """Shared by every model: the same fit/tune rows for a given fold."""
    rng = np.random.default_rng([config.seed, fold, _SPLIT])
    perm = rng.permutation(train.n)
    cut = int(round(config.tune_fraction * train.n))
    return train.rows(np.sort(perm[:cut])), train.rows(np.sort(perm[cut:]))


def _score(ref: CountMatrix, S: CountMatrix, config: ExperimentConfig, key: list[int]) -> float:
    if config.tuning_metric == "spearman":
        return pairwise_spearman_diff(ref, S).mean()
    return pairwise_mmd_matrix(ref, S, mode=config.mmd_mode, seed=_seed(key + [_METRIC])).mean()


def run_task(config: ExperimentConfig, X: CountMatrix, name: str, grid, fold: int) -> ResultRecord:
    """Tune (when the grid has several points), refit on the training fold, evaluate."""
    t0 = time.perf_counter()
    split = make_folds(X.n, config.folds, config.seed)
    train = X.rows(split.train_index(fold))
    test = X.rows(split.test_index(fold))
    mk = model_key(name)
    notes: set[str] = set()
    record = ResultRecord(name, fold, "failed")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            grid = list(grid) if grid is not None else get_entry(name).grid(train)
            chosen = dict(grid[0])
            if len(grid) > 1:
                fit_part, tune_part = tuning_split(train, config, fold)
                scores = []
                for g, hyper in enumerate(grid):
                    key = [config.seed, fold, mk, g]
                    try:
                        fitted = fit_model(name, fit_part, dict(hyper), seed=_seed(key + [_FIT]))
                        S = sample_model(
                            fitted, config.samples, np.random.default_rng(key + [_SAMPLE]), config.gibbs_iters
                        )
                        score = _score(tune_part, S, config, key)
                    except Exception as exc:  # a failing grid point just loses
                        notes.add(f"grid point {hyper} failed: {type(exc).__name__}: {exc}")
                        score = math.inf
                    scores.append(score)
                    record.tuning.append({"hyper": dict(hyper), "score": score})
                if not np.isfinite(scores).any():
                    raise RuntimeError("every grid point failed during tuning")
                chosen = dict(grid[int(np.argmin(scores))])
            key = [config.seed, fold, mk, _FINAL]
            fitted = fit_model(name, train, chosen, seed=_seed(key + [_FIT]))
            S = sample_model(fitted, config.samples, np.random.default_rng(key + [_SAMPLE]), config.gibbs_iters)
            metric_seed = _seed(key + [_METRIC])
            record.mmd = pairwise_mmd_matrix(test, S, mode=config.mmd_mode, seed=metric_seed)
            record.spearman_diff = pairwise_spearman_diff(test, S)
            record.hyperparameters = fitted.hyper
            notes.update(fitted.warnings)
            record.status = "ok"
        notes.update(f"{w.category.__name__}: {w.message}" for w in caught)
    except Exception as exc:
        record.error = f"{type(exc).__name__}: {exc}"
    record.warnings = sorted(notes)
    record.wall_time = time.perf_counter() - t0
    return record


def _seed(key: list[int]) -> int:
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, threads)


def _task_args(config: ExperimentConfig, X: CountMatrix):
    return [
        (config, X, name, grid, fold)
        for name, grid in config.models
        for fold in range(1, config.folds + 1)
    ]


def _run_star(args):
    return run_task(*args)


@dataclass
class BenchmarkResult:
    config: ExperimentConfig
    records: list[ResultRecord]
    dataset: CountMatrix

    def summary_rows(self) -> list[dict]:
        rows = []
        for name in self.config.model_names:
            recs = [r for r in self.records if r.model == name]
            ok = [r for r in recs if r.status == "ok"]
            rows.append(
                {
                    "model": name,
                    "folds_ok": len(ok),
                    "mean_mmd": float(np.mean([r.mmd.mean() for r in ok])) if ok else math.nan,
                    "mean_spearman_diff": float(np.nanmean([r.spearman_diff.mean() for r in ok])) if ok else math.nan,
                }
            )
        return rows

    def summary(self) -> dict:
        models = {}
        for name in self.config.model_names:
            ok = [r for r in self.records if r.model == name and r.status == "ok"]
            entry = {
                "folds_ok": len(ok),
                "errors": [r.error for r in self.records if r.model == name and r.error],
                "hyperparameters": [r.hyperparameters for r in self.records if r.model == name],
            }
            if ok:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    entry["mmd"] = np.mean([r.mmd.values for r in ok], axis=0)
                    entry["spearman_diff"] = np.nanmean([r.spearman_diff.values for r in ok], axis=0)
                entry["mean_mmd"] = float(np.mean([r.mmd.mean() for r in ok]))
                entry["mean_spearman_diff"] = float(np.nanmean([r.spearman_diff.mean() for r in ok]))
            models[name] = entry
        return {"config": self.config.to_dict(), "columns": list(self.dataset.column_names), "models": models}

    def summary_csv(self) -> str:
        lines = ["model,folds_ok,mean_mmd,mean_spearman_diff"]
        for row in self.summary_rows():
            vals = [_fmt(row["mean_mmd"]), _fmt(row["mean_spearman_diff"])]
            lines.append(f"{row['model']},{row['folds_ok']},{vals[0]},{vals[1]}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> Path:
        """Write records, summaries and (separately) wall-clock timings."""
        out = Path(out_dir)
        (out / "records").mkdir(parents=True, exist_ok=True)
        for r in self.records:
            (out / "records" / f"{r.model}__fold{r.fold}.json").write_text(dumps(r.to_dict()))
        (out / "summary.json").write_text(dumps(self.summary()))
        (out / "summary.csv").write_text(self.summary_csv())
        (out / "dataset_summary.json").write_text(dumps(summarize(self.dataset).to_dict()))
        timings = {f"{r.model}__fold{r.fold}": round(r.wall_time, 3) for r in self.records}
        (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
        return out


def _fmt(v: float) -> str:
    return "" if not math.isfinite(v) else repr(float(v))


def run_benchmark(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    threads: int | None = None,
) -> BenchmarkResult:
    """Run every (model, fold) task and optionally write the result set.

    ``threads`` (default: the ``COUNTMODELS_THREADS`` environment variable,
    else 1) sets the number of worker processes; results do not depend on it.
    """
    X = load_dataset(config)
    tasks = _task_args(config, X)
    n_workers = min(_threads(threads), len(tasks)) if tasks else 1
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(_run_star, tasks))
    else:
        records = [run_task(*t) for t in tasks]
    result = BenchmarkResult(config, records, X)
    if out_dir is not None:
        result.write(out_dir)
    return result


__all__ = [
    "BenchmarkResult",
    "ExperimentConfig",
    "MODEL_NAMES",
    "ResultRecord",
    "load_dataset",
    "run_benchmark",
    "run_task",
    "tuning_split",
]
