"""Command-line entry point: ``countmodels {fit,sample,evaluate,benchmark,summarize}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..core_data import load_csv, summarize, to_csv_text
from ..metrics import pairwise_mmd_matrix, pairwise_spearman_diff
from ..pgm import GIBBS_ITERS
from .registry import MODEL_NAMES, fit_model, load_fitted, sample_model
from .runner import ExperimentConfig, dumps, run_benchmark


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs: list[str] | None) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ValueError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = _parse_value(v)
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_fit(args) -> int:
    X = load_csv(args.dataset)
    fitted = fit_model(args.model, X, _params(args.param), seed=args.seed)
    obj = fitted.to_dict()
    obj["columns"] = list(X.column_names)
    _emit(dumps(obj), args.out)
    return 0


def cmd_sample(args) -> int:
    with open(args.model_file) as fh:
        obj = json.load(fh)
    fitted = load_fitted(obj)
    S = sample_model(fitted, args.n, np.random.default_rng(args.seed), args.gibbs_iters)
    if obj.get("columns"):
        from ..core_data import CountMatrix

        S = CountMatrix(S.values, tuple(obj["columns"]))
    _emit(to_csv_text(S), args.out)
    return 0


def cmd_evaluate(args) -> int:
    A = load_csv(args.a)
    B = load_csv(args.b)
    mmd = pairwise_mmd_matrix(A, B, mode=args.mode, seed=args.seed)
    rho = pairwise_spearman_diff(A, B)
    _emit(dumps({"MMD": mmd.to_dict(), "SpearmanDiff": rho.to_dict()}), args.out)
    return 0


def cmd_benchmark(args) -> int:
    cfg_path = Path(args.config_file or args.config)
    with open(cfg_path) as fh:
        obj = json.load(fh)
    for key in ("seed", "folds"):
        if getattr(args, key) is not None:
            obj[key] = getattr(args, key)
    if args.mode is not None:
        obj["mmd_mode"] = args.mode
    config = ExperimentConfig.from_dict(obj, base_dir=cfg_path.parent)
    out = Path(args.out) if args.out else cfg_path.parent / config.out
    result = run_benchmark(config, out)
    sys.stdout.write(result.summary_csv())
    failed = [r for r in result.records if r.status != "ok"]
    for r in failed:
        print(f"{r.model} fold {r.fold} failed: {r.error}", file=sys.stderr)
    return 0


def cmd_summarize(args) -> int:
    target = Path(args.target)
    if target.is_dir():
        summary = target / "summary.csv"
        if not summary.exists():
            raise FileNotFoundError(f"no summary.csv in {target}")
        _emit(summary.read_text(), args.out)
    else:
        X = load_csv(target)
        _emit(summarize(X).to_json() + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="countmodels", description="Multivariate count models and benchmark.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a registry model to a CSV dataset")
    f.add_argument("--dataset", required=True)
    f.add_argument("--model", required=True, choices=MODEL_NAMES)
    f.add_argument("--param", action="append", metavar="KEY=VALUE", help="hyperparameter (repeatable)")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("sample", help="draw rows from a fitted model file")
    s.add_argument("model_file")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gibbs-iters", type=int, default=GIBBS_ITERS)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("evaluate", help="pairwise MMD and Spearman difference of two CSVs")
    e.add_argument("a")
    e.add_argument("b")
    e.add_argument("--mode", choices=("auto", "exact", "rff"), default="auto")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("benchmark", help="run a cross-validated benchmark from a JSON config")
    b.add_argument("config_file", nargs="?")
    b.add_argument("--config")
    b.add_argument("--seed", type=int)
    b.add_argument("--folds", type=int)
    b.add_argument("--mode", choices=("auto", "exact", "rff"))
    b.add_argument("--out")
    b.set_defaults(func=cmd_benchmark)

    m = sub.add_parser("summarize", help="aggregate a results directory, or summarize a dataset CSV")
    m.add_argument("target")
    m.add_argument("--out")
    m.set_defaults(func=cmd_summarize)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "benchmark" and not (args.config_file or args.config):
        parser.error("benchmark needs a config file")
    try:
        return args.func(args)
    except Exception as exc:
        print(f"countmodels {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
