"""Benchmark harness: model registry, synthetic generators, CV runner and CLI."""

from .registry import MODEL_NAMES, REGISTRY, Fitted, IndependentPoisson, fit_model, load_fitted, sample_model
from .runner import BenchmarkResult, ExperimentConfig, ResultRecord, load_dataset, run_benchmark
from .synth import SYNTH_KINDS, extreme_lognormal_sigma, synth_generate

__all__ = [
    "MODEL_NAMES",
    "REGISTRY",
    "SYNTH_KINDS",
    "BenchmarkResult",
    "ExperimentConfig",
    "Fitted",
    "IndependentPoisson",
    "ResultRecord",
    "extreme_lognormal_sigma",
    "fit_model",
    "load_dataset",
    "load_fitted",
    "run_benchmark",
    "sample_model",
    "synth_generate",
]
