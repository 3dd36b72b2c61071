"""Model registry: how each benchmarked model is fitted, sampled and stored."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..copula_poisson import GaussianCopulaPoisson, fit_ifm
from ..core_data import CountMatrix
from ..mixtures import FiniteMixturePoisson, LogNormalPoisson, fm_fit_em, ln_fit_moments
from ..pgm import (
    GIBBS_ITERS,
    LocalPGM,
    PairwiseGMParams,
    VariantSpec,
    fit_nodewise,
    flpgm_fit_heuristic,
    flpgm_sample,
    gibbs_sample,
    lpgm_fit,
    lpgm_sample,
    reg_path,
    tpgm_default_R,
)

MIXTURE_GRID = tuple(range(10, 101, 10))
HIGH_D = 1000
HIGH_D_K = 50
DEFAULT_K = 10


@dataclass(frozen=True)
class IndependentPoisson:
    lam: np.ndarray

    def to_dict(self) -> dict:
        return {"lambda": np.asarray(self.lam).tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "IndependentPoisson":
        return cls(np.asarray(obj["lambda"], dtype=float))


@dataclass
class Fitted:
    """A fitted model plus the hyperparameters and warnings behind it."""

    name: str
    model: Any
    hyper: dict
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"model": self.name, "hyper": self.hyper, "params": self.model.to_dict()}


@dataclass(frozen=True)
class ModelEntry:
    """``grid(train)`` lists candidate hyperparameters; ``fit(train, hyper,
    seed)`` returns the model; ``sample(model, n, rng, gibbs_iters)`` draws
    rows; ``load`` rebuilds a model from its ``to_dict`` form."""

    name: str
    grid: Callable[[CountMatrix], list[dict]]
    fit: Callable[[CountMatrix, dict, int], Any]
    sample: Callable[[Any, int, np.random.Generator, int], CountMatrix]
    load: Callable[[dict], Any]


def _no_grid(train: CountMatrix) -> list[dict]:
    return [{}]


def _mixture_grid(train: CountMatrix) -> list[dict]:
    if train.d >= HIGH_D:
        return [{"k": HIGH_D_K}]
    return [{"k": k} for k in MIXTURE_GRID if k <= train.n]


def _path_grid(tag: str):
    def grid(train: CountMatrix) -> list[dict]:
        return [{"lambda": float(lam)} for lam in reg_path(train, tag)]

    return grid


def _ind_fit(train, hyper, seed):
    return IndependentPoisson(train.values.mean(axis=0))


def _ind_sample(model, n, rng, iters):
    return CountMatrix(rng.poisson(model.lam, size=(n, model.lam.size)))


def _copula_fit(train, hyper, seed):
    return fit_ifm(train, hyper.get("transform", "DT"), rng=np.random.default_rng(seed))


def _mixture_fit(train, hyper, seed):
    return fm_fit_em(train, int(hyper.get("k", DEFAULT_K)), seed)


def _pairwise_fit(tag: str):
    def fit(train, hyper, seed):
        lam = float(hyper["lambda"]) if "lambda" in hyper else float(reg_path(train, tag)[5])
        if tag == "TPGM":
            R = int(hyper.get("R", tpgm_default_R(train)))
            hyper.setdefault("R", R)
            variant = VariantSpec("TPGM", R=R)
        else:
            variant = VariantSpec(tag)
        hyper.setdefault("lambda", lam)
        return fit_nodewise(train, variant, lam)

    return fit


def _pairwise_sample(model, n, rng, iters):
    return gibbs_sample(model, n, iters=iters, rng=rng)


def _flpgm_fit(train, hyper, seed):
    lam = float(hyper["lambda"]) if "lambda" in hyper else float(reg_path(train, "PGM")[5])
    hyper.setdefault("lambda", lam)
    return flpgm_fit_heuristic(train, lam, omega=hyper.get("omega", "inverse_length"))


def _flpgm_sample(model, n, rng, iters):
    return flpgm_sample(model, n, rng)


def _lpgm_fit(train, hyper, seed):
    lam = float(hyper["lambda"]) if "lambda" in hyper else float(reg_path(train, "PGM")[5])
    hyper.setdefault("lambda", lam)
    R = int(hyper.get("R", tpgm_default_R(train)))
    hyper.setdefault("R", R)
    return lpgm_fit(train, lam, R=R)


def _lpgm_sample(model, n, rng, iters):
    return lpgm_sample(model, n, iters=iters, rng=rng)


REGISTRY: dict[str, ModelEntry] = {
    "ind_poisson": ModelEntry("ind_poisson", _no_grid, _ind_fit, _ind_sample, IndependentPoisson.from_dict),
    "copula_poisson": ModelEntry(
        "copula_poisson", _no_grid, _copula_fit, lambda m, n, rng, it: m.sample(n, rng),
        GaussianCopulaPoisson.from_dict,
    ),
    "mixture_poiss": ModelEntry(
        "mixture_poiss", _mixture_grid, _mixture_fit, lambda m, n, rng, it: m.sample(n, rng),
        FiniteMixturePoisson.from_dict,
    ),
    "log_normal": ModelEntry(
        "log_normal", _no_grid, lambda tr, h, s: ln_fit_moments(tr),
        lambda m, n, rng, it: m.sample(n, rng), LogNormalPoisson.from_dict,
    ),
    "pgm": ModelEntry("pgm", _path_grid("PGM"), _pairwise_fit("PGM"), _pairwise_sample, PairwiseGMParams.from_dict),
    "tpgm": ModelEntry("tpgm", _path_grid("TPGM"), _pairwise_fit("TPGM"), _pairwise_sample, PairwiseGMParams.from_dict),
    "flpgm_poisson": ModelEntry(
        "flpgm_poisson", _path_grid("PGM"), _flpgm_fit, _flpgm_sample, PairwiseGMParams.from_dict
    ),
    "poisson_sqr": ModelEntry(
        "poisson_sqr", _path_grid("SQR"), _pairwise_fit("SQR"), _pairwise_sample, PairwiseGMParams.from_dict
    ),
    "lpgm": ModelEntry("lpgm", _path_grid("PGM"), _lpgm_fit, _lpgm_sample, LocalPGM.from_dict),
}

MODEL_NAMES = tuple(REGISTRY)


def get_entry(name: str) -> ModelEntry:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}") from None


def fit_model(name: str, train: CountMatrix, hyper: dict | None = None, seed: int = 0) -> Fitted:
    """Fit one registry model; ``hyper`` is completed with any defaults used."""
    entry = get_entry(name)
    hyper = dict(hyper or {})
    model = entry.fit(train, hyper, seed)
    meta = getattr(model, "meta", None) or {}
    return Fitted(name, model, hyper, list(meta.get("warnings", [])))


def sample_model(fitted: Fitted, n: int, rng: np.random.Generator, gibbs_iters: int = GIBBS_ITERS) -> CountMatrix:
    return get_entry(fitted.name).sample(fitted.model, n, rng, gibbs_iters)


def load_fitted(obj: dict) -> Fitted:
    entry = get_entry(obj["model"])
    return Fitted(entry.name, entry.load(obj["params"]), dict(obj.get("hyper", {})))
