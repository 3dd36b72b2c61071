"""Poisson graphical models: PGM, TPGM, QPGM, SPGM, SQR, FLPGM and LPGM."""

from .fit import (
    LocalPGM,
    edge_list_csv,
    fit_nodewise,
    lpgm_fit,
    lpgm_structure,
    nodewise_regressions,
    reg_path,
    tpgm_default_R,
)
from .flpgm import (
    compositions,
    flpgm_fit_heuristic,
    flpgm_log_normalizer,
    flpgm_logpmf,
    flpgm_logpmf_given_length,
    flpgm_sample,
)
from .gibbs import GIBBS_ITERS, gibbs_chains, gibbs_sample, lpgm_sample
from .node import node_logpartition, node_moments, node_support, sample_node
from .params import (
    DivergenceError,
    PairwiseGMParams,
    VariantSpec,
    spgm_suffstat,
    suffstat,
    unnorm_logdensity,
)

__all__ = [
    "DivergenceError",
    "GIBBS_ITERS",
    "LocalPGM",
    "PairwiseGMParams",
    "VariantSpec",
    "compositions",
    "edge_list_csv",
    "fit_nodewise",
    "flpgm_fit_heuristic",
    "flpgm_log_normalizer",
    "flpgm_logpmf",
    "flpgm_logpmf_given_length",
    "flpgm_sample",
    "gibbs_chains",
    "gibbs_sample",
    "lpgm_fit",
    "lpgm_sample",
    "lpgm_structure",
    "node_logpartition",
    "node_moments",
    "node_support",
    "nodewise_regressions",
    "reg_path",
    "sample_node",
    "spgm_suffstat",
    "suffstat",
    "tpgm_default_R",
    "unnorm_logdensity",
]
