"""Multivariate count distributions built from the Poisson.

Submodules cover univariate Poisson and negative binomial laws, classic
latent-sum multivariate Poissons, Gaussian-copula Poissons, Poisson
mixtures, the Poisson graphical-model family and the benchmark harness.
"""

from .core_data import CountMatrix, DataError, load_csv, make_folds, summarize, write_csv

__version__ = "0.1.0"

__all__ = ["CountMatrix", "DataError", "load_csv", "make_folds", "summarize", "write_csv", "__version__"]
