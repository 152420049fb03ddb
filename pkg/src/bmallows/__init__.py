"""Bayesian inference for Mallows rank models."""

from .partition import LogPartitionTable, build_table
from .ranking import ItemCatalog, Metric
from .sampler import PosteriorSamples, Priors, Tuning, run_chain

__version__ = "0.1.0"

__all__ = ["ItemCatalog", "LogPartitionTable", "Metric", "PosteriorSamples", "Priors",
           "Tuning", "build_table", "run_chain", "__version__"]
