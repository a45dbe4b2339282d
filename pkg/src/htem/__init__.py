"""Bayesian variable selection with a hyperbolic / Student-t error mixture.

Spike-and-slab linear regression whose errors are a normal scale mixture
drawn either from a hyperbolic or from a Student-t law, with the family
chosen by the data. Fitting is by Gibbs sampling with an MC3 model move.
"""

__version__ = "0.1.0"

from .inference import PosteriorSummary, bf_threshold, prediction_interval, predictive_draws, select_variables, summarize
from .sampler import ChainConfig, ChainTrace, Hyperparameters, ModelState, run_chain

__all__ = [
    "ChainConfig",
    "ChainTrace",
    "Hyperparameters",
    "ModelState",
    "PosteriorSummary",
    "bf_threshold",
    "prediction_interval",
    "predictive_draws",
    "run_chain",
    "select_variables",
    "summarize",
]
