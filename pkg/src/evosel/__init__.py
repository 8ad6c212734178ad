"""GA toolkit for descriptor-subset selection under nine selection/survival
strategy pairings, with no-selection equilibrium simulation and extreme-value
statistics of run observables."""

from .dataset import Dataset, SynthResult, dataset_digest, load_dataset, synth_dataset, write_dataset
from .ga import (
    ALL_STRATEGY_PAIRS,
    GaConfig,
    Genotype,
    Individual,
    RunRecord,
    Strategy,
    StrategyPair,
    evaluate,
    run,
)
from .regress import RegressionModel, fit_mlr, loo_q2

__all__ = [
    "ALL_STRATEGY_PAIRS",
    "Dataset",
    "GaConfig",
    "Genotype",
    "Individual",
    "RegressionModel",
    "RunRecord",
    "Strategy",
    "StrategyPair",
    "SynthResult",
    "dataset_digest",
    "evaluate",
    "fit_mlr",
    "load_dataset",
    "loo_q2",
    "run",
    "synth_dataset",
    "write_dataset",
]

__version__ = "0.1.0"
