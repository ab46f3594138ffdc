"""Discrete Laplace method for Y-STR haplotype frequency estimation.

Distribution math (:mod:`.disclap`), mixture fitting and prediction
(:mod:`.mixture`), a forward Fisher-Wright simulator (:mod:`.fwsim`) and
dataset construction / evaluation helpers (:mod:`.dataset`).
"""
from .dataset import (
    EvaluationTable,
    SampledDataset,
    evaluation_table,
    sample_dataset,
    sample_mixture,
    singleton_proportion,
)
from .disclap import DiscreteLaplace, SingleSampleMle, mle
from .fwsim import ExtinctionError, HaplotypeTable, SimParams, shift_locations, simulate
from .kernels import BACKEND
from .mixture import (
    FitError,
    FitOptions,
    FitReport,
    MixtureModel,
    fit,
    fit_sweep,
    haplotype_log_density,
    init_centers,
    predict,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DiscreteLaplace",
    "EvaluationTable",
    "ExtinctionError",
    "FitError",
    "FitOptions",
    "FitReport",
    "HaplotypeTable",
    "MixtureModel",
    "SampledDataset",
    "SimParams",
    "SingleSampleMle",
    "evaluation_table",
    "fit",
    "fit_sweep",
    "haplotype_log_density",
    "init_centers",
    "mle",
    "predict",
    "sample_dataset",
    "sample_mixture",
    "shift_locations",
    "simulate",
    "singleton_proportion",
]
