"""Robust low-rank matrix recovery with weakly convex losses.

The main solver minimises a robust loss of the residuals ``y - A(X)`` over
matrices of bounded rank whose nonzero singular values stay above a floor,
using projected gradient steps on a smoothed surrogate. Two baselines and a
synthetic benchmark harness are included.
"""

from .baselines import (FactoredModelConfig, NuclearModelConfig, factored_subgradient,
                        nuclear_dca)
from .bench import ExperimentSpec, compute_rmse, generate_instance, run_experiment
from .datasets import make_instance
from .estimators import FactoredSubgradient, NuclearDCA, ProjectedVariableSmoothing
from .exceptions import (DegenerateInputError, DimensionError, NumericalFailureError,
                         ParameterError, PreconditionError, ProxLRError)
from .geometry import SpectralSet
from .losses import AbsoluteLoss, MCPLoss, SCADLoss, SeparableLoss, parse_loss
from .operators import GroundTruth, Observation, SensingOperator, load_observation, \
    save_observation
from .pvs import SolverConfig, SolverTrace, solve_proposed

__version__ = "0.1.0"

__all__ = [
    "ProjectedVariableSmoothing",
    "FactoredSubgradient",
    "NuclearDCA",
    "SensingOperator",
    "Observation",
    "GroundTruth",
    "save_observation",
    "load_observation",
    "AbsoluteLoss",
    "SCADLoss",
    "MCPLoss",
    "SeparableLoss",
    "parse_loss",
    "SpectralSet",
    "SolverConfig",
    "SolverTrace",
    "solve_proposed",
    "FactoredModelConfig",
    "NuclearModelConfig",
    "factored_subgradient",
    "nuclear_dca",
    "make_instance",
    "ExperimentSpec",
    "generate_instance",
    "compute_rmse",
    "run_experiment",
    "ProxLRError",
    "DimensionError",
    "ParameterError",
    "DegenerateInputError",
    "PreconditionError",
    "NumericalFailureError",
]
