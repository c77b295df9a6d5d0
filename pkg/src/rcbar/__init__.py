"""Random-coefficient bifurcating autoregression: simulation, WLS estimation, limit theory."""

from .asymptotics import LimitMatrices, limit_matrices, martingale_bracket, t_moments
from .estimators import estimate
from .experiments import ExperimentConfig, run_experiment
from .model import ModelSpec, derive_moments, reference_spec, validate_hypotheses
from .simulate import TSampleConfig, sample_T, simulate_branch, simulate_tree

__all__ = [
    "LimitMatrices", "limit_matrices", "martingale_bracket", "t_moments", "estimate",
    "ExperimentConfig", "run_experiment", "ModelSpec", "derive_moments", "reference_spec",
    "validate_hypotheses", "TSampleConfig", "sample_T", "simulate_branch", "simulate_tree",
]
