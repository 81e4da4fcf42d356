"""Temporal interaction profiles between information entities."""

from .core import (ExposureEvent, ObservationCell, ObservationSet, Sequence, Vocabulary,
                   assemble_observations)
from .kernels import (BG_FLOOR, BetaMatrix, Family, KernelSpec, exp, feature_map, hazard,
                      profile_intensity, rbf)
from .solver import FitResult, SolverConfig, fit, fit_subproblem

__all__ = [
    "BG_FLOOR", "BetaMatrix", "ExposureEvent", "Family", "FitResult", "KernelSpec",
    "ObservationCell", "ObservationSet", "Sequence", "SolverConfig", "Vocabulary",
    "assemble_observations", "feature_map", "fit", "fit_subproblem", "hazard",
    "exp", "profile_intensity", "rbf",
]
__version__ = "0.1.0"
