"""K-fold cross-validation over sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import EmpiricalPredictor, fit_icir, fit_interacting, fit_naive
from .core import DEFAULT_SKIP_PREFIX, Sequence, assemble_observations
from .kernels import BetaMatrix, KernelSpec, exp, rbf
from .metrics import EvalReport, evaluate
from .solver import SolverConfig

MODELS = ("rbf", "exp", "icir", "naive")
METRICS = ("rss", "js", "bcf1", "mse_beta")


@dataclass(frozen=True)
class FoldPlan:
    fold_count: int
    assignment: np.ndarray  # sequence index -> fold id
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignment == fold)[0]

    def train_indices(self, fold: int) -> np.ndarray:
        if self.fold_count == 1:
            # single fold: train on everything and test in-sample
            return np.arange(self.assignment.size)
        return np.nonzero(self.assignment != fold)[0]


def plan_folds(sequence_count: int, fold_count: int = 5, seed: int = 0) -> FoldPlan:
    """Seeded shuffle followed by round-robin assignment."""
    if fold_count < 1:
        raise ValueError("fold_count must be >= 1")
    if sequence_count < fold_count:
        raise ValueError(f"sequenceCount < foldCount ({sequence_count} < {fold_count})")
    order = np.random.default_rng(seed).permutation(sequence_count)
    assignment = np.empty(sequence_count, dtype=np.int64)
    assignment[order] = np.arange(sequence_count) % fold_count
    return FoldPlan(fold_count, assignment, seed)


@dataclass
class ExperimentResult:
    folds: dict[str, list[EvalReport]] = field(default_factory=dict)

    def aggregate(self, model: str) -> dict[str, tuple[float, float]]:
        """Mean and sample standard deviation (n - 1) of every metric across folds."""
        out = {}
        for metric in METRICS:
            values = [r.as_dict()[metric] for r in self.folds[model] if metric in r.as_dict()]
            if not values:
                continue
            mean = math.fsum(values) / len(values)
            std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
            out[metric] = (mean, std)
        return out

    def mean(self, model: str, metric: str) -> float:
        return self.aggregate(model)[metric][0]


def _kernel_for(model: str, max_shift: int) -> KernelSpec:
    return exp(max_shift) if model == "exp" else rbf(max_shift)


def fit_model(model: str, train, max_shift: int, cfg: SolverConfig, workers: int | None = None):
    if model in ("rbf", "exp"):
        return fit_interacting(train, _kernel_for(model, max_shift), cfg, workers, name=model)
    if model == "icir":
        return fit_icir(train, rbf(max_shift), cfg, workers)
    if model == "naive":
        return fit_naive(train)
    raise ValueError(f"unknown model {model!r}")


def run_experiment(sequences: list[Sequence], models, plan: FoldPlan, *,
                   max_shift: int = 20, solver: SolverConfig = SolverConfig(),
                   skip_prefix: int = DEFAULT_SKIP_PREFIX, min_gap: int = 0,
                   entity_count: int | None = None, truth: BetaMatrix | None = None,
                   workers: int | None = None) -> ExperimentResult:
    """Fit every model on each training split and score it on the held-out split.

    ``"perfect"`` is accepted as a model name: it predicts the test set's own
    frequencies and exists to sanity-check the metrics.
    """
    if len(sequences) != plan.assignment.size:
        raise ValueError("fold plan does not match the sequence count")
    if entity_count is None:
        entity_count = 1 + max(int(s.entities.max()) for s in sequences)
    result = ExperimentResult({m: [] for m in models})
    for fold in range(plan.fold_count):
        train_seqs = [sequences[i] for i in plan.train_indices(fold)]
        test_seqs = [sequences[i] for i in plan.test_indices(fold)]
        test = assemble_observations(test_seqs, max_shift, skip_prefix, entity_count, min_gap)
        if len(test) == 0:
            raise ValueError(f"degenerate fold {fold}: empty test set")
        train = assemble_observations(train_seqs, max_shift, skip_prefix, entity_count, min_gap)
        if len(train) == 0:
            raise ValueError(f"degenerate fold {fold}: empty training set")
        for model in models:
            if model == "perfect":
                pred = EmpiricalPredictor(test)
            else:
                pred = fit_model(model, train, max_shift, solver, workers)
            result.folds[model].append(evaluate(pred, test, truth))
    return result
