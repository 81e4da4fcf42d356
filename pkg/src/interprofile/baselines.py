"""Predictors evaluated against held-out cells.

Every model answers ``predict(target, source, gap)`` with a probability,
vectorised over equal-shaped integer arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ObservationSet
from .kernels import BG_FLOOR, BetaMatrix, KernelSpec
from .solver import FitResult, SolverConfig, fit


class Predictor:
    name = "predictor"

    def predict(self, target, source, gap) -> np.ndarray:
        raise NotImplementedError

    @property
    def beta(self) -> BetaMatrix | None:
        return None


def _target_rates(obs: ObservationSet) -> tuple[np.ndarray, float]:
    exposures = obs.exposures.astype(float)
    contagions = obs.exposure_contagions.astype(float)
    overall = contagions.sum() / exposures.sum() if exposures.sum() > 0 else 0.0
    rates = np.divide(contagions, exposures, where=exposures > 0,
                      out=np.full(obs.entity_count, overall))
    return rates, overall


@dataclass
class NaivePredictor(Predictor):
    """Per-target contagion frequency over target exposures."""

    rates: np.ndarray
    overall: float
    name = "naive"

    def predict(self, target, source, gap):
        target = np.asarray(target)
        out = np.full(target.shape, self.overall, dtype=float)
        known = target < self.rates.size
        out[known] = self.rates[target[known]]
        return out


def fit_naive(obs: ObservationSet) -> NaivePredictor:
    if len(obs) == 0:
        raise ValueError("no data")
    rates, overall = _target_rates(obs)
    return NaivePredictor(rates, overall)


class HazardPredictor(Predictor):
    """Predicts the fitted pair hazard; pairs absent from training fall back
    to the target's naive rate."""

    def __init__(self, result: FitResult, fallback: NaivePredictor, name: str = "ir"):
        self.result = result
        self.fallback = fallback
        self.name = name
        self._table = result.beta.hazard_table()

    @property
    def beta(self) -> BetaMatrix:
        return self.result.beta

    def predict(self, target, source, gap):
        target, source, gap = map(np.asarray, (target, source, gap))
        out = self._table[target, source, gap]
        missing = ~self.result.beta.fitted[target, source]
        if np.any(missing):
            out = np.where(missing, self.fallback.predict(target, source, gap), out)
        return out


def fit_interacting(obs: ObservationSet, kernel: KernelSpec, cfg: SolverConfig = SolverConfig(),
                    workers: int | None = None, name: str | None = None) -> HazardPredictor:
    result = fit(obs, kernel, cfg, workers)
    return HazardPredictor(result, fit_naive(obs), name or kernel.family.value.lower())


class ICIRPredictor(HazardPredictor):
    """Self-interaction-only model.

    Each target keeps its own time-dependent kernel on self-pair cells. Every
    other source gets the same background-only vector ``[b_x, 0, ..., 0]``
    where ``exp(-b_x)`` is the maximum-likelihood constant on that target's
    off-diagonal cells, so other entities carry no information.
    """

    def __init__(self, diagonal: FitResult, off_background: np.ndarray, fallback: NaivePredictor):
        kernel = diagonal.beta.kernel
        n = diagonal.beta.entity_count
        coefs = np.zeros((n, n, kernel.dimension))
        coefs[..., 0] = off_background[:, None]
        idx = np.arange(n)
        has_diag = diagonal.beta.fitted[idx, idx]
        coefs[idx[has_diag], idx[has_diag]] = diagonal.beta.coefs[idx[has_diag], idx[has_diag]]
        full = BetaMatrix(kernel, coefs)
        super().__init__(FitResult(full, diagonal.final_nll, diagonal.iterations, diagonal.converged),
                         fallback, "icir")
        self.diagonal_result = diagonal


def _constant_background(contagions: float, total: float, fallback: float) -> float:
    rate = contagions / total if total > 0 else fallback
    return float(-np.log(np.clip(rate, 1e-12, np.exp(-BG_FLOOR))))


def fit_icir(obs: ObservationSet, kernel: KernelSpec, cfg: SolverConfig = SolverConfig(),
             workers: int | None = None) -> ICIRPredictor:
    naive = fit_naive(obs)
    self_pair = obs.source == obs.target
    if not np.any(self_pair):
        raise ValueError("no self-pair cells to fit")
    diagonal = fit(obs.restrict(self_pair), kernel, cfg, workers)
    off = ~self_pair
    c = np.bincount(obs.target[off], weights=obs.contagions[off], minlength=obs.entity_count)
    t = np.bincount(obs.target[off], weights=obs.total[off], minlength=obs.entity_count)
    background = np.array([_constant_background(c[x], t[x], naive.rates[x])
                           for x in range(obs.entity_count)])
    return ICIRPredictor(diagonal, background, naive)


class EmpiricalPredictor(Predictor):
    """Returns the observed frequencies of a given set; a sanity hook for metrics."""

    name = "perfect"

    def __init__(self, obs: ObservationSet):
        c, t = obs.dense()
        self._freq = np.divide(c, t, where=t > 0, out=np.zeros(c.shape))

    def predict(self, target, source, gap):
        return self._freq[np.asarray(target), np.asarray(source), np.asarray(gap)]
