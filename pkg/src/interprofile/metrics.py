"""Goodness-of-fit metrics comparing predicted probabilities with observed
cell frequencies.

JS divergence uses the natural logarithm, so a single cell contributes at
most ``ln 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ObservationSet
from .kernels import BetaMatrix

LN2 = math.log(2.0)


@dataclass
class EvalReport:
    rss: float
    js_divergence: float
    bcf1: float
    mse_beta: float | None = None
    cell_count: int = 0

    def as_dict(self) -> dict[str, float]:
        out = {"rss": self.rss, "js": self.js_divergence, "bcf1": self.bcf1}
        if self.mse_beta is not None:
            out["mse_beta"] = self.mse_beta
        return out


def _cells(pred, obs: ObservationSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(obs) == 0:
        raise ValueError("no data")
    p = np.clip(np.asarray(pred.predict(obs.target, obs.source, obs.gap), dtype=float), 0.0, 1.0)
    n = obs.total.astype(float)
    f = obs.contagions / n
    return f, p, n


def rss(pred, obs: ObservationSet) -> float:
    f, p, _ = _cells(pred, obs)
    return math.fsum((f - p) ** 2)


def _xlogy_ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a * log(a / b)`` with ``0 * log 0 = 0``."""
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log(a[pos] / b[pos])
    return out


def bernoulli_js(f, p) -> np.ndarray:
    """Jensen-Shannon divergence between Bernoulli(f) and Bernoulli(p), nats."""
    f = np.asarray(f, dtype=float)
    p = np.asarray(p, dtype=float)
    m1 = 0.5 * (f + p)
    m0 = 1.0 - m1
    kl_f = _xlogy_ratio(f, m1) + _xlogy_ratio(1.0 - f, m0)
    kl_p = _xlogy_ratio(p, m1) + _xlogy_ratio(1.0 - p, m0)
    return np.clip(0.5 * (kl_f + kl_p), 0.0, LN2)


def js_divergence(pred, obs: ObservationSet) -> float:
    """Count-weighted mean of per-cell Bernoulli JS divergences."""
    f, p, n = _cells(pred, obs)
    return math.fsum(n * bernoulli_js(f, p)) / math.fsum(n)


def confusion(f, p, n) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Best-case fractional confusion counts (TP, FP, FN, TN) per cell."""
    f, p, n = (np.asarray(a, dtype=float) for a in (f, p, n))
    tp = n * np.minimum(p, f)
    fp = n * np.maximum(p - f, 0.0)
    fn = n * np.maximum(f - p, 0.0)
    tn = n * np.minimum(1.0 - p, 1.0 - f)
    return tp, fp, fn, tn


def bcf1(pred, obs: ObservationSet) -> float:
    f, p, n = _cells(pred, obs)
    tp, fp, fn, _ = confusion(f, p, n)
    tp, fp, fn = math.fsum(tp), math.fsum(fp), math.fsum(fn)
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def mse_beta(fitted: BetaMatrix, truth: BetaMatrix) -> float:
    if (fitted.kernel != truth.kernel or fitted.coefs.shape != truth.coefs.shape
            or not np.array_equal(fitted.fitted, truth.fitted)):
        raise ValueError("incomparable matrices")
    mask = truth.fitted
    return float(np.mean((fitted.coefs[mask] - truth.coefs[mask]) ** 2))


def evaluate(pred, obs: ObservationSet, truth: BetaMatrix | None = None) -> EvalReport:
    mse = None
    beta = getattr(pred, "beta", None)
    # kernels of a different family (EXP model on RBF truth) have no MSE
    if truth is not None and beta is not None and beta.kernel == truth.kernel:
        if np.array_equal(beta.fitted, truth.fitted):
            mse = mse_beta(beta, truth)
    return EvalReport(rss(pred, obs), js_divergence(pred, obs), bcf1(pred, obs), mse, len(obs))
