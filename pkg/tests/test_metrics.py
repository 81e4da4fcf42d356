import math

import numpy as np
import pytest

from interprofile.baselines import EmpiricalPredictor, fit_naive
from interprofile.core import ObservationSet, Sequence, assemble_observations
from interprofile.kernels import BG_FLOOR, BetaMatrix, exp, rbf
from interprofile.metrics import (bcf1, bernoulli_js, confusion, evaluate, js_divergence, mse_beta,
                                  rss)


class Fixed:
    """Predicts from a per-cell array aligned with the observation set."""

    def __init__(self, p):
        self.p = np.asarray(p, dtype=float)

    def predict(self, target, source, gap):
        return self.p


def cells(freqs_and_totals):
    c = np.array([round(f * n) for f, n in freqs_and_totals], dtype=np.int64)
    n = np.array([n for _, n in freqs_and_totals], dtype=np.int64)
    k = np.arange(len(c))
    return ObservationSet(np.zeros_like(k), np.zeros_like(k), k, c, n, 1, len(c) - 1)


def scalar_js(f, p):
    def kl(a, b):
        return sum(x * math.log(x / y) for x, y in ((a, b), (1 - a, 1 - b)) if x > 0)
    m = (f + p) / 2
    return 0.5 * kl(f, m) + 0.5 * kl(p, m)


def test_rss_examples():
    obs = cells([(0.5, 10)])
    assert rss(Fixed([0.3]), obs) == pytest.approx(0.04, abs=1e-15)
    assert rss(Fixed(obs.frequency), obs) == 0


def test_js_examples():
    assert bernoulli_js(1.0, 0.0) == pytest.approx(math.log(2), abs=1e-15)
    assert bernoulli_js(0.3, 0.3) == 0
    for f, p in [(0.2, 0.7), (0.0, 0.4), (0.9, 0.85), (1.0, 0.5)]:
        assert bernoulli_js(f, p) == pytest.approx(scalar_js(f, p), rel=1e-12)


def test_js_count_weighted():
    obs = cells([(0.2, 10), (1.0, 30)])
    p = [0.7, 0.5]
    want = (10 * scalar_js(0.2, 0.7) + 30 * scalar_js(1.0, 0.5)) / 40
    assert js_divergence(Fixed(p), obs) == pytest.approx(want, rel=1e-12)


def test_bcf1_examples():
    tp, fp, fn, tn = confusion(0.4, 0.6, 10)
    assert (tp, fp, fn, tn) == pytest.approx((4, 2, 0, 4))
    assert bcf1(Fixed([0.6]), cells([(0.4, 10)])) == 0.8
    obs = cells([(0.4, 10), (0.5, 4), (0.0, 6)])
    # hand aggregation: TP = 4 + 0.8 + 0, FP = 2 + 0 + 0.6, FN = 0 + 1.2 + 0
    assert bcf1(Fixed([0.6, 0.2, 0.1]), obs) == pytest.approx(2 * 4.8 / (2 * 4.8 + 2.6 + 1.2), rel=1e-14)
    assert bcf1(Fixed([0.0]), cells([(0.0, 5)])) == 1.0


def test_perfect_predictor_fixed_points(rng):
    seqs = [Sequence(rng.integers(0, 3, 20), rng.random(20) < 0.4) for _ in range(10)]
    obs = assemble_observations(seqs, 4, 2, 3)
    report = evaluate(EmpiricalPredictor(obs), obs)
    assert report.rss == 0 and report.js_divergence == 0 and report.bcf1 == 1.0


def test_rss_toy_corpus_naive():
    seqs = [Sequence([0, 1, 0], [0, 1, 1])]
    obs = assemble_observations(seqs, 1, 0, 2)
    # naive rates: entity 0 -> 1/2, entity 1 -> 1
    # cells: (0,0,0) f=1/2, (1,1,0) f=1, (1,0,1) f=1, (0,1,1) f=1
    # only (0,1,1) misses: (1 - 1/2)**2
    assert rss(fit_naive(obs), obs) == pytest.approx(0.25, abs=1e-15)


def test_mse_beta():
    k = exp(3)
    truth = BetaMatrix.background_only(k, np.full((2, 2), BG_FLOOR))
    shifted = BetaMatrix(k, truth.coefs + 0.1)
    assert mse_beta(truth, truth) == 0
    assert mse_beta(shifted, truth) == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ValueError, match="incomparable"):
        mse_beta(BetaMatrix.background_only(rbf(3), np.ones((2, 2))), truth)
