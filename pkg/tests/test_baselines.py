import numpy as np
import pytest

from interprofile.baselines import EmpiricalPredictor, fit_icir, fit_interacting, fit_naive
from interprofile.core import Sequence, assemble_observations
from interprofile.kernels import BetaMatrix, rbf
from interprofile.likelihood import total_nll
from interprofile.synthgen import GenConfig, generate

from conftest import random_obs


def test_naive_rate():
    seq = Sequence([0] * 10, [1, 0, 0, 1, 0, 0, 1, 0, 0, 0])
    pred = fit_naive(assemble_observations([seq], 3, 0, 1))
    assert np.all(pred.predict(np.zeros(5, int), np.zeros(5, int), np.arange(5)) == 0.3)


def test_naive_all_contagion():
    pred = fit_naive(assemble_observations([Sequence([1, 1, 1], [1, 1, 1])], 2, 0, 2))
    assert pred.predict(np.array([1]), np.array([0]), np.array([1]))[0] == 1.0


def test_naive_hand_count():
    seqs = [Sequence([0, 1, 0, 2, 1], [0, 1, 1, 0, 0]),
            Sequence([2, 2, 0, 1], [1, 0, 0, 1])]
    pred = fit_naive(assemble_observations(seqs, 3, 1, 3))
    # kept (entity, flag) events: (1,1) (0,1) (2,0) (1,0) and (2,0) (0,0) (1,1)
    assert pred.rates.tolist() == [1 / 2, 2 / 3, 0 / 2]


def test_icir_equals_interacting_on_self_only_corpus():
    seqs = [Sequence([0] * 15, np.arange(15) % 3 == 0), Sequence([1] * 15, np.arange(15) % 4 == 0)]
    obs = assemble_observations(seqs, 4, 2, 2)
    k = rbf(4)
    icir = fit_icir(obs, k)
    full = fit_interacting(obs, k)
    assert total_nll(obs, icir.beta.coefs, k) == pytest.approx(
        total_nll(obs, full.beta.coefs, k), abs=1e-9)


def test_icir_nested_in_interacting(rng):
    obs = random_obs(rng, n_entities=3, n_seq=20, length=20)
    k = rbf(4)
    icir = fit_icir(obs, k)
    full = fit_interacting(obs, k)
    assert total_nll(obs, icir.beta.coefs, k) >= total_nll(obs, full.beta.coefs, k) - 1e-6


def test_background_only_truth_same_backgrounds():
    k = rbf(5)
    truth = BetaMatrix.background_only(k, np.full((3, 3), 4.0))
    seqs = generate(truth, GenConfig(3, 400, k, max_length=30, seed=2))
    obs = assemble_observations(seqs, 5, 10, 3)
    icir, full = fit_icir(obs, k), fit_interacting(obs, k)
    idx = np.arange(3)
    assert np.allclose(icir.beta.coefs[idx, idx, 0], full.beta.coefs[idx, idx, 0], atol=1e-3)


def test_icir_off_diagonal_is_constant(rng):
    obs = random_obs(rng, n_entities=3, n_seq=20, length=20)
    icir = fit_icir(obs, rbf(4))
    coefs = icir.beta.coefs
    for x in range(3):
        off = [coefs[x, y] for y in range(3) if y != x]
        assert np.array_equal(off[0], off[1]) and not off[0][1:].any()
        sel = (obs.target == x) & (obs.source != x)
        rate = obs.contagions[sel].sum() / obs.total[sel].sum()
        assert np.exp(-off[0][0]) == pytest.approx(rate, rel=1e-12)


def test_hazard_predictor_falls_back_to_naive():
    obs = assemble_observations([Sequence([0, 0, 1, 0, 0], [0, 1, 0, 1, 1])], 1, 0, 3)
    pred = fit_interacting(obs, rbf(1))
    naive = fit_naive(obs)
    # entity 2 never occurs and target 0 never follows source 2
    got = pred.predict(np.array([2, 0]), np.array([2, 2]), np.array([0, 1]))
    assert got.tolist() == naive.predict(np.array([2, 0]), None, None).tolist() == [0.6, 0.75]


def test_empirical_predictor():
    obs = assemble_observations([Sequence([0, 1, 0, 1], [0, 1, 1, 0])], 2, 0, 2)
    pred = EmpiricalPredictor(obs)
    assert np.array_equal(pred.predict(obs.target, obs.source, obs.gap), obs.frequency)
