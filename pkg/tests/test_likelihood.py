import math

import numpy as np
import pytest

from interprofile.core import ObservationSet, assemble_observations
from interprofile.kernels import BG_FLOOR, exp, rbf
from interprofile.likelihood import (Subproblem, gradient, neg_log_likelihood, slice_subproblems,
                                     stack_params, total_nll, value_and_gradient)

from conftest import random_sequences
from oracles import central_difference, event_level_nll


def random_coefs(rng, n, dim):
    coefs = rng.uniform(0, 0.3, size=(n, n, dim))
    coefs[..., 0] = rng.uniform(0.1, 2.0, size=(n, n))
    return coefs


def one_cell(c, n, kernel, gap=0):
    con = np.zeros((1, kernel.max_shift + 1))
    tot = np.zeros((1, kernel.max_shift + 1))
    con[0, gap], tot[0, gap] = c, n
    return Subproblem(0, np.array([0]), con, tot)


def test_single_cell_value():
    sub = one_cell(1, 2, exp(0))
    assert neg_log_likelihood(sub, [math.log(2), 0], exp(0)) == pytest.approx(2 * math.log(2), rel=1e-15)


def test_all_contagion_cell_decreases_toward_floor():
    sub = one_cell(5, 5, exp(0))
    values = [neg_log_likelihood(sub, [b, 0], exp(0)) for b in (1.0, 0.1, 1e-3, BG_FLOOR)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_gradient_sign_and_stationarity():
    k = exp(0)
    assert gradient(one_cell(5, 10, k), [math.log(2), 0], k)[0] == pytest.approx(0, abs=1e-12)
    # frequency 0.2 below H = 0.5: raising the coefficient lowers H, so the slope is negative
    assert gradient(one_cell(2, 10, k), [math.log(2), 0], k)[0] < 0
    assert gradient(one_cell(8, 10, k), [math.log(2), 0], k)[0] > 0


@pytest.mark.parametrize("family", ["RBF", "EXP"])
def test_nll_matches_event_level_sum(rng, family):
    S, n = 4, 3
    kernel = rbf(S) if family == "RBF" else exp(S)
    seqs = random_sequences(rng, n, 6, length=10)
    obs = assemble_observations(seqs, S, 2, n)
    coefs = random_coefs(rng, n, kernel.dimension)
    assert total_nll(obs, coefs, kernel) == pytest.approx(
        event_level_nll(seqs, coefs, family, S, 2), rel=1e-12)


@pytest.mark.parametrize("kernel", [rbf(4), exp(4)], ids=["RBF", "EXP"])
def test_gradient_finite_differences(rng, kernel):
    obs = assemble_observations(random_sequences(rng, 3, 8), 4, 2, 3)
    for sub in slice_subproblems(obs):
        x = random_coefs(rng, 1, kernel.dimension * sub.source_count).ravel()
        x = x.reshape(sub.source_count, kernel.dimension)
        x[:, 0] = rng.uniform(0.2, 2.0, sub.source_count)
        x = x.ravel()
        g = gradient(sub, x, kernel)
        fd = central_difference(lambda p: neg_log_likelihood(sub, p, kernel), x)
        assert np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1.0)) < 1e-5
        v, g2 = value_and_gradient(sub, x, kernel)
        assert v == neg_log_likelihood(sub, x, kernel) and np.array_equal(g, g2)


def test_infeasible_point_rejected():
    sub = one_cell(1, 2, exp(0))
    with pytest.raises(ValueError, match="infeasible point"):
        neg_log_likelihood(sub, [0.0, 0.0], exp(0))
    with pytest.raises(ValueError, match="infeasible point"):
        gradient(sub, [0.5, -1e-3], exp(0))


def test_subproblems_split_by_target(rng):
    obs = assemble_observations(random_sequences(rng, 2, 5), 3, 1, 2)
    subs = slice_subproblems(obs)
    assert [s.target for s in subs] == [0, 1]
    assert sum(s.observation_count for s in subs) == obs.total.sum()
    kernel = rbf(3)
    coefs = random_coefs(rng, 2, kernel.dimension)
    parts = [neg_log_likelihood(s, p, kernel) for s, p in zip(subs, stack_params(subs, coefs))]
    assert math.fsum(parts) == pytest.approx(total_nll(obs, coefs, kernel), rel=1e-14)


def test_subproblem_counts_match_recount(rng):
    seqs = random_sequences(rng, 3, 5)
    obs = assemble_observations(seqs, 3, 2, 3)
    for sub in slice_subproblems(obs):
        for k, y in enumerate(sub.sources):
            for d in range(4):
                n = c = 0
                for s in seqs:
                    for i in range(max(2, d), len(s)):
                        if s.entities[i] == sub.target and s.entities[i - d] == y:
                            n += 1
                            c += int(s.contagions[i])
                assert (sub.total[k, d], sub.contagions[k, d]) == (n, c)


def test_empty_observations():
    empty = ObservationSet.from_dense(np.zeros((2, 2, 3)), np.zeros((2, 2, 3)))
    with pytest.raises(ValueError, match="no data"):
        slice_subproblems(empty)
