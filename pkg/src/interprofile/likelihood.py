"""Negative log-likelihood of the per-pair Bernoulli model and its gradient.

For a target ``x`` every cell ``(y, d)`` contributes

    -[c * log H + (n - c) * log(1 - H)],   H = exp(-beta_xy . phi(d))

where ``c`` counts contagions among ``n`` observations. Targets never share
parameters, so the problem splits into one independent subproblem per
target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ObservationSet
from .kernels import BG_FLOOR, KernelSpec


@dataclass
class Subproblem:
    """Cells of one target laid out densely over (source, gap).

    ``sources`` lists the entity ids that appear with this target; parameter
    block ``k`` of a flat vector belongs to ``sources[k]``.
    """

    target: int
    sources: np.ndarray
    contagions: np.ndarray  # (len(sources), S+1)
    total: np.ndarray

    @property
    def source_count(self) -> int:
        return int(self.sources.size)

    def param_size(self, kernel: KernelSpec) -> int:
        return self.source_count * kernel.dimension

    @property
    def observation_count(self) -> int:
        return int(self.total.sum())

    @classmethod
    def from_cells(cls, target: int, source, gap, contagions, total, max_gap: int) -> "Subproblem":
        sources, inv = np.unique(np.asarray(source), return_inverse=True)
        c = np.zeros((sources.size, max_gap + 1))
        n = np.zeros((sources.size, max_gap + 1))
        np.add.at(c, (inv, gap), contagions)
        np.add.at(n, (inv, gap), total)
        return cls(int(target), sources.astype(np.int64), c, n)


def slice_subproblems(obs: ObservationSet) -> list[Subproblem]:
    if len(obs) == 0:
        raise ValueError("no data")
    subs = []
    for x in obs.targets():
        m = obs.target == x
        subs.append(Subproblem.from_cells(x, obs.source[m], obs.gap[m],
                                          obs.contagions[m], obs.total[m], obs.max_gap))
    return subs


def _check_feasible(beta: np.ndarray) -> None:
    if not np.all(np.isfinite(beta)) or np.any(beta < 0) or np.any(beta[:, 0] < BG_FLOOR):
        raise ValueError("infeasible point")


def _exponents(sub: Subproblem, params, kernel: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    beta = np.asarray(params, dtype=float).reshape(sub.source_count, kernel.dimension)
    _check_feasible(beta)
    return beta, beta @ kernel.features().T


def _nll_from_exponent(z: np.ndarray, c: np.ndarray, n: np.ndarray) -> float:
    # log H = -z ; log(1 - H) = log(-expm1(-z)), exact for z small or large
    fail = n - c
    log_surv = np.log(-np.expm1(-z), where=fail > 0, out=np.zeros_like(z))
    return float(np.sum(c * z) - np.sum(fail * log_surv))


def neg_log_likelihood(sub: Subproblem, params, kernel: KernelSpec) -> float:
    _, z = _exponents(sub, params, kernel)
    return _nll_from_exponent(z, sub.contagions, sub.total)


def gradient(sub: Subproblem, params, kernel: KernelSpec) -> np.ndarray:
    """d NLL / d beta = sum over cells of (c - (n - c) * H / (1 - H)) * phi."""
    _, z = _exponents(sub, params, kernel)
    fail = sub.total - sub.contagions
    odds = np.divide(fail, np.expm1(z), where=fail > 0, out=np.zeros_like(z))
    weight = sub.contagions - odds
    return (weight @ kernel.features()).ravel()


def value_and_gradient(sub: Subproblem, params, kernel: KernelSpec) -> tuple[float, np.ndarray]:
    _, z = _exponents(sub, params, kernel)
    c, n = sub.contagions, sub.total
    fail = n - c
    em1 = np.expm1(z)
    odds = np.divide(fail, em1, where=fail > 0, out=np.zeros_like(z))
    value = _nll_from_exponent(z, c, n)
    return value, ((c - odds) @ kernel.features()).ravel()


def stack_params(subs: list[Subproblem], beta_coefs: np.ndarray) -> list[np.ndarray]:
    """Extract each subproblem's flat parameter block from an (N, N, dim) array."""
    return [beta_coefs[s.target, s.sources].ravel() for s in subs]


def total_nll(obs: ObservationSet, beta_coefs: np.ndarray, kernel: KernelSpec) -> float:
    subs = slice_subproblems(obs)
    return sum(neg_log_likelihood(s, p, kernel) for s, p in zip(subs, stack_params(subs, beta_coefs)))
