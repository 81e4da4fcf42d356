"""Synthetic exposure/contagion sequences drawn from a known coefficient matrix.

Random stream layout (numpy ``PCG64`` via ``SeedSequence``):

* ``random_beta`` draws from ``default_rng(seed)`` in this order: one
  ``(N, N, dim)`` uniform block for the amplitudes, then, only when
  ``active`` is set, one ``(N, N, dim - 1)`` uniform block used to pick
  which interaction coefficients stay nonzero.
* ``generate`` spawns one child ``SeedSequence`` per sequence from
  ``SeedSequence(seed)``. Sequence ``k`` draws, from its own child stream,
  ``max_length`` entity ids, then ``max_length`` uniforms for the outcomes,
  then (single-source rule only) ``max_length`` uniforms for the source pick.

Entity draws never depend on earlier outcomes, so whole sequences are
generated in one vectorised pass and the corpus is the same however it is
split across workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Sequence
from .kernels import BG_FLOOR, BetaMatrix, KernelSpec


class CombinationRule(str, enum.Enum):
    """How the window of prior exposures combines into one contagion probability.

    ``INDEPENDENT_ATTEMPTS``: every prior exposure gets an independent chance,
    ``p = 1 - prod(1 - H_j)``. ``SINGLE_SOURCE``: one prior exposure is picked
    uniformly and ``p = H_j``.
    """

    INDEPENDENT_ATTEMPTS = "independent"
    SINGLE_SOURCE = "single"

    @classmethod
    def parse(cls, name: str) -> "CombinationRule":
        name = getattr(name, "value", name)
        for rule in cls:
            if name.lower() in (rule.value, rule.name.lower()):
                return rule
        raise ValueError(f"unknown combination rule {name!r}")


@dataclass(frozen=True)
class GenConfig:
    entity_count: int
    sequence_count: int
    kernel: KernelSpec
    max_length: int = 50
    seed: int = 0
    rule: CombinationRule = CombinationRule.INDEPENDENT_ATTEMPTS

    def __post_init__(self):
        if self.entity_count < 1 or self.max_length < 1 or self.sequence_count < 0:
            raise ValueError("entity_count and max_length must be >= 1")
        object.__setattr__(self, "rule", CombinationRule.parse(self.rule))


def random_beta(entity_count: int, kernel: KernelSpec, seed: int,
                active: int | None = None) -> BetaMatrix:
    """Coefficients uniform in [0, 1], background floored at ``BG_FLOOR``.

    With ``active=k`` only ``k`` interaction coefficients per pair (chosen
    uniformly) keep their draw and the rest are zero. The RBF features grow
    like ``d**2 / 2``, so a fully dense draw drives every hazard to ~0 and
    produces corpora with no contagions at all.
    """
    if entity_count < 1:
        raise ValueError("entity_count must be >= 1")
    rng = np.random.default_rng(seed)
    dim = kernel.dimension
    coefs = rng.uniform(0.0, 1.0, size=(entity_count, entity_count, dim))
    if active is not None and active < dim - 1:
        keys = rng.uniform(size=(entity_count, entity_count, dim - 1))
        rank = np.argsort(np.argsort(keys, axis=-1), axis=-1)
        coefs[..., 1:] *= rank < active
    coefs[..., 0] = np.maximum(coefs[..., 0], BG_FLOOR)
    return BetaMatrix(kernel, coefs)


def contagion_probabilities(hazards: np.ndarray, entities: np.ndarray,
                            rule: CombinationRule, pick: np.ndarray | None = None) -> np.ndarray:
    """Per-position contagion probability for a batch of equal-length sequences.

    ``hazards`` is the (N, N, S+1) hazard table, ``entities`` an (M, L) array.
    """
    m, length = entities.shape
    width = hazards.shape[2]
    if rule is CombinationRule.INDEPENDENT_ATTEMPTS:
        log_survive = np.zeros((m, length))
        for d in range(min(width, length)):
            h = hazards[entities[:, d:], entities[:, :length - d], d]
            log_survive[:, d:] += np.log1p(-h)
        return -np.expm1(log_survive)
    window = np.minimum(np.arange(length), width - 1) + 1
    offset = np.minimum((pick * window).astype(np.int64), window - 1)
    source = np.take_along_axis(entities, np.arange(length) - offset, axis=1)
    return hazards[entities, source, offset]


def generate(true_beta: BetaMatrix, cfg: GenConfig) -> list[Sequence]:
    n = cfg.entity_count
    if true_beta.entity_count < n or not true_beta.fitted[:n, :n].all():
        raise ValueError("true_beta does not cover every entity pair")
    if cfg.sequence_count == 0:
        return []
    hazards = true_beta.hazard_table()[:n, :n, :cfg.kernel.max_shift + 1]
    length = cfg.max_length
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.sequence_count)
    entities = np.empty((cfg.sequence_count, length), dtype=np.int64)
    outcome_u = np.empty((cfg.sequence_count, length))
    pick = np.empty((cfg.sequence_count, length)) if cfg.rule is CombinationRule.SINGLE_SOURCE else None
    for k, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        entities[k] = rng.integers(0, n, size=length)
        outcome_u[k] = rng.random(length)
        if pick is not None:
            pick[k] = rng.random(length)
    p = contagion_probabilities(hazards, entities, cfg.rule, pick)
    contagions = outcome_u < p
    return [Sequence(entities[k], contagions[k]) for k in range(cfg.sequence_count)]
