"""Sequences of exposures and the windowed pairing that turns them into
aggregated likelihood cells.

Times are implicit: the event at list position ``i`` happens at step ``i``
(constant spacing of one step). For every kept target position ``i`` and
every earlier-or-equal position ``j`` with ``i - j <= max_gap`` we count one
observation ``(entity[i], entity[j], i - j, contagion[i])``. Identical
observations are merged into counts, which leaves the likelihood unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence as _Seq

import numpy as np

DEFAULT_SKIP_PREFIX = 10


class Vocabulary:
    """Bidirectional map between entity labels and dense integer ids."""

    def __init__(self, labels: Iterable[str] = ()):
        self._labels: list[str] = []
        self._index: dict[str, int] = {}
        for label in labels:
            if label in self._index:
                raise ValueError(f"duplicate label {label!r}")
            self.add(label)

    def add(self, label: str) -> int:
        idx = self._index.get(label)
        if idx is None:
            idx = len(self._labels)
            self._labels.append(label)
            self._index[label] = idx
        return idx

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown entity {label!r}") from None

    def label(self, idx: int) -> str:
        return self._labels[idx]

    @property
    def labels(self) -> list[str]:
        return list(self._labels)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self._labels)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._labels == other._labels

    def __repr__(self) -> str:
        return f"Vocabulary({self._labels!r})"

    @classmethod
    def numbered(cls, n: int) -> "Vocabulary":
        return cls(str(i) for i in range(n))


class ExposureEvent(NamedTuple):
    entity: int
    contagion: bool


@dataclass(frozen=True)
class Sequence:
    """One ordered run of exposures. Stored column-wise for vectorised work."""

    entities: np.ndarray
    contagions: np.ndarray

    def __post_init__(self):
        ent = np.asarray(self.entities, dtype=np.int64)
        con = np.asarray(self.contagions, dtype=bool)
        if ent.ndim != 1 or ent.shape != con.shape:
            raise ValueError("entities and contagions must be 1-d and equally long")
        if ent.size == 0:
            raise ValueError("a sequence holds at least one event")
        object.__setattr__(self, "entities", ent)
        object.__setattr__(self, "contagions", con)

    @classmethod
    def from_events(cls, events: Iterable[tuple[int, bool]]) -> "Sequence":
        events = list(events)
        return cls(np.array([e[0] for e in events], dtype=np.int64),
                   np.array([bool(e[1]) for e in events], dtype=bool))

    @property
    def events(self) -> list[ExposureEvent]:
        return [ExposureEvent(int(e), bool(c)) for e, c in zip(self.entities, self.contagions)]

    def __len__(self) -> int:
        return int(self.entities.size)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Sequence)
                and np.array_equal(self.entities, other.entities)
                and np.array_equal(self.contagions, other.contagions))

    def __hash__(self):
        return hash((self.entities.tobytes(), self.contagions.tobytes()))


@dataclass(frozen=True)
class ObservationCell:
    target: int
    source: int
    gap: int
    contagions: int
    total: int


@dataclass
class ObservationSet:
    """Aggregated (target, source, gap) -> (contagions, total) counts.

    Cells are kept as parallel arrays sorted by (target, source, gap); only
    cells with ``total > 0`` are stored.
    """

    target: np.ndarray
    source: np.ndarray
    gap: np.ndarray
    contagions: np.ndarray
    total: np.ndarray
    entity_count: int
    max_gap: int
    # events kept as targets, per entity; the naive baseline counts exposures
    # rather than pair observations
    exposures: np.ndarray = field(default=None)
    exposure_contagions: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.entity_count
        if self.exposures is None:
            self.exposures = np.zeros(n, dtype=np.int64)
        if self.exposure_contagions is None:
            self.exposure_contagions = np.zeros(n, dtype=np.int64)

    def __len__(self) -> int:
        return int(self.total.size)

    @property
    def cells(self) -> list[ObservationCell]:
        return [ObservationCell(*map(int, row)) for row in
                zip(self.target, self.source, self.gap, self.contagions, self.total)]

    @property
    def frequency(self) -> np.ndarray:
        return self.contagions / self.total

    def restrict(self, mask: np.ndarray) -> "ObservationSet":
        return ObservationSet(self.target[mask], self.source[mask], self.gap[mask],
                              self.contagions[mask], self.total[mask],
                              self.entity_count, self.max_gap,
                              self.exposures, self.exposure_contagions)

    def targets(self) -> np.ndarray:
        return np.unique(self.target)

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Counts as (N, N, S+1) arrays ``(contagions, total)``."""
        shape = (self.entity_count, self.entity_count, self.max_gap + 1)
        c = np.zeros(shape, dtype=np.int64)
        t = np.zeros(shape, dtype=np.int64)
        c[self.target, self.source, self.gap] = self.contagions
        t[self.target, self.source, self.gap] = self.total
        return c, t

    @classmethod
    def from_dense(cls, contagions: np.ndarray, total: np.ndarray,
                   exposures=None, exposure_contagions=None) -> "ObservationSet":
        n, _, g = total.shape
        x, y, d = np.nonzero(total)
        return cls(x.astype(np.int64), y.astype(np.int64), d.astype(np.int64),
                   contagions[x, y, d].astype(np.int64), total[x, y, d].astype(np.int64),
                   n, g - 1, exposures, exposure_contagions)


def _check_entities(sequences: _Seq[Sequence], entity_count: int) -> None:
    for k, seq in enumerate(sequences):
        if seq.entities.min() < 0 or seq.entities.max() >= entity_count:
            bad = seq.entities[(seq.entities < 0) | (seq.entities >= entity_count)][0]
            raise ValueError(f"unknown entity {int(bad)} in sequence {k}")


def assemble_observations(sequences: _Seq[Sequence], max_gap: int,
                          skip_prefix: int = DEFAULT_SKIP_PREFIX,
                          entity_count: int | None = None,
                          min_gap: int = 0) -> ObservationSet:
    """Pair every kept exposure with its window of preceding exposures.

    Positions ``i < skip_prefix`` are never used as targets but still serve
    as sources for later targets. ``min_gap=1`` drops the self pairing.
    """
    if not sequences:
        raise ValueError("no data")
    if max_gap < 0 or skip_prefix < 0 or min_gap < 0:
        raise ValueError("max_gap, skip_prefix and min_gap must be >= 0")
    if entity_count is None:
        entity_count = 1 + max(int(s.entities.max()) for s in sequences)
    _check_entities(sequences, entity_count)

    ent = np.concatenate([s.entities for s in sequences])
    con = np.concatenate([s.contagions for s in sequences]).astype(np.int64)
    pos = np.concatenate([np.arange(len(s)) for s in sequences])

    n, width = entity_count, max_gap + 1
    size = n * n * width
    contagions = np.zeros(size, dtype=np.int64)
    total = np.zeros(size, dtype=np.int64)
    kept = pos >= skip_prefix
    for d in range(min_gap, width):
        # position j = i - d lies in the same sequence iff pos[i] >= d
        i = np.nonzero(kept & (pos >= d))[0]
        if i.size == 0:
            continue
        lin = (ent[i] * n + ent[i - d]) * width + d
        total += np.bincount(lin, minlength=size)
        contagions += np.bincount(lin, weights=con[i], minlength=size).astype(np.int64)

    exposures = np.bincount(ent[kept], minlength=n).astype(np.int64)
    exposure_contagions = np.bincount(ent[kept], weights=con[kept], minlength=n).astype(np.int64)
    shape = (n, n, width)
    return ObservationSet.from_dense(contagions.reshape(shape), total.reshape(shape),
                                     exposures, exposure_contagions)


def merge_observations(a: ObservationSet, b: ObservationSet) -> ObservationSet:
    """Sum the counts of two observation sets built with the same window."""
    if a.entity_count != b.entity_count or a.max_gap != b.max_gap:
        raise ValueError("observation sets have different shapes")
    ca, ta = a.dense()
    cb, tb = b.dense()
    return ObservationSet.from_dense(ca + cb, ta + tb,
                                     a.exposures + b.exposures,
                                     a.exposure_contagions + b.exposure_contagions)
