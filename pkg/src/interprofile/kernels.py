"""Kernel families written as nonnegative feature maps.

A kernel family maps a gap ``d`` to a feature vector ``phi(d) >= 0`` and the
hazard of a (target, source) pair is ``H(d) = exp(-beta . phi(d))`` with
``beta >= 0``. Feature 0 is the constant background term.

Adding a family (power law ``log d``, Rayleigh ``d**2 / 2``, ...) means
adding a branch to :func:`feature_matrix`; anything nonnegative keeps the
fitting problem convex.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# lower bound on the background coefficient; keeps H < 1 strictly
BG_FLOOR = 1e-6


class Family(str, enum.Enum):
    RBF = "RBF"
    EXP = "EXP"

    @classmethod
    def parse(cls, name: str) -> "Family":
        try:
            return cls(name.upper())
        except ValueError:
            raise ValueError(f"unknown kernel family {name!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    family: Family
    max_shift: int = 20

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(str(getattr(self.family, "value", self.family))))
        if self.max_shift < 0:
            raise ValueError("max_shift must be >= 0")

    @property
    def dimension(self) -> int:
        if self.family is Family.RBF:
            return self.max_shift + 2
        return 2

    def features(self) -> np.ndarray:
        """Feature table for every gap in ``0..max_shift``, shape (S+1, dim)."""
        return feature_matrix(self, np.arange(self.max_shift + 1))


def rbf(max_shift: int = 20) -> KernelSpec:
    return KernelSpec(Family.RBF, max_shift)


def exp(max_shift: int = 20) -> KernelSpec:
    return KernelSpec(Family.EXP, max_shift)


def feature_matrix(kernel: KernelSpec, gaps) -> np.ndarray:
    gaps = np.asarray(gaps, dtype=float)
    if np.any(gaps < 0):
        raise ValueError("negative gap")
    if kernel.family is Family.RBF:
        centers = np.arange(kernel.max_shift + 1, dtype=float)
        bumps = 0.5 * (gaps[..., None] - centers) ** 2
        return np.concatenate([np.ones(gaps.shape + (1,)), bumps], axis=-1)
    return np.stack([np.ones_like(gaps), gaps], axis=-1)


def feature_map(kernel: KernelSpec, gap: int) -> np.ndarray:
    if gap < 0:
        raise ValueError("negative gap")
    return feature_matrix(kernel, gap)


def check_beta(beta: np.ndarray, kernel: KernelSpec | None = None) -> None:
    beta = np.asarray(beta, dtype=float)
    if kernel is not None and beta.shape[-1] != kernel.dimension:
        raise ValueError(f"expected {kernel.dimension} coefficients, got {beta.shape[-1]}")
    if np.any(beta < 0) or np.any(beta[..., 0] < BG_FLOOR) or not np.all(np.isfinite(beta)):
        raise ValueError("infeasible point")


def hazard(beta, kernel: KernelSpec, gap) -> np.ndarray | float:
    """``exp(-beta . phi(gap))`` for one coefficient vector and one or many gaps."""
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1:
        raise ValueError("hazard takes a single coefficient vector")
    check_beta(beta, kernel)
    return np.exp(-(feature_matrix(kernel, gap) @ beta))


class BetaMatrix:
    """Coefficient vectors for ordered (target, source) pairs.

    ``coefs`` has shape (N, N, dim); ``fitted`` flags which pairs carry a
    vector. Unfitted rows are kept at the background floor and never read.
    """

    def __init__(self, kernel: KernelSpec, coefs: np.ndarray, fitted: np.ndarray | None = None):
        coefs = np.array(coefs, dtype=float)
        n = coefs.shape[0]
        if coefs.shape != (n, n, kernel.dimension):
            raise ValueError(f"coefficient array has shape {coefs.shape}, "
                             f"expected ({n}, {n}, {kernel.dimension})")
        if fitted is None:
            fitted = np.ones((n, n), dtype=bool)
        fitted = np.asarray(fitted, dtype=bool)
        check_beta(coefs[fitted], kernel)
        self.kernel = kernel
        self.coefs = coefs
        self.fitted = fitted

    @classmethod
    def background_only(cls, kernel: KernelSpec, background) -> "BetaMatrix":
        background = np.asarray(background, dtype=float)
        coefs = np.zeros(background.shape + (kernel.dimension,))
        coefs[..., 0] = background
        return cls(kernel, coefs)

    @property
    def entity_count(self) -> int:
        return self.coefs.shape[0]

    def pairs(self) -> list[tuple[int, int]]:
        return [tuple(map(int, p)) for p in np.argwhere(self.fitted)]

    def vector(self, target: int, source: int) -> np.ndarray:
        if not self.fitted[target, source]:
            raise KeyError(f"pair not fitted: ({target}, {source})")
        return self.coefs[target, source]

    def hazard_table(self) -> np.ndarray:
        """Hazard for every pair and gap ``0..S``, shape (N, N, S+1)."""
        return np.exp(-self.coefs @ self.kernel.features().T)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, BetaMatrix) and self.kernel == other.kernel
                and np.array_equal(self.fitted, other.fitted)
                and np.array_equal(self.coefs[self.fitted], other.coefs[other.fitted]))

    def __repr__(self) -> str:
        return (f"BetaMatrix({self.kernel.family.value}, S={self.kernel.max_shift}, "
                f"entities={self.entity_count}, pairs={int(self.fitted.sum())})")


def profile_intensity(beta: BetaMatrix, target: int, source: int, gaps=None) -> np.ndarray:
    """Hazard minus the pair's background-only hazard ``exp(-beta_bg)``."""
    if gaps is None:
        gaps = np.arange(beta.kernel.max_shift + 1)
    vec = beta.vector(target, source)
    h = np.exp(-feature_matrix(beta.kernel, gaps) @ vec)
    return h - np.exp(-vec[0])
