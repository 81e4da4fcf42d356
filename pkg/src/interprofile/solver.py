"""Projected gradient descent for the per-target subproblems.

Each iteration takes a scaled gradient step, projects onto ``beta >= 0``
with the background coordinates floored at ``BG_FLOOR``, and backtracks until
the Armijo condition holds along the projected path.

The RBF features span five orders of magnitude in ``phi**2``, so plain
gradient steps crawl. Every coordinate is divided by a fixed curvature scale
``sum(n * phi_k**2) / 4`` (the Bernoulli Fisher information at ``H = 1/2``).
A diagonal metric keeps the box projection exact. The first trial step of
each iteration is the Barzilai-Borwein step in that metric (``initial_step``
on the first iteration).
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ObservationSet
from .kernels import BG_FLOOR, BetaMatrix, KernelSpec
from .likelihood import Subproblem, slice_subproblems, value_and_gradient

log = logging.getLogger(__name__)

THREADS_ENV = "INTERPROFILE_THREADS"


class NumericalFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    tolerance: float = 1e-9
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    init_background: float = float(np.log(2.0))
    init_other: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.tolerance <= 0 or self.max_iterations < 1:
            raise ValueError("tolerance must be > 0 and max_iterations >= 1")
        if not (0 < self.armijo_c < 1 and 0 < self.backtrack_factor < 1):
            raise ValueError("armijo_c and backtrack_factor must lie in (0, 1)")
        if self.initial_step <= 0 or self.init_background <= 0 or self.init_other < 0:
            raise ValueError("invalid initial step or initial point")


@dataclass
class SubproblemFit:
    target: int
    params: np.ndarray
    nll: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)


@dataclass
class FitResult:
    beta: BetaMatrix
    final_nll: float
    iterations: dict[int, int]
    converged: dict[int, bool]


def project(params: np.ndarray, dim: int) -> np.ndarray:
    out = np.maximum(params, 0.0)
    out[::dim] = np.maximum(out[::dim], BG_FLOOR)
    return out


def initial_point(sub: Subproblem, kernel: KernelSpec, cfg: SolverConfig) -> np.ndarray:
    x = np.full((sub.source_count, kernel.dimension), cfg.init_other)
    x[:, 0] = cfg.init_background
    return x.ravel()


def coordinate_scale(sub: Subproblem, kernel: KernelSpec) -> np.ndarray:
    phi2 = kernel.features() ** 2
    scale = (0.25 * sub.total @ phi2).ravel()
    return np.maximum(scale, 1e-8 * scale.max())


def _minimize(sub: Subproblem, kernel: KernelSpec, cfg: SolverConfig, x: np.ndarray,
              on_step=None) -> tuple[np.ndarray, float, int, bool]:
    dim = kernel.dimension
    scale = coordinate_scale(sub, kernel)
    f, g = value_and_gradient(sub, x, kernel)
    step = cfg.initial_step
    converged = False
    it = 0
    while it < cfg.max_iterations:
        it += 1
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise NumericalFailure(f"numerical failure in target {sub.target}")
        direction = g / scale
        t = step
        while True:
            x_new = project(x - t * direction, dim)
            move = x_new - x
            if not np.any(move):
                # projected gradient vanishes: stationary point
                converged = True
                break
            f_new, g_new = value_and_gradient(sub, x_new, kernel)
            if f_new <= f + cfg.armijo_c * float(g @ move):
                break
            t *= cfg.backtrack_factor
            if t < 1e-30:
                converged = True
                break
        if converged:
            break
        decrease = f - f_new
        s, y = move, g_new - g
        x, f, g = x_new, f_new, g_new
        if on_step is not None:
            on_step(f)
        if decrease <= cfg.tolerance * max(abs(f), 1.0):
            converged = True
            break
        sy = float(s @ y)
        step = float(s @ (scale * s)) / sy if sy > 0 else cfg.initial_step
        step = min(max(step, 1e-12), 1e12)
    return x, f, it, converged


def fit_subproblem(sub: Subproblem, kernel: KernelSpec, cfg: SolverConfig = SolverConfig(),
                   x0: np.ndarray | None = None, keep_history: bool = False) -> SubproblemFit:
    """Minimise one target's NLL.

    Each source's coefficients only touch that source's cells, so the
    subproblem is solved one source block at a time. Every block gets its
    own step sizes and its own stopping test; a block that drifts toward
    H -> 0 would otherwise stall once its share of the total becomes
    negligible. ``iterations`` is the largest block count and ``history``
    tracks the total NLL as the blocks are solved in turn.
    """
    if sub.source_count == 0 or sub.observation_count == 0:
        raise ValueError("empty subproblem")
    dim = kernel.dimension
    x = project(initial_point(sub, kernel, cfg) if x0 is None else np.array(x0, dtype=float), dim)
    x = x.reshape(sub.source_count, dim)
    blocks = [Subproblem(sub.target, sub.sources[k:k + 1], sub.contagions[k:k + 1], sub.total[k:k + 1])
              for k in range(sub.source_count)]
    values = np.array([value_and_gradient(b, x[k], kernel)[0] for k, b in enumerate(blocks)])
    history = [float(np.sum(values))] if keep_history else []
    iterations, converged = 0, True
    for k, block in enumerate(blocks):
        rest = float(np.sum(values)) - values[k]
        on_step = (lambda f: history.append(rest + f)) if keep_history else None
        x[k], values[k], it, ok = _minimize(block, kernel, cfg, x[k].copy(), on_step)
        iterations = max(iterations, it)
        converged = converged and ok
    return SubproblemFit(sub.target, x.ravel(), float(np.sum(values)), iterations, converged, history)


def _fit_one(args):
    sub, kernel, cfg = args
    try:
        return fit_subproblem(sub, kernel, cfg)
    except Exception as exc:  # re-raised with attribution in fit()
        return exc


def default_workers() -> int:
    value = os.environ.get(THREADS_ENV)
    return max(1, int(value)) if value else 1


def fit(obs: ObservationSet, kernel: KernelSpec, cfg: SolverConfig = SolverConfig(),
        workers: int | None = None) -> FitResult:
    """Fit every target's subproblem; results do not depend on ``workers``."""
    subs = slice_subproblems(obs)
    workers = default_workers() if workers is None else max(1, workers)
    jobs = [(s, kernel, cfg) for s in subs]
    if workers > 1 and len(subs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(subs))) as pool:
            results = list(pool.map(_fit_one, jobs))
    else:
        results = [_fit_one(j) for j in jobs]

    n, dim = obs.entity_count, kernel.dimension
    coefs = np.zeros((n, n, dim))
    coefs[..., 0] = BG_FLOOR
    fitted = np.zeros((n, n), dtype=bool)
    iterations, converged = {}, {}
    nll = 0.0
    for sub, res in zip(subs, results):
        if isinstance(res, Exception):
            raise type(res)(f"target {sub.target}: {res}") from res
        coefs[sub.target, sub.sources] = res.params.reshape(sub.source_count, dim)
        fitted[sub.target, sub.sources] = True
        iterations[sub.target] = res.iterations
        converged[sub.target] = res.converged
        nll += res.nll
        if not res.converged:
            log.warning("target %d stopped at max_iterations=%d", sub.target, cfg.max_iterations)
    return FitResult(BetaMatrix(kernel, coefs, fitted), nll, iterations, converged)
