"""Synchronous, bounded, seeded particle swarm optimizer (global-best topology).

Per iteration and per particle/dimension::

    v <- w(t) v + c1 phi1 (pbest - x) + c2 phi2 (gbest - x)
    x <- x + v

followed by clamping ``x`` into ``[lo, hi]`` and zeroing every velocity
component that was clamped. The inertia ``w`` falls linearly from
``omega_start`` at iteration 0 to ``omega_end`` at ``max_iters - 1``.

Random draws come from a single ``numpy.random.Generator`` in a fixed order so
that results never depend on how fitness evaluations are scheduled:

* init: for each particle, ``dims`` position draws then ``dims`` velocity draws;
* step: for each particle, for each dimension, ``phi1`` then ``phi2``.
"""

from __future__ import annotations

import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

Fitness = Callable[[np.ndarray], float]
Bound = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class SwarmConfig:
    dims: int = 1
    pop: int = 20
    lo: Bound = 0.0
    hi: Bound = 2.0
    c1: float = 1.4
    c2: float = 1.4
    omega_start: float = 0.9
    omega_end: float = 0.4
    max_iters: int = 200
    stop_fitness: float = 1e-8
    seed: int = 0
    # thread count for fitness evaluation; never changes results
    workers: int = 1

    def __post_init__(self):
        if int(self.dims) != self.dims or self.dims < 1:
            raise ValueError(f"dims must be a positive integer, got {self.dims}")
        if int(self.pop) != self.pop or self.pop < 2:
            raise ValueError(f"pop must be an integer >= 2, got {self.pop}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")
        lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.dims,)).copy()
        hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.dims,)).copy()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo < hi)):
            raise ValueError("bounds must be finite with lo < hi in every dimension")
        if self.omega_start < self.omega_end:
            raise ValueError("omega_start must be >= omega_end")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be non-negative")
        if not self.stop_fitness >= 0:
            raise ValueError("stop_fitness must be >= 0")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be an unsigned integer, got {self.seed}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def with_dims(self, dims: int) -> "SwarmConfig":
        """Same settings for a different dimension; scalar-like bounds are re-broadcast."""
        lo, hi = self.lo, self.hi
        if dims != self.dims:
            if np.ptp(lo) or np.ptp(hi):
                raise ValueError("per-dimension bounds cannot be resized")
            lo, hi = float(lo[0]), float(hi[0])
        return replace(self, dims=dims, lo=lo, hi=hi)

    def omega(self, it: int) -> float:
        if self.max_iters == 1:
            return self.omega_start
        return self.omega_start - (self.omega_start - self.omega_end) * it / (self.max_iters - 1)


@dataclass(frozen=True)
class Particle:
    x: np.ndarray
    v: np.ndarray
    pbest_x: np.ndarray
    pbest_f: float


@dataclass
class SwarmState:
    """Population as stacked arrays; row i is particle i."""

    x: np.ndarray
    v: np.ndarray
    pbest_x: np.ndarray
    pbest_f: np.ndarray
    gbest_x: np.ndarray
    gbest_f: float
    iter: int = 0
    rng: np.random.Generator = field(default=None, repr=False)

    @property
    def particles(self) -> list[Particle]:
        return [
            Particle(self.x[i].copy(), self.v[i].copy(), self.pbest_x[i].copy(), float(self.pbest_f[i]))
            for i in range(len(self.x))
        ]


def evaluate(fitness: Fitness, X: np.ndarray, workers: int = 1) -> np.ndarray:
    """Fitness of every row of ``X``, in row order."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(fitness, list(X)))
    else:
        vals = [fitness(row) for row in X]
    return np.array(vals, dtype=float)


def _gbest(pbest_x, pbest_f):
    # np.argmin returns the first minimum: lowest index wins exact ties
    i = int(np.argmin(pbest_f))
    return pbest_x[i].copy(), float(pbest_f[i])


def init_swarm(cfg: SwarmConfig, fitness: Fitness, rng: Optional[np.random.Generator] = None) -> SwarmState:
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    span = cfg.hi - cfg.lo
    draws = rng.random((cfg.pop, 2, cfg.dims))
    x = np.clip(cfg.lo + draws[:, 0, :] * span, cfg.lo, cfg.hi)
    v = (draws[:, 1, :] - 0.5) * span
    f = evaluate(fitness, x, cfg.workers)
    if not np.all(np.isfinite(f)):
        raise ValueError("fitness returned a non-finite value inside the box")
    gx, gf = _gbest(x, f)
    return SwarmState(x, v, x.copy(), f, gx, gf, 0, rng)


def step(state: SwarmState, cfg: SwarmConfig, fitness: Fitness) -> SwarmState:
    """One synchronous iteration; ``state`` is left untouched."""
    rng = copy.deepcopy(state.rng)
    phi = rng.random((cfg.pop, cfg.dims, 2))
    w = cfg.omega(state.iter)

    x, v = state.x, state.v
    v_new = (
        w * v
        + cfg.c1 * phi[:, :, 0] * (state.pbest_x - x)
        + cfg.c2 * phi[:, :, 1] * (state.gbest_x - x)
    )
    x_new = x + v_new
    clipped = (x_new < cfg.lo) | (x_new > cfg.hi)
    x_new = np.clip(x_new, cfg.lo, cfg.hi)
    v_new[clipped] = 0.0

    f = evaluate(fitness, x_new, cfg.workers)
    if not np.all(np.isfinite(f)):
        raise ValueError("fitness returned a non-finite value inside the box")
    better = f < state.pbest_f
    pbest_x = np.where(better[:, None], x_new, state.pbest_x)
    pbest_f = np.where(better, f, state.pbest_f)
    gx, gf = _gbest(pbest_x, pbest_f)
    return SwarmState(x_new, v_new, pbest_x, pbest_f, gx, gf, state.iter + 1, rng)


@dataclass(frozen=True)
class SwarmResult:
    best_x: np.ndarray
    best_f: float
    history: np.ndarray  # gbest_f after init, then after every step
    state: SwarmState

    def __iter__(self):
        return iter((self.best_x, self.best_f, self.history))


def run(cfg: SwarmConfig, fitness: Fitness, callback: Optional[Callable[[SwarmState], None]] = None) -> SwarmResult:
    """Iterate until ``max_iters`` steps or ``gbest_f <= stop_fitness``."""
    state = init_swarm(cfg, fitness)
    history = [state.gbest_f]
    while state.iter < cfg.max_iters and state.gbest_f > cfg.stop_fitness:
        state = step(state, cfg, fitness)
        history.append(state.gbest_f)
        if callback is not None:
            callback(state)
    return SwarmResult(state.gbest_x.copy(), state.gbest_f, np.array(history), state)


def sphere(x, center=1.0) -> float:
    return float(np.sum((np.asarray(x) - center) ** 2))

