"""Grünwald-Letnikov weights, discrete differintegration and fractional simulation.

A fractional-order transfer function here always has a unit numerator::

    G(s) = 1 / (a_1 s^alpha_1 + a_2 s^alpha_2 + ... + a_n s^alpha_n)

Each ``s^alpha`` term is discretized with the GL backward sum

    D^alpha y(t_k) ~= dt^-alpha * sum_{j=0}^{J} w_j y(t_{k-j})

and the resulting linear relation is solved for ``y_k`` at every step. All
samples before ``t = 0`` are zero (system at rest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

FULL = "full"
MemoryLen = Union[float, str]


class SimulationError(RuntimeError):
    """A time-domain simulation could not produce finite output."""


@dataclass(frozen=True)
class FractionalTerm:
    coeff: float
    order: float

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise ValueError(f"term coefficient must be finite, got {self.coeff}")
        if not math.isfinite(self.order) or self.order < 0:
            raise ValueError(f"term order must be finite and >= 0, got {self.order}")


@dataclass(frozen=True)
class FractionalTF:
    """Denominator terms sorted by strictly descending order.

    Use :meth:`from_pairs` to build one from unsorted ``(coeff, order)`` pairs;
    terms sharing an order are merged by summing their coefficients.
    """

    terms: tuple[FractionalTerm, ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a transfer function needs at least one term")
        orders = [t.order for t in self.terms]
        if any(a <= b for a, b in zip(orders, orders[1:])):
            raise ValueError("terms must have strictly descending, distinct orders")
        if self.terms[0].coeff == 0:
            raise ValueError("the highest-order term has a zero coefficient")

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "FractionalTF":
        merged: dict[float, float] = {}
        for coeff, order in pairs:
            FractionalTerm(float(coeff), float(order))  # validates
            merged[float(order)] = merged.get(float(order), 0.0) + float(coeff)
        terms = tuple(FractionalTerm(merged[o], o) for o in sorted(merged, reverse=True))
        return cls(terms)

    @property
    def orders(self) -> list[float]:
        return [t.order for t in self.terms]

    @property
    def coeffs(self) -> list[float]:
        return [t.coeff for t in self.terms]

    def is_integer_order(self) -> bool:
        return all(float(o).is_integer() for o in self.orders)

    def to_pairs(self) -> list[tuple[float, float]]:
        return [(t.coeff, t.order) for t in self.terms]

    def __str__(self):
        parts = [f"{t.coeff:g}*s^{t.order:g}" for t in self.terms]
        return "1/(" + " + ".join(parts) + ")"


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_samples: int

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise ValueError(f"n_samples must be an integer >= 2, got {self.n_samples}")

    @classmethod
    def from_horizon(cls, dt: float, t_end: float) -> "TimeGrid":
        """Grid ``t_k = k*dt`` with ``round(t_end/dt)`` samples."""
        return cls(dt, int(round(t_end / dt)))

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    @property
    def t_end(self) -> float:
        return self.n_samples * self.dt


@dataclass(frozen=True)
class Signal:
    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_samples,):
            raise ValueError(
                f"signal has {values.shape} samples, grid expects {self.grid.n_samples}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("signal values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    def __len__(self):
        return self.grid.n_samples


@dataclass(frozen=True)
class GlWeights:
    order: float
    w: np.ndarray = field(repr=False)


def gl_weights(order: float, count: int) -> GlWeights:
    """Return GL weights ``w[0..count]`` for a non-negative order.

    Uses the recursion ``w_0 = 1``, ``w_j = (1 - (1 + order)/j) * w_{j-1}``.
    For integer orders the factor hits exactly zero at ``j = order + 1``, so
    every later weight is an exact 0.0.
    """
    return _weights(order, count, allow_negative=False)


def _weights(order: float, count: int, allow_negative: bool) -> GlWeights:
    if not math.isfinite(order) or (order < 0 and not allow_negative):
        raise ValueError(f"order must be finite and >= 0, got {order}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    w = np.empty(count + 1)
    w[0] = 1.0
    for j in range(1, count + 1):
        w[j] = (1.0 - (1.0 + order) / j) * w[j - 1]
    w.setflags(write=False)
    return GlWeights(float(order), w)


def _memory_terms(grid: TimeGrid, memory_len: MemoryLen) -> int:
    """Largest lag index reachable by the GL sum."""
    full = grid.n_samples - 1
    if memory_len == FULL or memory_len is None:
        return full
    memory_len = float(memory_len)
    if not (math.isfinite(memory_len) and memory_len > 0):
        raise ValueError(f"memory_len must be positive or 'full', got {memory_len}")
    # small slack so L = k*dt is not lost to rounding
    return min(full, int(math.floor(memory_len / grid.dt + 1e-9)))


def gl_differintegral(x: Signal, order: float, memory_len: MemoryLen = FULL) -> Signal:
    """Apply the GL differintegral of ``order`` to a sampled signal.

    Positive orders differentiate, zero is the identity and negative orders
    integrate. The sum reaches back ``memory_len`` seconds (or to t=0 for
    ``"full"``) with zero pre-history.
    """
    if not math.isfinite(order):
        raise ValueError(f"order must be finite, got {order}")
    if order == 0:
        return x
    J = _memory_terms(x.grid, memory_len)
    w = _weights(order, J, allow_negative=True).w
    xv = x.values
    n = len(xv)
    y = np.zeros(n)
    for j in range(J + 1):
        y[j:] += w[j] * xv[: n - j]
    y *= x.grid.dt ** (-order)
    return Signal(x.grid, y)


def simulate_fractional(
    tf: FractionalTF,
    u: Signal,
    memory_len: MemoryLen = FULL,
    denom_tol: float = 1e-12,
) -> Signal:
    """Simulate ``y = G(s) u`` with the implicit GL stepping scheme.

    At step k the discretized equation ``sum_i a_i D^alpha_i y = u`` is solved
    for ``y_k``::

        y_k = (u_k - sum_i a_i dt^-alpha_i sum_{j>=1} w_j^(i) y_{k-j})
              / sum_i a_i dt^-alpha_i

    When the highest order is positive the system is strictly proper and
    ``y_0`` is pinned to 0 (at rest); the solve then starts at k = 1. A pure
    static gain is solved from k = 0, giving ``y = u / a``.

    Raises:
        SimulationError: if the step denominator is below ``denom_tol`` in
            magnitude or the output stops being finite.
    """
    grid = u.grid
    dt = grid.dt
    n = grid.n_samples
    J = _memory_terms(grid, memory_len)

    scales = np.array([t.coeff * dt ** (-t.order) for t in tf.terms])
    denom = float(scales.sum())
    if not math.isfinite(denom) or abs(denom) < denom_tol:
        raise SimulationError(f"degenerate step denominator {denom!r}")

    # order-0 terms have w = [1, 0, 0, ...] and drop out of the history sum
    dyn = [(s, t.order) for s, t in zip(scales, tf.terms) if t.order != 0]
    if dyn:
        combined = np.zeros(J + 1)
        for s, order in dyn:
            combined += s * gl_weights(order, J).w
        hist = combined[1:]
    else:
        hist = np.zeros(0)

    uv = u.values
    y = np.zeros(n)
    # a strictly proper system at rest cannot jump: y(0) = 0 for bounded input
    start = 1 if tf.terms[0].order > 0 else 0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(start, n):
            m = min(k, J)
            acc = 0.0
            if m and hist.size:
                # pairs w_j with y_{k-j}, j = 1..m
                acc = float(np.dot(hist[:m], y[k - m : k][::-1]))
            y[k] = (uv[k] - acc) / denom
            if not math.isfinite(y[k]):
                raise SimulationError(f"non-finite output at step {k}")
    return Signal(grid, y)
