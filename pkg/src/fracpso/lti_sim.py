"""Integer-order transfer functions ``1 / (c_m s^m + ... + c_1 s + c_0)``.

Candidates are realized in controllable companion form and integrated with
classical fixed-step RK4, the input being linearly interpolated between
samples. Because the system is LTI, the RK4 substeps of one sample interval
compose into an exact affine map

    x_{k+1} = P x_k + q0 u_k + q1 u_{k+1}

which is then run over the whole record with :func:`scipy.signal.lfilter`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal as sps

from .gl_core import Signal, SimulationError

LEADING_TOL = 1e-6
OVERFLOW_BOUND = 1e12


class DegenerateLeadingCoefficient(SimulationError):
    pass


class UnstableBlowUp(SimulationError):
    pass


@dataclass(frozen=True)
class PolynomialTF:
    """Unit-numerator TF; ``coeffs[p]`` multiplies ``s**p``."""

    coeffs: np.ndarray = field()

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            raise ValueError("need at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_powers(cls, powers: Sequence[int], values: Sequence[float]) -> "PolynomialTF":
        c = np.zeros(max(powers) + 1)
        for p, v in zip(powers, values):
            c[p] += v
        return cls(c)

    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def __str__(self):
        parts = [f"{c:g}*s^{p}" for p, c in reversed(list(enumerate(self.coeffs)))]
        return "1/(" + " + ".join(parts) + ")"


@dataclass(frozen=True)
class CompanionSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    gain: float = 0.0  # direct feedthrough, only nonzero for degree 0

    @property
    def n_states(self) -> int:
        return self.A.shape[0]


def to_state_space(tf: PolynomialTF, leading_tol: float = LEADING_TOL) -> CompanionSystem:
    """Controllable companion realization, normalized by the leading coefficient.

    States are ``y, y', ..., y^(n-1)``. A degree-0 TF becomes a static gain
    with an empty state.
    """
    n = tf.degree()
    c = tf.coeffs
    lead = c[n]
    if abs(lead) < leading_tol:
        raise DegenerateLeadingCoefficient(
            f"leading coefficient {lead!r} of s^{n} is below tolerance {leading_tol}"
        )
    if n == 0:
        return CompanionSystem(np.zeros((0, 0)), np.zeros(0), np.zeros(0), 1.0 / lead)
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -c[:n] / lead
    B = np.zeros(n)
    B[-1] = 1.0 / lead
    C = np.zeros(n)
    C[0] = 1.0
    return CompanionSystem(A, B, C)


def rk4_step_map(sys: CompanionSystem, dt: float, substeps: int = 1):
    """Affine RK4 map over one sample interval: returns ``(P, q0, q1)``.

    The derivation works on an augmented basis ``(x, u_k, u_{k+1})`` so the
    linear input interpolation is carried through every RK4 stage.
    """
    n = sys.n_states
    h = dt / substeps
    A = sys.A
    B = sys.B[:, None]

    def u_row(s):
        # input at fraction s of the sample interval
        row = np.zeros((1, n + 2))
        row[0, n] = 1.0 - s
        row[0, n + 1] = s
        return row

    def f(M, s):
        return A @ M + B @ u_row(s)

    M = np.zeros((n, n + 2))
    M[:, :n] = np.eye(n)
    for i in range(substeps):
        s0 = i / substeps
        s1 = (i + 1) / substeps
        sm = 0.5 * (s0 + s1)
        k1 = f(M, s0)
        k2 = f(M + 0.5 * h * k1, sm)
        k3 = f(M + 0.5 * h * k2, sm)
        k4 = f(M + h * k3, s1)
        M = M + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return M[:, :n], M[:, n], M[:, n + 1]


def _run_affine(P, q0, q1, uv):
    """Iterate ``x_{k+1} = P x_k + q0 u_k + q1 u_{k+1}`` from ``x_0 = 0``.

    With the Faddeev-LeVerrier expansion ``adj(zI - P) = sum_k M_k z^(n-1-k)``
    every state is an FIR combination of one all-pole filtered drive, so a
    single ``lfilter`` call covers the whole record.
    """
    n = P.shape[0]
    N = len(uv)
    den = np.ones(n + 1)
    M = np.eye(n)
    taps = []
    for k in range(1, n + 1):
        taps.append(np.column_stack([M @ q0, M @ q1]))  # tap k-1, shape (n, 2)
        PM = P @ M
        den[k] = -np.trace(PM) / k
        M = PM + den[k] * np.eye(n)
    # u_N is unknown, but it would only reach x_{N}, which is not stored
    drive = np.vstack([uv, np.append(uv[1:], 0.0)])
    with np.errstate(all="ignore"):
        Z = sps.lfilter([1.0], den, drive, axis=-1)
        X = np.zeros((N, n))
        for k, T in enumerate(taps):
            if k + 1 < N:
                X[k + 1 :] += Z[:, : N - k - 1].T @ T.T
    return X


def simulate_states(
    sys: CompanionSystem,
    u: Signal,
    substeps: int = 1,
    overflow: float = OVERFLOW_BOUND,
) -> np.ndarray:
    """State trajectory, shape ``(n_samples, n_states)``, from zero initial state."""
    P, q0, q1 = rk4_step_map(sys, u.grid.dt, substeps)
    X = _run_affine(P, q0, q1, u.values)
    if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > overflow:
        raise UnstableBlowUp(f"state magnitude exceeded {overflow:g}")
    return X


def simulate_integer(
    tf: PolynomialTF,
    u: Signal,
    leading_tol: float = LEADING_TOL,
    substeps: int = 1,
    overflow: float = OVERFLOW_BOUND,
) -> Signal:
    """Response of ``tf`` to the sampled input ``u`` (zero initial state).

    Raises:
        DegenerateLeadingCoefficient: leading coefficient below ``leading_tol``.
        UnstableBlowUp: some state exceeded ``overflow`` in magnitude.
    """
    sys = to_state_space(tf, leading_tol)
    if sys.n_states == 0:
        return Signal(u.grid, u.values * sys.gain)
    X = simulate_states(sys, u, substeps, overflow)
    return Signal(u.grid, X @ sys.C)


def poles(tf: PolynomialTF, leading_tol: float = LEADING_TOL) -> np.ndarray:
    sys = to_state_space(tf, leading_tol)
    return np.linalg.eigvals(sys.A) if sys.n_states else np.zeros(0)


def is_stable(tf: PolynomialTF) -> bool:
    p = poles(tf)
    return bool(np.all(p.real < 0)) if p.size else math.isfinite(tf.coeffs[0])
