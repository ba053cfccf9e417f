"""Harmonic state-space model of the robot's total instantaneous power.

The power signal of a repetitive sweep is dominated by a handful of
harmonics of the block period, so the model keeps one slowly-drifting bias
coefficient plus r rotating (cosine, sine) coefficient pairs.  Parameter
changes enter as shifts of the bias through the input matrix; the rotating
pairs are untouched, which keeps their norms exactly conserved.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateBounds,
    InvalidOrder,
    InvalidPeriod,
    LengthMismatch,
    PredictorUndefined,
)


@dataclass(frozen=True)
class HarmonicModel:
    """State-space matrices for a given order, period and parameter split.

    State length is m = 2*order + 1: (bias, cos_1, sin_1, ..., cos_r, sin_r).
    A is block diagonal with skew 2x2 rotation generators, C averages the
    bias and cosine coefficients over one period, and B routes computation
    parameter changes into the bias row only.
    """

    order: int
    period: float
    n_path: int
    n_compute: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def m(self) -> int:
        return 2 * self.order + 1

    @property
    def n(self) -> int:
        return self.n_path + self.n_compute

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period


def harmonic_model(order: int, period: float, n_path: int, n_compute: int) -> HarmonicModel:
    """Build the model matrices for `order` harmonics of `period` seconds."""
    if not isinstance(order, int) or order < 1:
        raise InvalidOrder(f"order must be a positive integer, got {order!r}")
    if period <= 0.0 or not math.isfinite(period):
        raise InvalidPeriod(f"period must be positive and finite, got {period}")
    if n_path < 0 or n_compute < 0:
        raise ValueError("parameter counts must be non-negative")
    m = 2 * order + 1
    n = n_path + n_compute
    omega = 2.0 * math.pi / period
    A = np.zeros((m, m))
    for j in range(1, order + 1):
        k = 2 * j - 1
        A[k, k + 1] = omega * j
        A[k + 1, k] = -omega * j
    C = np.zeros(m)
    C[0] = 1.0
    C[1::2] = 1.0
    C /= period
    B = np.zeros((m, n))
    B[0, n_path:] = 1.0
    return HarmonicModel(order=order, period=float(period), n_path=n_path,
                         n_compute=n_compute, A=A, B=B, C=C)


def with_period(model: HarmonicModel, period: float) -> HarmonicModel:
    """Rebuild the model around a re-estimated period."""
    return harmonic_model(model.order, period, model.n_path, model.n_compute)


def initial_state(a, b) -> np.ndarray:
    """State vector reproducing the series with cosine terms a and sine terms b.

    a has order+1 entries (bias first), b has order entries; the harmonic
    coefficients are halved going into the state.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or len(a) != len(b) + 1:
        raise LengthMismatch(
            f"need len(a) == len(b) + 1, got {len(a)} and {len(b)}"
        )
    q = np.empty(2 * len(b) + 1)
    q[0] = a[0]
    q[1::2] = a[1:] / 2.0
    q[2::2] = b / 2.0
    return q


def transition_matrix(model: HarmonicModel, h: float) -> np.ndarray:
    """Exact state transition over h seconds (identity bias + rotations)."""
    m = model.m
    phi = np.eye(m)
    for j in range(1, model.order + 1):
        ang = model.omega * j * h
        c, s = math.cos(ang), math.sin(ang)
        k = 2 * j - 1
        phi[k, k] = c
        phi[k, k + 1] = s
        phi[k + 1, k] = -s
        phi[k + 1, k + 1] = c
    return phi


def step(model: HarmonicModel, q: np.ndarray, u: np.ndarray | None, h: float,
         phi: np.ndarray | None = None) -> np.ndarray:
    """Advance the state one step of h seconds.

    The rotation part is the exact matrix exponential of A (drift-free); the
    input contributes B @ u * h on the bias row, which is also exact because
    the bias row of A is zero.
    """
    if h <= 0.0:
        raise ValueError(f"step must be positive, got {h}")
    if phi is None:
        phi = transition_matrix(model, h)
    out = phi @ q
    if u is not None:
        u = np.asarray(u, dtype=float)
        if u.shape != (model.n,):
            raise LengthMismatch(f"control must have length {model.n}, got {u.shape}")
        out = out + (model.B @ u) * h
    return out


def output(model: HarmonicModel, q: np.ndarray) -> float:
    """Instantaneous power (watts) read off the state."""
    return float(model.C @ q)


def fourier_power(t, a, b, period: float):
    """Closed-form power signal equivalent to the zero-input model.

    Evaluates bias/period plus each harmonic at gain 1/(2*period), i.e. the
    same normalisation the state-space model applies to the coefficients of
    `initial_state`.  Accepts scalar or array t.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b) + 1:
        raise LengthMismatch(f"need len(a) == len(b) + 1, got {len(a)} and {len(b)}")
    t = np.asarray(t, dtype=float)
    omega = 2.0 * math.pi / period
    out = np.full(t.shape, a[0] / period)
    for j in range(1, len(a)):
        out = out + (a[j] * np.cos(omega * j * t) + b[j - 1] * np.sin(omega * j * t)) / (
            2.0 * period
        )
    if out.ndim == 0:
        return float(out)
    return out


def free_output(model: HarmonicModel, q: np.ndarray, times) -> np.ndarray:
    """Zero-input output over an array of time offsets (vectorised rotations)."""
    times = np.asarray(times, dtype=float)
    out = np.full(times.shape, q[0] / model.period)
    for j in range(1, model.order + 1):
        ang = model.omega * j * times
        k = 2 * j - 1
        out = out + (q[k] * np.cos(ang) + q[k + 1] * np.sin(ang)) / model.period
    return out


@dataclass(frozen=True, eq=False)
class ScalingFactors:
    """Affine maps from raw parameters to time (path) or watts (compute)."""

    nu: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if nu.shape != tau.shape:
            raise LengthMismatch(f"nu {nu.shape} and tau {tau.shape} differ")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "tau", tau)

    def __len__(self):
        return len(self.nu)

    def transform(self, c) -> np.ndarray:
        return self.nu * np.asarray(c, dtype=float) + self.tau

    def slice(self, lo: int, hi: int) -> "ScalingFactors":
        return ScalingFactors(self.nu[lo:hi], self.tau[lo:hi])

    @staticmethod
    def combine(path: "ScalingFactors", compute: "ScalingFactors") -> "ScalingFactors":
        return ScalingFactors(
            np.concatenate([path.nu, compute.nu]),
            np.concatenate([path.tau, compute.tau]),
        )


def path_time_scaling(bounds, t_upper: float, t_lower: float, n_path: int) -> ScalingFactors:
    """Scaling factors sending each path bound interval to coverage times.

    The affine map takes a parameter at its upper bound to t_upper / n_path
    and at its lower bound to t_lower / n_path, so summing the transformed
    parameters estimates the total coverage duration.  t_upper is the
    duration at the upper-bound (tightest sweep) configuration.
    """
    if not (t_upper >= t_lower > 0.0):
        raise DegenerateBounds(
            f"need t_upper >= t_lower > 0, got {t_upper}, {t_lower}"
        )
    nu = []
    tau = []
    for lo, hi in bounds:
        if hi <= lo:
            raise DegenerateBounds(f"bound interval [{lo}, {hi}] has no width")
        nu.append(((t_upper - t_lower) / (hi - lo)) / n_path)
        tau.append((lo * (t_lower - t_upper) / (hi - lo) + t_lower) / n_path)
    return ScalingFactors(np.array(nu), np.array(tau))


def compute_power_scaling(bounds, predictor) -> ScalingFactors:
    """Scaling factors sending each compute bound interval to predicted watts."""
    nu = []
    tau = []
    for lo, hi in bounds:
        if hi <= lo:
            raise DegenerateBounds(f"bound interval [{lo}, {hi}] has no width")
        try:
            g_lo = float(predictor(lo))
            g_hi = float(predictor(hi))
        except Exception as exc:
            raise PredictorUndefined(
                f"predictor failed at bounds [{lo}, {hi}]: {exc}"
            ) from exc
        nu.append((g_hi - g_lo) / (hi - lo))
        tau.append(lo * (g_lo - g_hi) / (hi - lo) + g_lo)
    return ScalingFactors(np.array(nu), np.array(tau))


def control_input(c_prev, c_now, scaling: ScalingFactors) -> np.ndarray:
    """Input vector for a parameter change: the transformed-value difference.

    Adding the same constant to both arguments leaves the result unchanged;
    equal arguments give the zero vector.
    """
    c_prev = np.asarray(c_prev, dtype=float)
    c_now = np.asarray(c_now, dtype=float)
    if c_prev.shape != c_now.shape or c_prev.shape != scaling.nu.shape:
        raise LengthMismatch(
            f"parameter vectors {c_prev.shape}, {c_now.shape} and scaling "
            f"{scaling.nu.shape} disagree"
        )
    return scaling.nu * (c_now - c_prev)


def dump_model_csv(model: HarmonicModel, path):
    """Write the model matrices row by row for offline inspection."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["matrix", "row", *[f"c{i}" for i in range(max(model.m, model.n))]])
        for name, mat in (("A", model.A), ("B", model.B), ("C", model.C.reshape(1, -1))):
            for i, row in enumerate(mat):
                writer.writerow([name, i, *[repr(float(v)) for v in row]])
