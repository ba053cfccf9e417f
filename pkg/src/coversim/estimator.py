"""Kalman filter over the harmonic power model with a scalar power sensor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import HarmonicModel, output, transition_matrix


@dataclass(frozen=True, eq=False)
class EstimatorConfig:
    """Noise covariances of the filter.

    process_noise is a continuous-time intensity (contributes Q * h per
    step); measurement_noise is the variance of the scalar power reading.
    """

    process_noise: np.ndarray
    measurement_noise: float
    initial_covariance: np.ndarray

    def __post_init__(self):
        if self.measurement_noise <= 0.0:
            raise ValueError("measurement noise variance must be positive")
        for name in ("process_noise", "initial_covariance"):
            mat = np.asarray(getattr(self, name), dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"{name} must be a square matrix")
            if not np.allclose(mat, mat.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            if np.any(np.linalg.eigvalsh(mat) < -1e-9):
                raise ValueError(f"{name} must be positive semidefinite")
            object.__setattr__(self, name, mat)

    @staticmethod
    def from_signal(mean_power: float, period: float, m: int,
                    process_scale: float = 1e-4,
                    measurement_frac: float = 0.01,
                    prior_frac: float = 0.2) -> "EstimatorConfig":
        """Defaults scaled to the expected signal power level."""
        p = max(abs(mean_power), 1.0)
        q = process_scale * p * p * np.eye(m)
        r = (measurement_frac * p) ** 2
        p0 = (prior_frac * p * period) ** 2 / m * np.eye(m)
        return EstimatorConfig(process_noise=q, measurement_noise=r,
                               initial_covariance=p0)


@dataclass(frozen=True, eq=False)
class Estimate:
    """Filter state: mean, covariance, and the implied power output."""

    q_hat: np.ndarray
    covariance: np.ndarray
    y_hat: float

    @staticmethod
    def from_config(model: HarmonicModel, q0: np.ndarray, cfg: EstimatorConfig) -> "Estimate":
        return Estimate(q_hat=np.asarray(q0, dtype=float),
                        covariance=cfg.initial_covariance.copy(),
                        y_hat=output(model, q0))


def predict(model: HarmonicModel, est: Estimate, u, h: float, cfg: EstimatorConfig,
            phi: np.ndarray | None = None) -> Estimate:
    """Time update: exact rotation of the mean plus input on the bias row.

    The transition is orthogonal, so with zero process noise the covariance
    trace is preserved exactly.
    """
    if phi is None:
        phi = transition_matrix(model, h)
    q = phi @ est.q_hat
    if u is not None:
        q = q + (model.B @ np.asarray(u, dtype=float)) * h
    p = phi @ est.covariance @ phi.T + cfg.process_noise * h
    return Estimate(q_hat=q, covariance=p, y_hat=output(model, q))


def update(model: HarmonicModel, est: Estimate, measurement: float,
           cfg: EstimatorConfig) -> Estimate:
    """Scalar measurement update in Joseph form (keeps covariance symmetric)."""
    c = model.C
    p = est.covariance
    s = float(c @ p @ c) + cfg.measurement_noise
    k = (p @ c) / s
    innovation = measurement - float(c @ est.q_hat)
    q = est.q_hat + k * innovation
    ikc = np.eye(model.m) - np.outer(k, c)
    p_new = ikc @ p @ ikc.T + cfg.measurement_noise * np.outer(k, k)
    return Estimate(q_hat=q, covariance=p_new, y_hat=output(model, q))


def rescale(est: Estimate, ratio: float, model: HarmonicModel) -> Estimate:
    """Rescale the state after a period change so the power output is kept.

    The output gain is 1/period, so multiplying the state (and covariance
    quadratically) by the period ratio leaves y_hat unchanged through the
    rebuild.
    """
    q = est.q_hat * ratio
    return Estimate(q_hat=q, covariance=est.covariance * ratio * ratio,
                    y_hat=output(model, q))
