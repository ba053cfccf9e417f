"""Online re-planning and re-scheduling against the battery.

Once per re-planning interval the loop

  1. picks the computation-parameter trajectory over a short horizon by
     maximising a quadratic reward subject to the battery power cap
     (receding-horizon schedule),
  2. estimates how long the battery lasts under that schedule,
  3. compares it with the remaining coverage time, and
  4. greedily walks the path parameters up or down in fixed increments so
     the coverage fits into the battery's remaining life.

The schedule problem is transcribed with piecewise-constant controls on the
fine grid.  A parameter change shifts the model's bias coefficient by the
full transformed-power difference (scaled by the period so the output shift
equals the power shift), which makes the predicted output at step k depend
only on the control at step k.  With the cap frozen at the current state of
charge the feasible set is then a per-step box, and projected gradient
ascent with Armijo backtracking solves the resulting box-constrained
quadratic maximisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .battery import BatteryParams, BatteryState, max_deliverable, max_power
from .coverage import ParamVector, Plan
from .energy import HarmonicModel, ScalingFactors, free_output
from .errors import Infeasible, SolverFailure
from .estimator import Estimate


@dataclass(frozen=True, eq=False)
class MpcConfig:
    """Horizon, grids, cost weights and solver knobs for the scheduler.

    The weight matrices act on normalised parameters (0 at the lower bound,
    1 at the upper); the defaults make the reward the squared control alone,
    so maximisation pushes the schedule toward the highest quality the power
    cap admits.
    """

    horizon: float = 6.0
    fine_step: float = 0.01
    replan_step: float = 1.0
    q_weight: np.ndarray | None = None
    q_final: np.ndarray | None = None
    r_weight: np.ndarray | None = None
    solver_tolerance: float = 1e-6
    max_iterations: int = 200
    drain_step: float = 0.25
    max_drain_lookahead: float = 7200.0

    def __post_init__(self):
        if self.horizon <= 0.0 or self.fine_step <= 0.0 or self.replan_step <= 0.0:
            raise ValueError("horizon and step sizes must be positive")
        if self.solver_tolerance <= 0.0:
            raise ValueError("solver tolerance must be positive")
        for name in ("q_weight", "q_final", "r_weight"):
            mat = getattr(self, name)
            if mat is None:
                continue
            mat = np.asarray(mat, dtype=float)
            if not np.allclose(mat, mat.T, atol=1e-12) or np.any(np.linalg.eigvalsh(mat) < -1e-9):
                raise ValueError(f"{name} must be symmetric positive semidefinite")
            object.__setattr__(self, name, mat)

    @property
    def horizon_steps(self) -> int:
        return max(1, round(self.horizon / self.fine_step))


@dataclass(frozen=True, eq=False)
class ScheduleSolution:
    """Solved compute trajectory and the states it drives."""

    compute_traj: np.ndarray  # (K, sigma)
    q_traj: np.ndarray        # (K + 1, m)
    objective: float
    iterations: int


@dataclass(frozen=True, eq=False)
class ReplanDecision:
    """Outcome of one re-planning interval."""

    compute_traj: np.ndarray
    path_params: np.ndarray
    applied_compute: np.ndarray
    t_b: float
    t_r: float
    iterations: int
    infeasible: bool
    t_b_capped: bool = False
    t_r_clamped: bool = False


def _normalise(values, bounds):
    values = np.asarray(values, dtype=float)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return (values - lo) / (hi - lo)


def solve_compute_schedule(
    model: HarmonicModel,
    q_hat: np.ndarray,
    battery_params: BatteryParams,
    battery_state: BatteryState,
    compute_bounds,
    compute_scaling: ScalingFactors,
    cfg: MpcConfig,
    c_prev,
    path_params=(),
    path_bounds=(),
) -> ScheduleSolution:
    """Maximise the schedule reward over the horizon under the power cap.

    Supports one computation parameter (the profiled workload knob).  The
    cap uses the state of charge frozen at its current value, so the output
    constraint reduces to per-step bounds on the control; infeasibility
    means the cap sits below the predicted power at the lowest
    configuration.
    """
    if len(compute_bounds) != 1:
        raise NotImplementedError("scheduler currently handles one compute parameter")
    (lo, hi), = compute_bounds
    nu = float(compute_scaling.nu[0])
    if nu <= 0.0:
        raise ValueError("compute scaling must be increasing (nu > 0)")
    c_prev = float(np.atleast_1d(np.asarray(c_prev, dtype=float))[0])

    k_steps = cfg.horizon_steps
    h = cfg.fine_step
    times = np.arange(k_steps, dtype=float) * h
    y_free = free_output(model, q_hat, times)
    cap = max_power(battery_params, battery_state)

    # per-step admissible interval from the output constraint 0 <= y <= cap
    upper = np.minimum(hi, c_prev + (cap - y_free) / nu)
    lower = np.maximum(lo, c_prev + (0.0 - y_free) / nu)
    slack = 1e-9 * max(hi - lo, 1.0)
    if np.any(lower > upper + slack):
        worst = int(np.argmax(lower - upper))
        raise Infeasible(
            f"power cap {cap:.3f} W below the lowest-configuration power "
            f"{y_free[worst] + nu * (lo - c_prev):.3f} W at step {worst}"
        )
    upper = np.maximum(upper, lower)

    span = hi - lo
    n = model.n
    r_w = cfg.r_weight if cfg.r_weight is not None else np.eye(n)
    q_w = cfg.q_weight
    q_f = cfg.q_final

    path_norm = _normalise(path_params, path_bounds) if len(path_bounds) else np.empty(0)
    bias_gain = model.period * nu  # bias shift per unit of compute parameter

    def state_at(x):
        # predicted states: rotation of the estimate plus the bias shift
        qs = np.empty((k_steps + 1, model.m))
        phis = np.arange(k_steps + 1, dtype=float) * h
        qs[:, 0] = q_hat[0]
        for j in range(1, model.order + 1):
            ang = model.omega * j * phis
            k = 2 * j - 1
            qs[:, k] = q_hat[k] * np.cos(ang) + q_hat[k + 1] * np.sin(ang)
            qs[:, k + 1] = -q_hat[k] * np.sin(ang) + q_hat[k + 1] * np.cos(ang)
        qs[:k_steps, 0] += bias_gain * (x - c_prev)
        qs[k_steps, 0] += bias_gain * (x[-1] - c_prev)
        return qs

    def objective_and_grad(x):
        c_norm = (x - lo) / span
        grad = np.zeros_like(x)
        value = 0.0
        # control reward on the full (path, compute) normalised vector
        full = np.empty((k_steps, n))
        full[:, : len(path_norm)] = path_norm
        full[:, len(path_norm):] = c_norm[:, None]
        rc = full @ r_w
        value += float(np.sum(rc * full))
        grad += 2.0 * rc[:, -1] / span
        if q_w is not None or q_f is not None:
            qs = state_at(x)
            if q_w is not None:
                value += float(np.einsum("ki,ij,kj->", qs[:k_steps], q_w, qs[:k_steps]))
                grad += 2.0 * bias_gain * (qs[:k_steps] @ q_w)[:, 0]
            if q_f is not None:
                value += float(qs[-1] @ q_f @ qs[-1])
                grad[-1] += 2.0 * bias_gain * float((q_f @ qs[-1])[0])
        return value, grad

    def project(x):
        return np.clip(x, lower, upper)

    # start mid-box: the reward gradient vanishes exactly at the lower bound
    x = project(0.5 * (lower + upper))
    value, grad = objective_and_grad(x)
    step_size = 1.0
    iterations = 0
    converged = False
    for iterations in range(1, cfg.max_iterations + 1):
        candidate = project(x + step_size * grad)
        move = candidate - x
        move_norm = float(np.max(np.abs(move))) if move.size else 0.0
        if move_norm <= cfg.solver_tolerance * max(span, 1.0):
            converged = True
            break
        new_value, new_grad = objective_and_grad(candidate)
        if new_value >= value + 1e-4 * float(grad @ move):
            x, value, grad = candidate, new_value, new_grad
            step_size = min(step_size * 2.0, 1e6)
        else:
            step_size *= 0.5
            if step_size < 1e-12:
                converged = True
                break
    if not converged:
        raise SolverFailure(
            f"schedule solver did not converge in {cfg.max_iterations} iterations"
        )
    return ScheduleSolution(
        compute_traj=x.reshape(-1, 1),
        q_traj=state_at(x),
        objective=value,
        iterations=iterations,
    )


def hold_schedule(model: HarmonicModel, q_hat: np.ndarray, cfg: MpcConfig, c_prev) -> ScheduleSolution:
    """Fail-safe schedule: keep the previous compute configuration."""
    c_prev = float(np.atleast_1d(np.asarray(c_prev, dtype=float))[0])
    k_steps = cfg.horizon_steps
    x = np.full(k_steps, c_prev)
    qs = np.empty((k_steps + 1, model.m))
    phis = np.arange(k_steps + 1, dtype=float) * cfg.fine_step
    qs[:, 0] = q_hat[0]
    for j in range(1, model.order + 1):
        ang = model.omega * j * phis
        k = 2 * j - 1
        qs[:, k] = q_hat[k] * np.cos(ang) + q_hat[k + 1] * np.sin(ang)
        qs[:, k + 1] = -q_hat[k] * np.sin(ang) + q_hat[k + 1] * np.cos(ang)
    return ScheduleSolution(compute_traj=x.reshape(-1, 1), q_traj=qs,
                            objective=0.0, iterations=0)


def battery_drain_horizon(
    model: HarmonicModel,
    q_traj: np.ndarray,
    battery_params: BatteryParams,
    soc: float,
    cfg: MpcConfig,
) -> tuple[float, bool]:
    """Seconds until the state of charge hits zero under the planned power.

    Walks the planned states across the horizon at the fine step, then
    propagates the model input-free (bias frozen, harmonics rotating) on a
    coarser grid until exhaustion or the lookahead cap.  Returns (time,
    capped); `capped` is True when the lookahead limit was reached first.
    Loads beyond what the pack can deliver are clamped to the deliverable
    maximum for the purpose of this estimate.
    """
    if soc <= 0.0:
        return 0.0, False
    y_max = max_deliverable(battery_params) * (1.0 - 1e-12)

    def currents(y):
        y = np.clip(y, 0.0, y_max)
        disc = battery_params.v ** 2 - 4.0 * battery_params.resistance * y
        return (battery_params.v - np.sqrt(disc)) / (2.0 * battery_params.resistance)

    rate = battery_params.coeff / battery_params.capacity_as
    h = cfg.fine_step
    k_steps = q_traj.shape[0] - 1
    y_hor = q_traj[:k_steps] @ model.C
    drain = np.cumsum(currents(y_hor)) * rate * h
    crossed = np.nonzero(drain >= soc)[0]
    if crossed.size:
        return float((crossed[0] + 1) * h), False
    soc_left = soc - (drain[-1] if k_steps else 0.0)
    elapsed = k_steps * h

    q_end = q_traj[-1]
    chunk = 2048
    t_local = 0.0
    while elapsed + t_local < cfg.max_drain_lookahead:
        times = t_local + cfg.drain_step * np.arange(1, chunk + 1)
        y = free_output(model, q_end, times)
        drain = np.cumsum(currents(y)) * rate * cfg.drain_step
        crossed = np.nonzero(drain >= soc_left)[0]
        if crossed.size:
            return float(elapsed + times[crossed[0]]), False
        soc_left -= float(drain[-1])
        t_local = float(times[-1])
    return cfg.max_drain_lookahead, True


def remaining_coverage_time(c_path, scaling_path: ScalingFactors, t: float) -> tuple[float, bool]:
    """Time left to finish the coverage at the current path configuration.

    The transformed path parameters sum to the estimated total coverage
    duration; subtracting the elapsed time gives the remainder.  Negative
    remainders clamp to zero with a flag.
    """
    total = float(np.sum(scaling_path.transform(c_path)))
    t_r = total - t
    if t_r < 0.0:
        return 0.0, True
    return t_r, False


def greedy_path_update(c_path, scaling_path: ScalingFactors, t: float, t_b: float,
                       delta: float, bounds) -> np.ndarray:
    """Walk the path parameters in steps of delta to fit the battery life.

    When the remaining coverage time exceeds the battery horizon, every path
    parameter is decreased by delta until the remainder fits in [0, t_b] or
    the lower bounds are reached (then the lower bounds are returned).  In
    the opposite case the parameters are increased symmetrically while the
    remainder stays within the battery horizon and the upper bounds.
    Terminates in at most ceil(bound width / delta) iterations per
    direction.
    """
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    c = np.asarray(c_path, dtype=float).copy()
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    widths = hi - lo
    max_iter = int(math.ceil(float(np.max(widths)) / delta)) + 1

    t_r, _ = remaining_coverage_time(c, scaling_path, t)
    if t_r > t_b:
        for _ in range(max_iter):
            if t_r <= t_b:
                break
            if np.all(c <= lo):
                c = lo.copy()
                break
            c = np.maximum(c - delta, lo)
            t_r, _ = remaining_coverage_time(c, scaling_path, t)
        else:
            c = lo.copy()
        if t_r > t_b:
            c = lo.copy()
        return c
    for _ in range(max_iter):
        candidate = np.minimum(c + delta, hi)
        if np.all(candidate == c):
            break
        t_r_next, _ = remaining_coverage_time(candidate, scaling_path, t)
        if t_r_next > t_b:
            break
        c = candidate
    return c


def round_compute(value: float, bounds, model: HarmonicModel, q_hat: np.ndarray,
                  nu: float, cap: float, c_prev: float) -> int:
    """Round a relaxed compute parameter to a feasible integer.

    Rounds to the nearest integer inside the bounds, then steps down while
    the predicted instantaneous power at the current state exceeds the cap.
    """
    lo, hi = bounds
    c = int(round(value))
    c = max(int(math.ceil(lo)), min(int(math.floor(hi)), c))
    y_now = float(model.C @ q_hat)
    while c > int(math.ceil(lo)) and y_now + nu * (c - c_prev) > cap + 1e-9:
        c -= 1
    return c


def replan_step(
    model: HarmonicModel,
    est: Estimate,
    battery_params: BatteryParams,
    battery_state: BatteryState,
    plan: Plan,
    scaling: ScalingFactors,
    n_path: int,
    path_bounds,
    compute_bounds,
    cfg: MpcConfig,
    c_prev: ParamVector,
    t: float,
    delta: float,
) -> ReplanDecision:
    """One pass of the re-planning-scheduling loop.

    Solves the compute schedule (falling back to holding the previous
    configuration when the problem is infeasible or the solver stalls),
    estimates the battery horizon under the planned power, compares it with
    the remaining coverage time, walks the path parameters accordingly, and
    applies the new first path parameter to the plan's pending turn.
    """
    scaling_path = scaling.slice(0, n_path)
    scaling_comp = scaling.slice(n_path, n_path + len(compute_bounds))
    infeasible = False
    try:
        sol = solve_compute_schedule(
            model, est.q_hat, battery_params, battery_state,
            compute_bounds, scaling_comp, cfg, c_prev.compute,
            path_params=c_prev.path, path_bounds=path_bounds,
        )
    except (Infeasible, SolverFailure):
        infeasible = True
        sol = hold_schedule(model, est.q_hat, cfg, c_prev.compute)

    t_b, capped = battery_drain_horizon(model, sol.q_traj, battery_params,
                                        battery_state.soc, cfg)
    t_r, clamped = remaining_coverage_time(c_prev.path, scaling_path, t)
    new_path = greedy_path_update(c_prev.path, scaling_path, t, t_b, delta, path_bounds)
    if not np.array_equal(new_path, np.asarray(c_prev.path, dtype=float)):
        plan.apply_path_parameter(float(new_path[0]))

    cap = max_power(battery_params, battery_state)
    applied = np.array([
        round_compute(float(sol.compute_traj[0, 0]), compute_bounds[0], model,
                      est.q_hat, float(scaling_comp.nu[0]), cap,
                      float(c_prev.compute[0]))
    ], dtype=float)
    return ReplanDecision(
        compute_traj=sol.compute_traj,
        path_params=new_path,
        applied_compute=applied,
        t_b=t_b,
        t_r=t_r,
        iterations=sol.iterations,
        infeasible=infeasible,
        t_b_capped=capped,
        t_r_clamped=clamped,
    )
