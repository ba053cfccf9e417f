"""Kinematic flight simulation, synthetic power sensing, and the run loop.

The vehicle is a constant-airspeed unicycle steered toward a carrot point on
the active stage's path, with the wind vector added to the ground velocity
and the commanded heading crabbed into the wind so the ground track points
at the carrot.  Everything is stepped on the fine grid; re-planning fires on
the coarser re-planning grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .battery import BatteryState, step_soc
from .compute_power import ComputeProfile, predict_power
from .coverage import ParamVector, Stage
from .energy import (
    control_input,
    fourier_power,
    harmonic_model,
    initial_state,
    output,
    transition_matrix,
    with_period,
)
from .errors import ScenarioInvalid, ZeroSoc
from .estimator import Estimate, EstimatorConfig, predict, rescale, update
from .geometry import Point2, from_angle, wrap_angle
from .replanner import replan_step
from .scenario import Scenario

COMPLETED = "Completed"
BATTERY_EXHAUSTED = "BatteryExhausted"
MAX_TIME = "MaxTime"


def follow_path(
    pos: Point2,
    heading: float,
    stage: Stage,
    airspeed: float,
    wind: Point2,
    h: float,
    *,
    lookahead: float = 10.0,
    heading_gain: float = 4.0,
    max_turn_rate: float = 0.7,
) -> tuple[Point2, float]:
    """One kinematic step of carrot-chasing path following.

    The carrot sits `lookahead` metres ahead of the vehicle's projection
    onto the stage's path.  The commanded heading compensates the crosswind
    component so the ground velocity points at the carrot; the heading rate
    is limited to `max_turn_rate`.
    """
    if airspeed <= 0.0:
        raise ValueError(f"airspeed must be positive, got {airspeed}")
    carrot = stage.path.carrot(pos, lookahead)
    to_carrot = carrot - pos
    if to_carrot.norm() < 1e-9:
        track = heading
        w_perp = 0.0
    else:
        track_unit = to_carrot.unit()
        track = math.atan2(track_unit.y, track_unit.x)
        w_perp = track_unit.cross(wind)
    ratio = max(-1.0, min(1.0, w_perp / airspeed))
    theta_cmd = track - math.asin(ratio)
    err = wrap_angle(theta_cmd - heading)
    omega = max(-max_turn_rate, min(max_turn_rate, heading_gain * err))
    new_heading = wrap_angle(heading + omega * h)
    vel = from_angle(new_heading, airspeed) + wind
    return pos + vel.scaled(h), new_heading


def synth_power(
    t: float,
    fourier_a,
    fourier_b,
    period: float,
    profile: ComputeProfile,
    c: ParamVector,
    noise_sigma: float,
    rng: np.random.Generator,
) -> float:
    """Synthetic power-sensor reading: truth harmonics + compute + noise."""
    y = fourier_power(t, fourier_a, fourier_b, period)
    y += predict_power(profile, float(c.compute[0]))
    if noise_sigma > 0.0:
        y += noise_sigma * rng.standard_normal()
    return float(y)


@dataclass
class Telemetry:
    """Per-fine-step simulation record plus run metadata."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    stage: np.ndarray
    upsilon_w: np.ndarray
    y_hat_w: np.ndarray
    soc: np.ndarray
    soc_drop: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    t_b: np.ndarray
    t_r: np.ndarray
    solver_iters: np.ndarray
    infeasible_flag: np.ndarray
    q_hat: np.ndarray
    termination: str
    fine_step: float
    replan_every: int
    path_bounds: tuple
    compute_bounds: tuple

    def __len__(self):
        return len(self.t)

    @property
    def final_soc(self) -> float:
        return float(self.soc[-1])

    def replan_rows(self) -> np.ndarray:
        return np.arange(0, len(self.t), self.replan_every)

    def header(self) -> list[str]:
        m = self.q_hat.shape[1]
        return ["t", "x", "y", "stage", "upsilon_w", "y_hat_w", "soc", "soc_drop",
                "c1", "c2", "t_b", "t_r", "solver_iters", "infeasible_flag",
                *[f"q{i}" for i in range(m)]]

    def write_csv(self, path):
        cols = [self.t, self.x, self.y, self.stage, self.upsilon_w, self.y_hat_w,
                self.soc, self.soc_drop, self.c1, self.c2, self.t_b, self.t_r,
                self.solver_iters, self.infeasible_flag]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            for i in range(len(self.t)):
                row = [repr(float(col[i])) for col in cols]
                row[3] = str(int(self.stage[i]))
                row[12] = str(int(self.solver_iters[i]))
                row[13] = str(int(self.infeasible_flag[i]))
                row.extend(repr(float(v)) for v in self.q_hat[i])
                writer.writerow(row)


def performance_metric(telemetry: Telemetry, w1: float = 0.5, w2: float = 0.5,
                       soc_final: float | None = None) -> float:
    """Time-averaged weighted normalised parameters over the final charge.

    Samples the re-planning grid, normalises each parameter over its bound
    interval, and divides the weighted average by the final state of charge
    (both sides are unitless ratios, so percent or fraction give the same
    number).  Undefined for an exhausted battery.
    """
    if w1 + w2 <= 0.0:
        raise ValueError("weights must sum to a positive value")
    if soc_final is None:
        soc_final = telemetry.final_soc
    if soc_final <= 0.0:
        raise ZeroSoc("performance metric undefined at zero final state of charge")
    rows = telemetry.replan_rows()
    lo1, hi1 = telemetry.path_bounds[0]
    lo2, hi2 = telemetry.compute_bounds[0]
    c1n = (telemetry.c1[rows] - lo1) / (hi1 - lo1)
    c2n = (telemetry.c2[rows] - lo2) / (hi2 - lo2)
    return float(np.mean(w1 * c1n + w2 * c2n) / soc_final)


def run_scenario(scenario: Scenario, adaptive: bool = False) -> Telemetry:
    """Simulate one flight and return its telemetry.

    Builds the plan, steps the vehicle, battery, sensor and filter on the
    fine grid, applies battery-event charge drops, and (when adaptive) runs
    the re-planning-scheduling loop on the re-planning grid.  The run ends
    at the plan's final point, at battery exhaustion, or at the time cap.
    """
    sc = scenario
    h = sc.mpc.fine_step
    profile = sc.load_profile()
    scaling = sc.scaling()
    n_path = len(sc.path_bounds)
    plan = sc.build_plan()

    model = harmonic_model(sc.order, sc.period, n_path, len(sc.compute_bounds))
    q0 = initial_state(sc.guess_a, sc.guess_b)
    q0[0] += model.period * predict_power(profile, float(sc.initial_params.compute[0]))
    est_cfg = EstimatorConfig.from_signal(
        output(model, q0), model.period, model.m,
        process_scale=sc.process_scale,
        measurement_frac=sc.measurement_frac,
        prior_frac=sc.prior_frac,
    )
    est = Estimate.from_config(model, q0, est_cfg)
    phi = transition_matrix(model, h)

    battery = BatteryState(sc.soc0)
    rng = np.random.default_rng(sc.seed)
    pos = sc.start
    first = plan.stages[0]
    heading = math.atan2(first.path.direction.y, first.path.direction.x)
    c = sc.initial_params
    pending_u = None

    lookahead = sc.lookahead if sc.lookahead is not None else 0.4 * sc.min_radius
    max_turn = sc.airspeed / sc.min_radius
    wind = sc.wind_vector
    replan_every = max(1, round(sc.mpc.replan_step / h))
    t_upper, _ = sc.coverage_durations()
    max_time = sc.max_time if sc.max_time is not None else 4.0 * t_upper
    events = [(round(t_ev / h), drop) for t_ev, drop in sc.battery_events]

    rows: list[list[float]] = []
    q_rows: list[np.ndarray] = []
    t_b = math.nan
    t_r = math.nan
    solver_iters = 0
    infeasible = 0
    block_marks = [0.0]
    termination = MAX_TIME

    k = 0
    while True:
        t = k * h
        if t > max_time:
            termination = MAX_TIME
            break

        drop = sum(d for step_idx, d in events if step_idx == k)
        if drop:
            battery = BatteryState(max(0.0, battery.soc - drop))

        if adaptive and k % replan_every == 0:
            decision = replan_step(
                model, est, sc.battery, battery, plan, scaling, n_path,
                sc.path_bounds, sc.compute_bounds, sc.mpc, c, t, sc.delta,
            )
            t_b, t_r = decision.t_b, decision.t_r
            solver_iters = decision.iterations
            infeasible = int(decision.infeasible)
            c_new = ParamVector(
                path=tuple(float(v) for v in decision.path_params),
                compute=tuple(float(v) for v in decision.applied_compute),
            )
            if c_new != c:
                u = control_input(c.full, c_new.full, scaling)
                pending_u = u * (model.period / h)
                c = c_new

        ups = synth_power(t, sc.fourier_a, sc.fourier_b, sc.period, profile, c,
                          sc.noise_sigma, rng)
        est = predict(model, est, pending_u, h, est_cfg, phi)
        pending_u = None
        est = update(model, est, ups, est_cfg)

        load = fourier_power(t, sc.fourier_a, sc.fourier_b, sc.period) \
            + predict_power(profile, float(c.compute[0]))
        battery = step_soc(sc.battery, battery, load, h)

        rows.append([t, pos.x, pos.y, float(plan.current_index), ups, est.y_hat,
                     battery.soc, drop, c.path[0], c.compute[0], t_b, t_r,
                     float(solver_iters), float(infeasible)])
        q_rows.append(est.q_hat.copy())

        if battery.soc <= 0.0:
            termination = BATTERY_EXHAUSTED
            break

        pos, heading = follow_path(
            pos, heading, plan.current_stage, sc.airspeed, wind, h,
            lookahead=lookahead, heading_gain=sc.heading_gain,
            max_turn_rate=max_turn,
        )
        prev_idx = plan.current_index
        plan.step_to(pos)
        if plan.completed:
            termination = COMPLETED
            break
        if plan.current_index != prev_idx and plan.current_stage.phase == 0:
            block_marks.append(t)
            if len(block_marks) >= 2:
                t_new = block_marks[-1] - block_marks[-2]
                if t_new > 0.0:
                    ratio = t_new / model.period
                    model = with_period(model, t_new)
                    est = rescale(est, ratio, model)
                    phi = transition_matrix(model, h)
        k += 1

    data = np.array(rows, dtype=float)
    if data.size == 0:
        raise ScenarioInvalid("simulation produced no telemetry")
    return Telemetry(
        t=data[:, 0], x=data[:, 1], y=data[:, 2], stage=data[:, 3],
        upsilon_w=data[:, 4], y_hat_w=data[:, 5], soc=data[:, 6],
        soc_drop=data[:, 7], c1=data[:, 8], c2=data[:, 9],
        t_b=data[:, 10], t_r=data[:, 11], solver_iters=data[:, 12],
        infeasible_flag=data[:, 13], q_hat=np.array(q_rows),
        termination=termination, fine_step=h, replan_every=replan_every,
        path_bounds=sc.path_bounds, compute_bounds=sc.compute_bounds,
    )
