"""Variable coverage-path planning with energy-aware in-flight re-scheduling.

The package provides a sweep planner over convex polygons, a harmonic model
of the total power draw, a battery equivalent circuit, a Kalman filter over
the power model, the receding-horizon re-planning-scheduling loop, and a
scenario-driven flight simulator with a CLI.
"""

__version__ = "0.1.0"

from .battery import BatteryParams, BatteryState, internal_current, max_power, soc_rate, step_soc
from .compute_power import ComputeProfile, Knot, load_profile, measured_power, predict_power
from .coverage import (
    Circle,
    Line,
    Orientation,
    ParamVector,
    Plan,
    Stage,
    back_turn_circle,
    forward_turn_radius,
    generate_plan,
    primitive_offsets,
    stage_transition,
    turn_radius,
)
from .energy import (
    HarmonicModel,
    ScalingFactors,
    compute_power_scaling,
    control_input,
    fourier_power,
    harmonic_model,
    initial_state,
    output,
    path_time_scaling,
    step,
    transition_matrix,
    with_period,
)
from .estimator import Estimate, EstimatorConfig, predict, update
from .geometry import Point2, Polygon
from .replanner import (
    MpcConfig,
    ReplanDecision,
    ScheduleSolution,
    battery_drain_horizon,
    greedy_path_update,
    remaining_coverage_time,
    replan_step,
    solve_compute_schedule,
)
from .scenario import Scenario, load_scenario
from .simulator import Telemetry, follow_path, performance_metric, run_scenario, synth_power

__all__ = [
    "BatteryParams", "BatteryState", "internal_current", "max_power", "soc_rate",
    "step_soc", "ComputeProfile", "Knot", "load_profile", "measured_power",
    "predict_power", "Circle", "Line", "Orientation", "ParamVector", "Plan",
    "Stage", "back_turn_circle", "forward_turn_radius", "generate_plan",
    "primitive_offsets", "stage_transition", "turn_radius", "HarmonicModel",
    "ScalingFactors", "compute_power_scaling", "control_input", "fourier_power",
    "harmonic_model", "initial_state", "output", "path_time_scaling", "step",
    "transition_matrix", "with_period", "Estimate", "EstimatorConfig", "predict",
    "update", "Point2", "Polygon", "MpcConfig", "ReplanDecision",
    "ScheduleSolution", "battery_drain_horizon", "greedy_path_update",
    "remaining_coverage_time", "replan_step", "solve_compute_schedule",
    "Scenario", "load_scenario", "Telemetry", "follow_path",
    "performance_metric", "run_scenario", "synth_power",
]
