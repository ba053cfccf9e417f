"""Scenario files: flat key = value text describing one simulated flight.

Grammar: one `key = value` pair per line, `#` starts a comment, values are
Python literals (numbers, strings, nested lists).  Dotted keys group related
settings; unknown keys are rejected so typos fail loudly.  See the fixtures
shipped in the repository for complete examples.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .battery import BatteryParams
from .compute_power import ComputeProfile, load_profile
from .coverage import ParamVector, Plan, generate_plan
from .energy import ScalingFactors, compute_power_scaling, path_time_scaling
from .errors import ParseError, ScenarioInvalid
from .geometry import Point2, Polygon
from .replanner import MpcConfig

_KNOWN_KEYS = {
    "name", "polygon", "seed", "airspeed", "max_time",
    "plan.radius", "plan.min_radius", "plan.shift", "plan.start",
    "plan.altitude", "plan.epsilon",
    "bounds.path", "bounds.compute",
    "initial.params",
    "wind.speed", "wind.direction_deg",
    "battery.v", "battery.vs", "battery.rr", "battery.qc_ah", "battery.kb",
    "battery.soc0", "battery.events",
    "fourier.period", "fourier.a", "fourier.b",
    "estimator.guess_a", "estimator.guess_b", "estimator.guess_scale",
    "estimator.process_scale", "estimator.measurement_frac", "estimator.prior_frac",
    "compute.profile",
    "noise.sigma",
    "mpc.horizon", "mpc.fine_step", "mpc.replan_step", "mpc.solver_tolerance",
    "mpc.max_iterations", "mpc.drain_step", "mpc.max_drain_lookahead",
    "greedy.delta",
    "metric.w1", "metric.w2",
    "model.order",
    "tracker.lookahead", "tracker.heading_gain",
}


def _parse_kv(path: Path) -> dict:
    values: dict = {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioInvalid(f"cannot read scenario {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ScenarioInvalid(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = ast.literal_eval(rhs.strip())
        except (ValueError, SyntaxError) as exc:
            raise ParseError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


@dataclass
class Scenario:
    """Everything one simulated flight needs, plus cached derived data."""

    name: str
    polygon: Polygon
    radius: float
    min_radius: float
    shift: Point2
    start: Point2
    altitude: float
    epsilon: float | None
    path_bounds: tuple
    compute_bounds: tuple
    initial_params: ParamVector
    airspeed: float
    wind_speed: float
    wind_direction_deg: float
    battery: BatteryParams
    soc0: float
    battery_events: tuple
    period: float
    fourier_a: np.ndarray
    fourier_b: np.ndarray
    guess_a: np.ndarray
    guess_b: np.ndarray
    profile_path: Path
    noise_sigma: float
    seed: int
    order: int = 3
    mpc: MpcConfig = field(default_factory=MpcConfig)
    delta: float = 250.0
    w1: float = 0.5
    w2: float = 0.5
    max_time: float | None = None
    process_scale: float = 1e-4
    measurement_frac: float = 0.01
    prior_frac: float = 0.2
    lookahead: float | None = None
    heading_gain: float = 4.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.airspeed <= self.wind_speed:
            raise ScenarioInvalid(
                f"airspeed {self.airspeed} must exceed wind speed {self.wind_speed}"
            )
        if not 0.0 <= self.soc0 <= 1.0:
            raise ScenarioInvalid(f"initial state of charge {self.soc0} outside [0, 1]")
        times = [t for t, _ in self.battery_events]
        if times != sorted(times):
            raise ScenarioInvalid("battery events must be sorted by time")
        if len(self.fourier_a) != self.order + 1 or len(self.fourier_b) != self.order:
            raise ScenarioInvalid(
                f"fourier coefficients must have {self.order + 1} cosine and "
                f"{self.order} sine entries"
            )
        if len(self.initial_params.path) != len(self.path_bounds) or \
                len(self.initial_params.compute) != len(self.compute_bounds):
            raise ScenarioInvalid("initial parameters do not match the bounds")

    @property
    def wind_vector(self) -> Point2:
        theta = np.deg2rad(self.wind_direction_deg)
        return Point2(self.wind_speed * float(np.cos(theta)),
                      self.wind_speed * float(np.sin(theta)))

    def build_plan(self, c1: float | None = None) -> Plan:
        if c1 is None:
            c1 = self.initial_params.path[0]
        return generate_plan(
            self.polygon, self.radius, self.min_radius, self.shift, self.start,
            self.altitude, self.path_bounds, self.compute_bounds,
            c1=c1, epsilon=self.epsilon,
        )

    def load_profile(self) -> ComputeProfile:
        if "profile" not in self._cache:
            self._cache["profile"] = load_profile(self.profile_path)
        return self._cache["profile"]

    def override_profile(self, path) -> None:
        """Point the scenario at a different power profile file."""
        self.profile_path = Path(path)
        self._cache.clear()

    def coverage_durations(self) -> tuple[float, float]:
        """Geometric dry-run durations (upper-bound config, lower-bound config).

        Two plan traversals at the fixed airspeed: total path length divided
        by ground speed, once per bound configuration.
        """
        if "durations" not in self._cache:
            hi = self.build_plan(c1=self.path_bounds[0][1]).total_length() / self.airspeed
            lo = self.build_plan(c1=self.path_bounds[0][0]).total_length() / self.airspeed
            self._cache["durations"] = (hi, lo)
        return self._cache["durations"]

    def scaling(self) -> ScalingFactors:
        """Combined path-time and compute-power scaling factors."""
        if "scaling" not in self._cache:
            t_upper, t_lower = self.coverage_durations()
            path = path_time_scaling(self.path_bounds, t_upper, t_lower,
                                     len(self.path_bounds))
            comp = compute_power_scaling(self.compute_bounds,
                                         self.load_profile().predictor())
            self._cache["scaling"] = ScalingFactors.combine(path, comp)
        return self._cache["scaling"]


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file."""
    path = Path(path)
    kv = _parse_kv(path)

    def need(key):
        if key not in kv:
            raise ScenarioInvalid(f"{path}: missing required key {key!r}")
        return kv[key]

    def get(key, default=None):
        return kv.get(key, default)

    try:
        polygon = Polygon(need("polygon"))
        shift = need("plan.shift")
        start = need("plan.start")
        fourier_a = np.asarray(need("fourier.a"), dtype=float)
        fourier_b = np.asarray(need("fourier.b"), dtype=float)
        guess_scale = float(get("estimator.guess_scale", 1.0))
        guess_a = np.asarray(get("estimator.guess_a", fourier_a * guess_scale), dtype=float)
        guess_b = np.asarray(get("estimator.guess_b", fourier_b * guess_scale), dtype=float)
        battery = BatteryParams(
            v=float(need("battery.v")),
            v_supply=float(need("battery.vs")),
            resistance=float(need("battery.rr")),
            capacity_ah=float(need("battery.qc_ah")),
            coeff=float(need("battery.kb")),
        )
        mpc = MpcConfig(
            horizon=float(get("mpc.horizon", 6.0)),
            fine_step=float(get("mpc.fine_step", 0.01)),
            replan_step=float(get("mpc.replan_step", 1.0)),
            solver_tolerance=float(get("mpc.solver_tolerance", 1e-6)),
            max_iterations=int(get("mpc.max_iterations", 200)),
            drain_step=float(get("mpc.drain_step", 0.25)),
            max_drain_lookahead=float(get("mpc.max_drain_lookahead", 7200.0)),
        )
        initial = need("initial.params")
        path_bounds = tuple(tuple(map(float, b)) for b in need("bounds.path"))
        compute_bounds = tuple(tuple(map(float, b)) for b in need("bounds.compute"))
        n_path = len(path_bounds)
        params = ParamVector(
            path=tuple(float(v) for v in initial[:n_path]),
            compute=tuple(float(v) for v in initial[n_path:]),
        )
        profile = Path(str(need("compute.profile")))
        if not profile.is_absolute():
            profile = path.parent / profile
        return Scenario(
            name=str(get("name", path.stem)),
            polygon=polygon,
            radius=float(need("plan.radius")),
            min_radius=float(need("plan.min_radius")),
            shift=Point2(float(shift[0]), float(shift[1])),
            start=Point2(float(start[0]), float(start[1])),
            altitude=float(get("plan.altitude", 50.0)),
            epsilon=None if get("plan.epsilon") is None else float(get("plan.epsilon")),
            path_bounds=path_bounds,
            compute_bounds=compute_bounds,
            initial_params=params,
            airspeed=float(need("airspeed")),
            wind_speed=float(get("wind.speed", 0.0)),
            wind_direction_deg=float(get("wind.direction_deg", 0.0)),
            battery=battery,
            soc0=float(need("battery.soc0")),
            battery_events=tuple((float(t), float(d)) for t, d in get("battery.events", [])),
            period=float(need("fourier.period")),
            fourier_a=fourier_a,
            fourier_b=fourier_b,
            guess_a=guess_a,
            guess_b=guess_b,
            profile_path=profile,
            noise_sigma=float(get("noise.sigma", 0.0)),
            seed=int(get("seed", 0)),
            order=int(get("model.order", 3)),
            mpc=mpc,
            delta=float(get("greedy.delta", 250.0)),
            w1=float(get("metric.w1", 0.5)),
            w2=float(get("metric.w2", 0.5)),
            max_time=None if get("max_time") is None else float(get("max_time")),
            process_scale=float(get("estimator.process_scale", 1e-4)),
            measurement_frac=float(get("estimator.measurement_frac", 0.01)),
            prior_frac=float(get("estimator.prior_frac", 0.2)),
            lookahead=None if get("tracker.lookahead") is None else float(get("tracker.lookahead")),
            heading_gain=float(get("tracker.heading_gain", 4.0)),
        )
    except ScenarioInvalid:
        raise
    except (TypeError, ValueError, IndexError, KeyError) as exc:
        raise ScenarioInvalid(f"{path}: {exc}") from exc
