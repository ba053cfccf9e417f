"""Single-resistor equivalent-circuit battery and its state of charge.

The pack is an ideal source of voltage V behind an internal resistance, so a
power drain y maps to an internal current through the negative root of
R*I^2 - V*I + y = 0 and the state of charge integrates that current down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InfeasibleLoad

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class BatteryParams:
    """Electrical constants of the pack.

    v_supply is the load-side supply voltage; it cancels out of the current
    equation under the stable-voltage assumption and is retained only for
    completeness.  capacity_ah stays in ampere-hours, as the max-power cap
    uses it verbatim.  The internal voltage is held constant per flight;
    `v_by_soc` is an optional data-sheet table (sorted charge fraction,
    volts) for callers that want to refresh it between flights or segments.
    """

    v: float
    v_supply: float
    resistance: float
    capacity_ah: float
    coeff: float
    v_by_soc: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        for name in ("v", "v_supply", "resistance", "capacity_ah", "coeff"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"battery parameter {name} must be positive")
        if self.v_by_soc is not None and len(self.v_by_soc) < 2:
            raise ValueError("a voltage table needs at least two points")

    @property
    def capacity_as(self) -> float:
        """Capacity in ampere-seconds."""
        return self.capacity_ah * SECONDS_PER_HOUR

    def at_soc(self, soc: float) -> "BatteryParams":
        """Copy of the parameters with v interpolated from the table, if any."""
        if self.v_by_soc is None:
            return self
        points = self.v_by_soc
        if soc <= points[0][0]:
            v = points[0][1]
        elif soc >= points[-1][0]:
            v = points[-1][1]
        else:
            v = points[-1][1]
            for (b0, v0), (b1, v1) in zip(points, points[1:]):
                if b0 <= soc <= b1:
                    v = v0 + (v1 - v0) * (soc - b0) / (b1 - b0)
                    break
        return replace(self, v=v)


@dataclass(frozen=True)
class BatteryState:
    """State of charge as a fraction of full."""

    soc: float

    def __post_init__(self):
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError(f"state of charge {self.soc} outside [0, 1]")


def internal_current(params: BatteryParams, load_w: float) -> float:
    """Internal current (amperes) delivering load_w watts to the load.

    Uses the negative root so zero load draws zero current.  Raises
    InfeasibleLoad when the discriminant goes negative, i.e. the pack cannot
    deliver that power at all.
    """
    if load_w < 0.0:
        raise InfeasibleLoad(f"load must be non-negative, got {load_w}")
    disc = params.v * params.v - 4.0 * params.resistance * load_w
    if disc < 0.0:
        raise InfeasibleLoad(
            f"load {load_w} W exceeds deliverable maximum "
            f"{params.v * params.v / (4.0 * params.resistance)} W"
        )
    return (params.v - math.sqrt(disc)) / (2.0 * params.resistance)


def max_deliverable(params: BatteryParams) -> float:
    """Largest load the circuit equation admits (discriminant zero)."""
    return params.v * params.v / (4.0 * params.resistance)


def soc_rate(params: BatteryParams, load_w: float) -> float:
    """Instantaneous state-of-charge rate (1/s) under a load."""
    return -params.coeff * internal_current(params, load_w) / params.capacity_as


def step_soc(params: BatteryParams, state: BatteryState, load_w: float, h: float) -> BatteryState:
    """Forward-Euler state-of-charge update, clamped to [0, 1]."""
    if h <= 0.0:
        raise ValueError(f"step must be positive, got {h}")
    soc = state.soc + soc_rate(params, load_w) * h
    return BatteryState(min(1.0, max(0.0, soc)))


def max_power(params: BatteryParams, state: BatteryState) -> float:
    """Upper bound of the admissible load at the current state of charge.

    Computed as soc * capacity_ah * v, the verbatim cap used by the
    scheduler's output constraint.  Dimensionally this is a capacity-voltage
    product with capacity left in ampere-hours; the scheduler only relies on
    it being linear in the state of charge.
    """
    return state.soc * params.capacity_ah * params.v
