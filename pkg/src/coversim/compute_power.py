"""Measured and predicted power draw of the onboard computations.

Power is profiled offline at a handful of integer configurations (e.g.
detection frame rates); anything in between is predicted by piecewise-linear
interpolation between the two adjacent measurements.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass

from .errors import NotMeasured, OutOfRange, ParseError, TooFewKnots, UnsortedKnots


@dataclass(frozen=True)
class Knot:
    """One profiled configuration: parameter value, mean watts, interval."""

    param: int
    power: float
    t0: float = 0.0
    tf: float = 0.0


@dataclass(frozen=True)
class ComputeProfile:
    """Profiled power of one measuring device over sorted parameter knots."""

    device_id: int
    knots: tuple[Knot, ...]

    def __post_init__(self):
        if self.device_id < 1:
            raise ValueError(f"device id must be positive, got {self.device_id}")
        if len(self.knots) < 2:
            raise TooFewKnots(f"need at least 2 knots, got {len(self.knots)}")
        params = [k.param for k in self.knots]
        if any(b <= a for a, b in zip(params, params[1:])):
            raise UnsortedKnots(f"knot parameters must strictly increase: {params}")
        if any(k.power < 0.0 or not math.isfinite(k.power) for k in self.knots):
            raise ValueError("knot powers must be finite and non-negative")

    @property
    def params(self) -> list[int]:
        return [k.param for k in self.knots]

    def predictor(self):
        """The predictive layer as a plain callable."""
        return lambda c: predict_power(self, c)


def load_profile(path, device_id: int = 1) -> ComputeProfile:
    """Load a profile CSV with header param,power_w,t0,tf (intervals optional)."""
    knots = []
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "param" not in reader.fieldnames \
                    or "power_w" not in reader.fieldnames:
                raise ParseError(f"{path}: expected header with param,power_w columns")
            for lineno, row in enumerate(reader, start=2):
                try:
                    knots.append(Knot(
                        param=int(row["param"]),
                        power=float(row["power_w"]),
                        t0=float(row.get("t0") or 0.0),
                        tf=float(row.get("tf") or 0.0),
                    ))
                except (TypeError, ValueError) as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"cannot read profile {path}: {exc}") from exc
    if len(knots) < 2:
        raise TooFewKnots(f"{path}: need at least 2 knots, got {len(knots)}")
    return ComputeProfile(device_id=device_id, knots=tuple(knots))


def measured_power(profile: ComputeProfile, c: int) -> float:
    """Recorded watts at an exactly profiled configuration."""
    for k in profile.knots:
        if k.param == c:
            return k.power
    raise NotMeasured(f"configuration {c} was not profiled; use predict_power")


def predict_power(profile: ComputeProfile, c: float) -> float:
    """Predicted watts at any configuration between the profiled extremes.

    Exact (same stored float) at the knots; linear between adjacent knots.
    """
    params = profile.params
    if c < params[0] or c > params[-1]:
        raise OutOfRange(f"configuration {c} outside profiled range [{params[0]}, {params[-1]}]")
    idx = bisect_right(params, c) - 1
    if idx >= 0 and params[idx] == c:
        return profile.knots[idx].power
    lo = profile.knots[idx]
    hi = profile.knots[idx + 1]
    return (hi.power - lo.power) * (c - lo.param) / (hi.param - lo.param) + lo.power
