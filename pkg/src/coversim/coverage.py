"""Zamboni-like coverage plans over convex polygons.

A plan is a finite-state machine of stages.  Each stage carries a path
function (a survey line or a wide turn circle), a triggering point on the
polygon boundary, and the admissible parameter intervals.  The sweep repeats
a block of four primitive stages, shifted across the polygon until the next
survey line would fall outside it:

    line parallel to the leading edge  ->  wide jump turn (radius r + d/2)
    ->  return line                    ->  closing turn (adjustable radius)

The closing turn's radius is a function of the first path parameter, which
lets the re-planner widen the effective lane spacing of everything not yet
flown.  Turns are flown outside the polygon (the vehicle overflies the
edges), so survey lines always span full boundary-to-boundary chords.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import (
    DegeneratePolygon,
    NotPrimitive,
    OutOfRange,
    UnreachableFinalPoint,
)
from .geometry import (
    Point2,
    Polygon,
    angle_of,
    circle_polygon_hits,
    line_polygon_chord,
)

PRIMITIVE_BLOCK = 4  # line, jump turn, line, closing turn

# stage phases within a primitive block
PHASE_LINE_OUT = 0
PHASE_JUMP_TURN = 1
PHASE_LINE_BACK = 2
PHASE_CLOSING_TURN = 3


class Orientation(Enum):
    """Traversal direction of a circle stage."""

    CW = -1
    CCW = 1

    @property
    def sign(self) -> int:
        return self.value


@dataclass(frozen=True)
class Line:
    """Survey line through `point` with unit `direction`."""

    point: Point2
    direction: Point2

    kind = "line"

    def __post_init__(self):
        n = self.direction.norm()
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"line direction must be unit length, |d| = {n}")

    def value(self, p: Point2) -> float:
        """Signed perpendicular offset of p from the line (metres)."""
        return self.direction.cross(p - self.point)

    def param_of(self, p: Point2) -> float:
        return (p - self.point).dot(self.direction)

    def point_at(self, s: float) -> Point2:
        return self.point + self.direction.scaled(s)

    def carrot(self, p: Point2, lookahead: float) -> Point2:
        return self.point_at(self.param_of(p) + lookahead)


@dataclass(frozen=True)
class Circle:
    """Turn circle traversed in a fixed orientation."""

    center: Point2
    radius: float
    orientation: Orientation = Orientation.CCW

    kind = "circle"

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")

    def value(self, p: Point2) -> float:
        """Implicit value |p - center|^2 - radius^2 (square metres)."""
        d = p - self.center
        return d.dot(d) - self.radius * self.radius

    def angle_of(self, p: Point2) -> float:
        return angle_of(p - self.center)

    def point_at(self, theta: float) -> Point2:
        return Point2(
            self.center.x + self.radius * math.cos(theta),
            self.center.y + self.radius * math.sin(theta),
        )

    def carrot(self, p: Point2, lookahead: float) -> Point2:
        theta = self.angle_of(p) + self.orientation.sign * lookahead / self.radius
        return self.point_at(theta)

    def arc_length(self, entry: Point2, exit_: Point2) -> float:
        """Arc length from entry to exit along the traversal orientation."""
        sweep = self.orientation.sign * (self.angle_of(exit_) - self.angle_of(entry))
        sweep = sweep % (2.0 * math.pi)
        if sweep == 0.0:
            sweep = 2.0 * math.pi
        return self.radius * sweep


PathFunction = Line | Circle


@dataclass(frozen=True)
class Stage:
    """One FSM state: a path to track and the point that triggers the next.

    `path_bounds` / `compute_bounds` are the per-parameter closed intervals
    admissible while this stage is active.  `entry` is where the vehicle
    enters the path (the previous stage's trigger, or the start point).
    """

    path: PathFunction
    trigger: Point2
    trigger_radius: float
    path_bounds: tuple[tuple[float, float], ...]
    compute_bounds: tuple[tuple[float, float], ...]
    entry: Point2
    phase: int

    def __post_init__(self):
        if self.trigger_radius < 0.0:
            raise ValueError("trigger radius must be non-negative")
        for lo, hi in (*self.path_bounds, *self.compute_bounds):
            if lo > hi:
                raise ValueError(f"bound pair [{lo}, {hi}] is inverted")

    def length(self) -> float:
        if isinstance(self.path, Line):
            return self.entry.distance_to(self.trigger)
        return self.path.arc_length(self.entry, self.trigger)


@dataclass(frozen=True)
class ParamVector:
    """Current path and computation parameter values, in stage-bound order."""

    path: tuple[float, ...]
    compute: tuple[float, ...]

    @property
    def full(self) -> np.ndarray:
        return np.array([*self.path, *self.compute], dtype=float)


@dataclass(frozen=True)
class _SweepFrame:
    """Working frame of the sweep: along-lane and advance directions."""

    e_hat: Point2  # along the leading edge (lane direction)
    n_hat: Point2  # inward normal of the leading edge (advance direction)
    origin: Point2

    def advance_of(self, p: Point2) -> float:
        return (p - self.origin).dot(self.n_hat)


@dataclass
class _PlanContext:
    polygon: Polygon
    ideal_radius: float
    min_radius: float
    nominal_shift: Point2
    frame: _SweepFrame
    advance: float
    path_bounds: tuple[tuple[float, float], ...]
    compute_bounds: tuple[tuple[float, float], ...]
    epsilon: float
    c1: float
    step: float


@dataclass
class Plan:
    """Ordered stages plus the bookkeeping needed to alter them in flight.

    `shift` is the effective block-to-block translation measured from the
    generated geometry; it equals the nominal shift when the path parameter
    sits at its upper bound.  `current_index` tracks the active stage and is
    only ever advanced (never rewound) by `step_to`.
    """

    stages: list[Stage]
    n_primitive: int
    shift: Point2
    final_point: Point2
    altitude: float
    current_index: int = 0
    completed: bool = False
    ctx: _PlanContext = field(default=None, repr=False)

    @property
    def current_stage(self) -> Stage:
        return self.stages[self.current_index]

    def step_to(self, p: Point2) -> int:
        """Advance the FSM for a vehicle at p; marks completion at the end."""
        nxt = stage_transition(self, p)
        if nxt == self.current_index and self._triggered(self.current_index, p):
            # at the final trigger: the plan is complete
            if self.current_index == len(self.stages) - 1:
                self.completed = True
        self.current_index = nxt
        return self.current_index

    def _triggered(self, index: int, p: Point2) -> bool:
        st = self.stages[index]
        return p.distance_to(st.trigger) < st.trigger_radius

    @property
    def path_parameter(self) -> float:
        return self.ctx.c1

    def apply_path_parameter(self, c1: float) -> bool:
        """Re-derive every not-yet-entered stage for a new path parameter.

        The active stage keeps its geometry; the change takes effect from the
        next closing turn onward.  Returns True when the plan changed.
        """
        turn_radius(c1, self.ctx.ideal_radius, self.ctx.min_radius)  # validates
        if c1 == self.ctx.c1 or self.completed:
            self.ctx.c1 = c1
            return False
        self.ctx.c1 = c1
        keep = self.stages[: self.current_index + 1]
        last = keep[-1]
        tail, final_pt = _build_stages(self.ctx, last.trigger, (last.phase + 1) % PRIMITIVE_BLOCK)
        if tail:
            self.stages = keep + tail
            self.final_point = final_pt
        else:
            # nothing beyond the current stage: it becomes the last one
            self.stages = keep
            self.final_point = last.trigger
        return True

    def total_length(self) -> float:
        return sum(st.length() for st in self.stages)

    def csv_rows(self):
        """One row per stage: index, kind, parameters, trigger, epsilon."""
        for i, st in enumerate(self.stages):
            if isinstance(st.path, Line):
                params = [st.path.point.x, st.path.point.y,
                          st.path.direction.x, st.path.direction.y]
            else:
                params = [st.path.center.x, st.path.center.y,
                          st.path.radius, float(st.path.orientation.sign)]
            yield [i, st.path.kind, *params, st.trigger.x, st.trigger.y,
                   st.trigger_radius]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "kind", "p1", "p2", "p3", "p4",
                             "trigger_x", "trigger_y", "epsilon"])
            for row in self.csv_rows():
                writer.writerow(row)


def turn_radius(c1: float, ideal_radius: float, min_radius: float) -> float:
    """Radius of the adjustable closing turn for path parameter c1.

    c1 must lie in (min_radius^2 - ideal_radius^2, 0]; the result then lies
    in (min_radius, ideal_radius], shrinking as c1 grows more negative.
    """
    if not (0.0 < min_radius < ideal_radius):
        raise OutOfRange(
            f"need 0 < min_radius < ideal_radius, got {min_radius}, {ideal_radius}"
        )
    lo = min_radius * min_radius - ideal_radius * ideal_radius
    if c1 <= lo or c1 > 0.0:
        raise OutOfRange(f"path parameter {c1} outside ({lo}, 0]")
    return math.sqrt(ideal_radius * ideal_radius + c1)


def back_turn_circle(
    p3: Point2,
    c1: float,
    ideal_radius: float,
    min_radius: float,
    orientation: Orientation = Orientation.CCW,
) -> Circle:
    """Closing turn circle whose rightmost point lies on p3."""
    r2 = turn_radius(c1, ideal_radius, min_radius)
    return Circle(Point2(p3.x - r2, p3.y), r2, orientation)


def forward_turn_radius(ideal_radius: float, shift: Point2) -> float:
    """Radius of the jump turn; paired with the closing turn it makes the
    primitive block advance by exactly the shift."""
    if ideal_radius <= 0.0:
        raise OutOfRange(f"ideal radius must be positive, got {ideal_radius}")
    return ideal_radius + shift.x / 2.0


def _other_line_trigger(ctx: _PlanContext, entry: Point2) -> tuple[Point2, Point2] | None:
    """Chord of the lane through `entry`; returns (far endpoint, direction)."""
    chord = line_polygon_chord(ctx.polygon, entry, ctx.frame.e_hat)
    if chord is None:
        return None
    a, b = chord
    trigger = a if entry.distance_to(a) > entry.distance_to(b) else b
    span = trigger - entry
    if span.norm() < 1e-6 * max(ctx.polygon.diameter(), 1.0):
        return None
    return trigger, span.unit()


def _other_circle_trigger(ctx: _PlanContext, circle: Circle, entry: Point2) -> Point2 | None:
    hits = circle_polygon_hits(ctx.polygon, circle.center, circle.radius)
    eps = 1e-6 * max(circle.radius, 1.0)
    others = [p for p in hits if p.distance_to(entry) > eps]
    if not others:
        return None
    return max(others, key=entry.distance_to)


def _turn_orientation(circle_center: Point2, entry: Point2, travel: Point2) -> Orientation:
    radial = entry - circle_center
    return Orientation.CCW if radial.cross(travel) > 0.0 else Orientation.CW


def _build_stages(ctx: _PlanContext, entry: Point2, phase: int):
    """Resume plan construction from `entry` at the given block phase.

    Returns (stages, final_point).  Construction stops at the first survey
    line that would fall outside the polygon; a closing/jump turn leading
    straight into an infeasible line is dropped, so plans always end on a
    line stage whose trigger is the final point.
    """
    r1 = ctx.ideal_radius + ctx.advance / 2.0
    r2 = turn_radius(ctx.c1, ctx.ideal_radius, ctx.min_radius)
    stages: list[Stage] = []
    max_stages = 64 + int(
        PRIMITIVE_BLOCK * 4.0 * ctx.polygon.diameter() / max(ctx.advance, 1e-9)
    )
    travel = None  # direction of motion at `entry`

    def make_stage(path, trigger, here):
        return Stage(
            path=path,
            trigger=trigger,
            trigger_radius=ctx.epsilon,
            path_bounds=ctx.path_bounds,
            compute_bounds=ctx.compute_bounds,
            entry=here,
            phase=phase,
        )

    while len(stages) < max_stages:
        if phase in (PHASE_LINE_OUT, PHASE_LINE_BACK):
            lane = _other_line_trigger(ctx, entry)
            if lane is None:
                # next lane is outside the polygon: drop the turn that led
                # here so the plan ends at the last line's trigger
                while stages and isinstance(stages[-1].path, Circle):
                    stages.pop()
                break
            trigger, direction = lane
            stages.append(make_stage(Line(entry, direction), trigger, entry))
            travel = direction
        else:
            if phase == PHASE_JUMP_TURN:
                circle = Circle(entry + ctx.frame.n_hat.scaled(r1), r1)
            else:
                circle = Circle(entry - ctx.frame.n_hat.scaled(r2), r2)
            if travel is None:
                travel = ctx.frame.e_hat
            circle = replace(circle, orientation=_turn_orientation(circle.center, entry, travel))
            trigger = _other_circle_trigger(ctx, circle, entry)
            if trigger is None:
                break  # turn never re-enters the boundary: end at previous line
            stages.append(make_stage(circle, trigger, entry))
            # direction of travel at the turn exit (tangent)
            radial = trigger - circle.center
            travel = radial.perp().scaled(float(circle.orientation.sign)).unit()
        entry = stages[-1].trigger
        phase = (phase + 1) % PRIMITIVE_BLOCK
    else:
        raise UnreachableFinalPoint(
            f"plan construction exceeded {max_stages} stages without terminating"
        )
    while stages and isinstance(stages[-1].path, Circle):
        stages.pop()
    if not stages:
        return [], entry
    return stages, stages[-1].trigger


def _measured_shift(stages: list[Stage], fallback: Point2) -> Point2:
    """Block-to-block translation read off the generated geometry.

    The jump-turn centers of consecutive blocks are exact translates of one
    another; their difference carries the along-lane component that appears
    when the swept edges are not perpendicular to the lanes.
    """
    jumps = [st for st in stages if st.phase == PHASE_JUMP_TURN]
    if len(jumps) >= 2:
        return jumps[1].path.center - jumps[0].path.center
    return fallback


def generate_plan(
    polygon: Polygon,
    ideal_radius: float,
    min_radius: float,
    shift: Point2,
    start: Point2,
    altitude: float,
    path_bounds,
    compute_bounds,
    *,
    c1: float | None = None,
    epsilon: float | None = None,
    step: float = 0.01,
) -> Plan:
    """Generate the full sweep plan over a convex polygon.

    The first survey line runs through `start` parallel to the polygon's
    leading edge (vertex 0 to the last vertex); the sweep then advances by
    `shift` per primitive block.  `c1` defaults to the upper path bound
    (tightest lane spacing).  `step` is the construction time step of the
    reference procedure; generation here is event-driven, so it is only
    validated.
    """
    if not isinstance(polygon, Polygon):
        polygon = Polygon(polygon)
    if altitude <= 0.0:
        raise ValueError(f"altitude must be positive, got {altitude}")
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    path_bounds = tuple((float(lo), float(hi)) for lo, hi in path_bounds)
    compute_bounds = tuple((float(lo), float(hi)) for lo, hi in compute_bounds)
    if not path_bounds:
        raise ValueError("need at least one path parameter bound pair")

    v0 = polygon.vertices[0]
    v_last = polygon.vertices[-1]
    e_hat = (v_last - v0).unit()
    n_hat = e_hat.perp()
    if (polygon.centroid() - v0).dot(n_hat) < 0.0:
        n_hat = n_hat.scaled(-1.0)
    frame = _SweepFrame(e_hat=e_hat, n_hat=n_hat, origin=v0)

    advance = shift.dot(n_hat)
    if advance <= 0.0:
        raise UnreachableFinalPoint(
            f"shift ({shift.x}, {shift.y}) does not advance into the polygon"
        )
    if c1 is None:
        c1 = path_bounds[0][1]
    eps = float(epsilon) if epsilon is not None else 0.01 * abs(advance)

    ctx = _PlanContext(
        polygon=polygon,
        ideal_radius=float(ideal_radius),
        min_radius=float(min_radius),
        nominal_shift=shift,
        frame=frame,
        advance=advance,
        path_bounds=path_bounds,
        compute_bounds=compute_bounds,
        epsilon=eps,
        c1=float(c1),
        step=step,
    )
    stages, final_pt = _build_stages(ctx, start, PHASE_LINE_OUT)
    if not stages:
        raise DegeneratePolygon(
            "the first survey line does not intersect the polygon interior"
        )
    r1 = ctx.ideal_radius + advance / 2.0
    r2 = turn_radius(ctx.c1, ctx.ideal_radius, ctx.min_radius)
    return Plan(
        stages=stages,
        n_primitive=min(PRIMITIVE_BLOCK, len(stages)),
        shift=_measured_shift(stages, n_hat.scaled(2.0 * r1 - 2.0 * r2)),
        final_point=final_pt,
        altitude=float(altitude),
        ctx=ctx,
    )


def stage_transition(plan: Plan, p: Point2) -> int:
    """Next stage index for a vehicle at p (strict proximity test).

    Advances by one when p is strictly inside the current trigger's radius;
    the last stage never advances (the plan reports completion instead).
    """
    i = plan.current_index
    st = plan.stages[i]
    if p.distance_to(st.trigger) < st.trigger_radius and i + 1 < len(plan.stages):
        return i + 1
    return i


def primitive_offsets(plan: Plan, c1_ref: float | None = None, tol: float = 1e-6):
    """Constant offsets between repeated blocks of the plan's path functions.

    Evaluates each block's path functions against the next block's, with the
    probe point translated by the plan's effective shift, and checks the
    difference is the same constant for every repetition and probe.  Circle
    values are quadratic, so their discrepancies are compared after dividing
    by the circle diameter to keep the tolerance in metres.

    Returns one offset per primitive stage; raises NotPrimitive when any
    repetition disagrees beyond `tol` (metres).  Plans with fewer than two
    complete blocks satisfy the property vacuously and return zeros.
    """
    if c1_ref is not None and abs(c1_ref - plan.ctx.c1) > 1e-9:
        raise OutOfRange(
            f"reference path parameter {c1_ref} does not match the plan's {plan.ctx.c1}"
        )
    n = plan.n_primitive
    blocks = len(plan.stages) // PRIMITIVE_BLOCK
    if n < PRIMITIVE_BLOCK or blocks < 2:
        return [0.0] * n
    d = plan.shift
    probes = [
        plan.stages[0].entry,
        plan.stages[0].entry + plan.ctx.frame.e_hat.scaled(7.0),
        plan.stages[0].entry + plan.ctx.frame.n_hat.scaled(13.0),
    ]
    offsets = []
    for j in range(n):
        values = []
        for i in range(blocks - 1):
            a = plan.stages[i * PRIMITIVE_BLOCK + j].path
            b = plan.stages[(i + 1) * PRIMITIVE_BLOCK + j].path
            scale = 1.0
            if isinstance(a, Circle):
                scale = 2.0 * a.radius
                if abs(a.radius - b.radius) > tol:
                    raise NotPrimitive(
                        f"stage {j}: circle radii differ between blocks "
                        f"({a.radius} vs {b.radius})"
                    )
            for p in probes:
                shifted_a = p + d.scaled(float(i))
                shifted_b = p + d.scaled(float(i + 1))
                values.append((a.value(shifted_a) - b.value(shifted_b)) / scale)
        ref = values[0]
        if any(abs(v - ref) > tol for v in values):
            raise NotPrimitive(
                f"stage {j}: offsets vary by {max(values) - min(values):.3g} "
                f"across repetitions"
            )
        offsets.append(ref)
    return offsets
