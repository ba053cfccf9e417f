import math
from pathlib import Path

import numpy as np
import pytest

from coversim.geometry import Polygon

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

PATH_BOUNDS = ((-1000.0, 0.0),)
COMPUTE_BOUNDS = ((2.0, 10.0),)


def rotated_square(side=500.0, angle_deg=-15.0):
    c = side / 2.0
    th = math.radians(angle_deg)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    base = [(0.0, side), (side, side), (side, 0.0), (0.0, 0.0)]
    pts = [rot @ (np.array(p) - c) + c for p in base]
    start = min(range(4), key=lambda i: (-pts[i][1], pts[i][0]))
    pts = pts[start:] + pts[:start]
    return [(float(p[0]), float(p[1])) for p in pts]


def plan_case(vertices, shift_mag=50.0, radius=50.0, min_radius=25.0):
    """Polygon plus planner arguments with the start on the first lane."""
    poly = Polygon(vertices)
    v0 = poly.vertices[0]
    e_hat = (poly.vertices[-1] - v0).unit()
    n_hat = e_hat.perp()
    if (poly.centroid() - v0).dot(n_hat) < 0.0:
        n_hat = n_hat.scaled(-1.0)
    return dict(
        polygon=poly,
        ideal_radius=radius,
        min_radius=min_radius,
        shift=n_hat.scaled(shift_mag),
        start=v0 + n_hat.scaled(shift_mag / 2.0),
        altitude=50.0,
        path_bounds=PATH_BOUNDS,
        compute_bounds=COMPUTE_BOUNDS,
        epsilon=3.0,
    )


COVERAGE_CASES = {
    "square": plan_case([(0, 500), (500, 500), (500, 0), (0, 0)]),
    "wide_rect": plan_case([(0, 400), (800, 400), (800, 0), (0, 0)]),
    "tall_rect": plan_case([(0, 600), (300, 600), (300, 0), (0, 0)]),
    "parallelogram": plan_case([(0, 500), (500, 500), (560, 0), (60, 0)]),
    "rotated_square": plan_case(rotated_square()),
}


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def profile_path():
    return FIXTURES / "pednet_fps.csv"


@pytest.fixture
def square_case():
    return plan_case([(0, 500), (500, 500), (500, 0), (0, 0)])


@pytest.fixture(params=sorted(COVERAGE_CASES))
def coverage_case(request):
    return COVERAGE_CASES[request.param]


def coverage_fraction(plan, polygon, swath, resolution=1.0):
    """Fraction of interior grid points within swath/2 of some line stage.

    Independent of the planner internals: samples the polygon at the given
    resolution and measures point-to-segment distances of the line stages.
    """
    xs = np.arange(
        min(v.x for v in polygon.vertices) + resolution / 2.0,
        max(v.x for v in polygon.vertices),
        resolution,
    )
    ys = np.arange(
        min(v.y for v in polygon.vertices) + resolution / 2.0,
        max(v.y for v in polygon.vertices),
        resolution,
    )
    gx, gy = np.meshgrid(xs, ys)
    inside = polygon.contains_mask(gx, gy)
    px = gx[inside]
    py = gy[inside]
    best = np.full(px.shape, np.inf)
    for st in plan.stages:
        if st.path.kind != "line":
            continue
        ax, ay = st.entry.x, st.entry.y
        bx, by = st.trigger.x, st.trigger.y
        dx, dy = bx - ax, by - ay
        denom = dx * dx + dy * dy
        t = np.clip(((px - ax) * dx + (py - ay) * dy) / denom, 0.0, 1.0)
        dist = np.hypot(px - (ax + t * dx), py - (ay + t * dy))
        best = np.minimum(best, dist)
    return float(np.mean(best <= swath / 2.0))
