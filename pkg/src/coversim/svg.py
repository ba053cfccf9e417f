"""Passive SVG figures: flown trajectory plus power and charge traces."""

from __future__ import annotations

from .geometry import Polygon
from .simulator import Telemetry


def write_figure(telemetry: Telemetry, polygon: Polygon, path) -> None:
    """Render the run to an SVG file (trajectory, power, state of charge)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_traj, ax_pow, ax_soc) = plt.subplots(
        1, 3, figsize=(15, 4.5), gridspec_kw={"width_ratios": [1.2, 1, 1]}
    )

    xs = [v.x for v in polygon.vertices] + [polygon.vertices[0].x]
    ys = [v.y for v in polygon.vertices] + [polygon.vertices[0].y]
    ax_traj.plot(xs, ys, "k-", lw=1.2)
    ax_traj.plot(telemetry.x, telemetry.y, "b-", lw=0.7)
    ax_traj.set_aspect("equal")
    ax_traj.set_xlabel("east [m]")
    ax_traj.set_ylabel("north [m]")
    ax_traj.set_title(f"trajectory ({telemetry.termination})")

    ax_pow.plot(telemetry.t, telemetry.upsilon_w, color="0.7", lw=0.5, label="sensor")
    ax_pow.plot(telemetry.t, telemetry.y_hat_w, "r-", lw=0.9, label="model")
    ax_pow.set_xlabel("t [s]")
    ax_pow.set_ylabel("power [W]")
    ax_pow.legend(loc="best", fontsize=8)
    ax_pow.set_title("power")

    ax_soc.plot(telemetry.t, telemetry.soc, "g-", lw=1.0)
    ax_soc.set_xlabel("t [s]")
    ax_soc.set_ylabel("state of charge")
    ax_soc.set_ylim(0.0, 1.0)
    ax_soc.set_title("battery")

    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
