"""SVG fan charts: truth, median forecast and the 95% band, with optional timing densities."""

from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Polygon
import numpy as np

from core.distributions import ForecastDistribution
from events.timing import KdeDensity
from utils.logger import get_logger

logger = get_logger("reporting")

BAND = (0.025, 0.975)
SVG_SALT = "mordred"


def band_vertices(lower, upper, steps=None) -> np.ndarray:
    """
    Closed polygon of a quantile band: along the lower curve, then back along
    the upper one. Shape (2 * P_h, 2).
    """
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ValueError("Band curves must be 1-D and of equal length")
    t = np.arange(1, len(lower) + 1, dtype=np.float64) if steps is None else np.asarray(steps, float)
    return np.concatenate([np.column_stack([t, lower]), np.column_stack([t[::-1], upper[::-1]])])


def fan_chart(dist: ForecastDistribution, path: Union[str, Path], truth=None, history=None,
              title: str = "", timing: Optional[Dict[str, KdeDensity]] = None,
              true_timings: Optional[Sequence[float]] = None) -> Path:
    """
    Write a self-contained SVG.

    Args:
        dist: Forecast to draw; steps are plotted at 1..P_h.
        truth: Optional ground truth over the horizon.
        history: Optional observed values drawn at steps -len+1..0.
        timing: Optional model name -> timing density for a lower subplot.
        true_timings: Optional ground-truth event times marked on that subplot.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    steps = np.arange(1, dist.horizon + 1, dtype=np.float64)
    lower, upper = dist.quantile(BAND[0]), dist.quantile(BAND[1])

    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        if timing:
            fig, (ax, ax_t) = plt.subplots(2, 1, figsize=(10, 6), sharex=True,
                                           gridspec_kw={"height_ratios": [3, 1]})
        else:
            fig, ax = plt.subplots(figsize=(10, 4))
            ax_t = None

        ax.add_patch(Polygon(band_vertices(lower, upper, steps), closed=True, facecolor="tab:blue",
                             alpha=0.25, edgecolor="none", label="95% band"))
        ax.plot(steps, dist.median(), color="tab:blue", linewidth=1.2, label="median")
        if history is not None:
            history = np.asarray(history, dtype=np.float64)
            ax.plot(np.arange(-len(history) + 1, 1), history, color="0.4", linewidth=1.0, label="observed")
        if truth is not None:
            ax.plot(steps, np.asarray(truth, dtype=np.float64), color="black", linewidth=0.9, label="truth")
        ax.autoscale_view()
        ax.set_ylabel("value")
        ax.legend(loc="upper right", fontsize="small")
        if title:
            ax.set_title(title)

        if ax_t is not None:
            grid = np.linspace(1.0, float(dist.horizon), 1000)
            for name, density in timing.items():
                ax_t.plot(grid, density.pdf(grid), linewidth=1.0, label=name)
            if true_timings is not None:
                for t in true_timings:
                    ax_t.axvline(float(t), color="black", linewidth=0.6, linestyle="--")
            ax_t.set_ylabel("p(t)")
            ax_t.legend(loc="upper right", fontsize="small")
            ax_t.set_xlabel("step")
        else:
            ax.set_xlabel("step")

        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    logger.info(f"Fan chart written: {path}")
    return path
