# Static SVG convergence plots (one curve per variant, against iteration).

import logging
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from core.exceptions import ParameterError

logger = logging.getLogger(__name__)

METRICS = ("objective", "crit", "e_plus", "primal_residual", "LK")
COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]

# fixed salt and no timestamp keep the SVG bytes reproducible
SVG_RC = {"svg.hashsalt": "fadmm", "svg.fonttype": "none"}


def emit_svg(traces, metric, path, log_scale=None, title=None):
    """
    Writes one polyline per trace for `metric` against t.

    log_scale defaults to on for the residual-type metrics. Non-finite and, on a log
    axis, non-positive values are dropped from the curve.
    """
    if not traces:
        raise ParameterError("traces", "[]", "nothing to plot")
    if metric not in METRICS:
        raise ParameterError("metric", metric, f"expected one of {list(METRICS)}")
    if log_scale is None:
        log_scale = metric != "objective"

    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for i, trace in enumerate(traces):
            frame = trace.to_frame(steps_only=False)
            ts = frame["t"].to_numpy(dtype=float)
            values = frame[metric].to_numpy(dtype=float)
            keep = np.isfinite(values)
            if log_scale:
                keep &= values > 0
            ax.plot(ts[keep], values[keep], label=str(trace.config.variant),
                    color=COLORS[i % len(COLORS)], linewidth=1.5)
        if log_scale:
            # a curve with no positive point leaves no data for the log axis
            if any(line.get_xdata().size for line in ax.get_lines()):
                ax.set_yscale("log")
        ax.set_xlabel("iteration t")
        ax.set_ylabel(metric)
        ax.set_title(title or f"{traces[0].instance}: {metric}")
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()

        folder = os.path.dirname(path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info("Saved plot %s", path)
    return path
