"""Figures written next to the CSV/JSON reports (matplotlib, Agg backend)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .raster import to_uint8  # noqa: E402

# fixed metadata keeps PNG output byte-identical across runs
_PNG_META = {"Software": "sarratio"}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)


def plot_ratio_overlay(ratio, selection, path, title: str = "") -> None:
    """Ratio image (1-99 percentile stretch) with the selected windows outlined."""
    img = to_uint8(ratio, (1.0, 99.0))
    h, w = img.shape
    fig, ax = plt.subplots(figsize=(6, 6 * h / w + 0.4))
    ax.imshow(img, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
    if selection is not None:
        for win in selection.windows:
            ax.add_patch(Rectangle((win.roi.x0 - 0.5, win.roi.y0 - 0.5), win.roi.w, win.roi.h,
                                   fill=False, edgecolor="tab:orange", linewidth=0.8))
        title = f"{title}  n={selection.n}".strip()
    ax.set_title(title, fontsize=10)
    ax.set_axis_off()
    fig.tight_layout()
    _save(fig, path)


def plot_components(labels, reports, path) -> None:
    """Stacked bars of the first-order residual and delta_h per filter."""
    r = np.array([rep.r for rep in reports])
    dh = np.array([rep.delta_h for rep in reports])
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(labels) + 1), 3.5))
    ax.bar(x, r, color="tab:blue", label="first-order residual")
    ax.bar(x, dh, bottom=r, color="tab:red", label=r"$\delta h$")
    ax.set_xticks(x, labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("M")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_tune_trace(trace, path) -> None:
    """M, residual and delta_h along the grid (failed points marked on the axis)."""
    idx = [row.index for row in trace.rows]
    ok = [row for row in trace.rows if row.ok]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot([row.index for row in ok], [row.report.M for row in ok], "o-", color="k", label="M")
    ax.plot([row.index for row in ok], [row.report.r for row in ok], "s--", color="tab:blue", ms=3, label="residual")
    ax.plot([row.index for row in ok], [row.report.delta_h for row in ok], "^--", color="tab:red", ms=3,
            label=r"$\delta h$")
    failed = [row.index for row in trace.rows if not row.ok]
    if failed:
        ax.plot(failed, [0] * len(failed), "x", color="gray", label="failed")
    ax.axvline(trace.best.index, color="tab:green", lw=0.8)
    ax.set_xticks(idx, [_short(row.spec.params) for row in trace.rows], rotation=30, ha="right", fontsize=7)
    ax.set_title(f"{trace.grid.family}: best {_short(trace.best.spec.params)}", fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def _short(params: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in params.items())
