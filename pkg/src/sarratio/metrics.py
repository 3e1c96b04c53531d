"""Reference-based quality metrics: PSNR, MSSIM, Laplacian edge correlation and ROI tables."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, laplace

from .errors import ValidationError
from .raster import Roi, SummaryStats, as_raster, roi_stats


def _pair(ref, test) -> tuple[np.ndarray, np.ndarray]:
    ref, test = as_raster(ref), as_raster(test)
    if ref.shape != test.shape:
        raise ValidationError(f"dimension mismatch: {ref.shape} vs {test.shape}")
    return ref, test


def psnr(ref, test, peak: float | None = None) -> float:
    """``20 log10(peak) - 10 log10(MSE)`` in dB; ``peak`` defaults to ``max(ref)``.

    Identical images give ``+inf``.
    """
    ref, test = _pair(ref, test)
    peak = float(ref.max()) if peak is None else float(peak)
    if not peak > 0:
        raise ValidationError(f"PSNR peak must be positive, got {peak}")
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0:
        return math.inf
    return 20.0 * math.log10(peak) - 10.0 * math.log10(mse)


def mssim(ref, test, data_range: float | None = None, sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean structural similarity with 11x11 Gaussian windows (sigma 1.5).

    Stabilising constants use ``data_range``, which defaults to ``max(ref)``.
    Local statistics are population moments; the mean excludes a border of
    half a window.
    """
    ref, test = _pair(ref, test)
    L = float(ref.max()) if data_range is None else float(data_range)
    if not L > 0:
        L = 1.0
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2

    def blur(a):
        # truncate 3.5 sigma -> radius 5 for sigma 1.5, an 11x11 window
        return gaussian_filter(a, sigma, mode="reflect", truncate=3.5)

    mx, my = blur(ref), blur(test)
    sxx = blur(ref * ref) - mx * mx
    syy = blur(test * test) - my * my
    sxy = blur(ref * test) - mx * my
    ssim = ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2))
    pad = int(3.5 * sigma + 0.5)
    if min(ref.shape) > 2 * pad:
        ssim = ssim[pad:-pad, pad:-pad]
    return float(ssim.mean())


def beta_edges(ref, test) -> float:
    """Correlation of the 3x3 Laplacian responses of ``ref`` and ``test``; 1 is ideal."""
    ref, test = _pair(ref, test)
    dr = laplace(ref, mode="reflect")
    dt = laplace(test, mode="reflect")
    dr -= dr.mean()
    dt -= dt.mean()
    err, ett = float(np.sum(dr * dr)), float(np.sum(dt * dt))
    if err == 0 or ett == 0:
        raise ValidationError("edge correlation undefined: Laplacian of a constant image")
    return float(np.sum(dr * dt)) / math.sqrt(err * ett)


@dataclass(frozen=True)
class RoiTableRow:
    label: str
    truth: SummaryStats | None
    noisy: SummaryStats | None
    filtered: SummaryStats | None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            **{k: (None if v is None else v.to_dict()) for k, v in
               (("truth", self.truth), ("noisy", self.noisy), ("filtered", self.filtered))},
        }


def roi_table(truth, noisy, filtered, rois: dict[str, Roi]) -> list[RoiTableRow]:
    """Per-ROI mean, std and ENL for each available raster (``None`` skips one)."""
    rows = []
    for label, roi in rois.items():
        rows.append(RoiTableRow(
            label,
            None if truth is None else roi_stats(truth, roi),
            None if noisy is None else roi_stats(noisy, roi),
            None if filtered is None else roi_stats(filtered, roi),
        ))
    return rows


def roi_table_csv(rows: list[RoiTableRow]) -> str:
    """One line per (ROI, statistic), columns truth/noisy/filtered."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["roi", "stat", "truth", "noisy", "filtered"])
    for row in rows:
        for stat in ("mean", "std", "enl"):
            cells = []
            for s in (row.truth, row.noisy, row.filtered):
                cells.append("" if s is None else f"{getattr(s, stat):.6g}")
            w.writerow([row.label, stat, *cells])
    return buf.getvalue()
