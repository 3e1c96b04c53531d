"""Local statistics, textureless-area selection and the first-order residual.

Windows of side ``w`` are scanned with stride ``w // 2`` in row-major order.
A window is accepted when it satisfies the active selection rule and does
not overlap a previously accepted window, so every pixel is counted at most
once in the residual.

Selection rules (``mode``):

``noisy``
    the window is textureless when the ENL of the observed image is within
    ``tol_detect`` (relative) of the nominal number of looks; the ratio image
    is left unconstrained so its deviations show up in the residual.
``paper``
    accept when ``|ENL_ratio - ENL_noisy| / ENL_noisy <= tol`` and
    ``|mu_ratio - 1| <= tol``.

Windows whose observed or ratio ENL is infinite (zero variance) are never
selected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._window import check_window, window_mean_var
from .errors import NoTexturelessAreaError, ValidationError
from .raster import Roi, as_raster

MODES = ("noisy", "paper")


@dataclass(frozen=True)
class LocalStatsField:
    mean: np.ndarray
    std: np.ndarray
    enl: np.ndarray
    window: int


def local_stats(r, w: int) -> LocalStatsField:
    """Sliding-window mean, sample std and ENL (``+inf`` where std is 0)."""
    r = as_raster(r)
    check_window(w, r.shape, strict=True)
    mean, var = window_mean_var(r, w, ddof=1)
    enl = np.full(r.shape, np.inf)
    np.divide(mean * mean, var, out=enl, where=var > 0)
    return LocalStatsField(mean=mean, std=np.sqrt(var), enl=enl, window=w)


@dataclass(frozen=True)
class AreaWindow:
    roi: Roi
    enl_noisy: float
    enl_ratio: float
    mu_ratio: float

    def to_dict(self) -> dict:
        return {**self.roi.to_dict(), "enl_noisy": self.enl_noisy, "enl_ratio": self.enl_ratio, "mu_ratio": self.mu_ratio}


@dataclass(frozen=True)
class AreaSelection:
    windows: tuple[AreaWindow, ...]
    tol: float
    mode: str = "noisy"
    w: int = 25
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.windows)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mode": self.mode,
            "w": self.w,
            "tol": self.tol,
            **self.extra,
            "windows": [win.to_dict() for win in self.windows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> AreaSelection:
        wins = tuple(
            AreaWindow(Roi(v["x0"], v["y0"], v["w"], v["h"]), v["enl_noisy"], v["enl_ratio"], v["mu_ratio"])
            for v in d["windows"]
        )
        extra = {k: v for k, v in d.items() if k not in ("n", "mode", "w", "tol", "windows")}
        return cls(wins, d["tol"], d.get("mode", "noisy"), d.get("w", 25), extra)


def window_grid(shape: tuple[int, int], w: int) -> list[tuple[int, int]]:
    """Top-left corners ``(y0, x0)`` of the scan, row-major, stride ``w // 2``."""
    stride = max(1, w // 2)
    height, width = shape
    return [(y, x) for y in range(0, height - w + 1, stride) for x in range(0, width - w + 1, stride)]


def greedy_disjoint(candidates, w: int) -> list[Roi]:
    """Accept candidate corners in order, skipping any that overlap an accepted one."""
    taken: list[Roi] = []
    # windows have equal size, so overlap checks only need nearby accepted ones
    by_row: dict[int, list[Roi]] = {}
    for y, x in candidates:
        roi = Roi(x, y, w, w)
        clash = False
        for row in range((y - w) // w, (y + w) // w + 1):
            if any(roi.overlaps(o) for o in by_row.get(row, ())):
                clash = True
                break
        if not clash:
            taken.append(roi)
            by_row.setdefault(y // w, []).append(roi)
    return taken


def select_areas(
    z,
    ratio,
    w: int = 25,
    tol: float = 0.03,
    mode: str = "noisy",
    looks: float | None = None,
    tol_detect: float = 0.25,
) -> AreaSelection:
    """Find disjoint textureless windows and their (ENL_noisy, ENL_ratio, mu_ratio)."""
    z, ratio = as_raster(z), as_raster(ratio)
    if z.shape != ratio.shape:
        raise ValidationError(f"dimension mismatch: {z.shape} vs {ratio.shape}")
    check_window(w, z.shape)
    if mode not in MODES:
        raise ValidationError(f"unknown selection mode {mode!r}; expected one of {MODES}")
    if mode == "noisy" and not (looks is not None and looks > 0):
        raise ValidationError("mode 'noisy' needs the nominal number of looks")
    if tol < 0 or tol_detect < 0:
        raise ValidationError("tolerances must be non-negative")

    # the statistics of a window equal the sliding-field value at its centre
    fz = local_stats(z, w) if w < min(z.shape) else None
    fr = local_stats(ratio, w) if w < min(z.shape) else None
    h = w // 2

    def window_values(y, x):
        if fz is not None:
            cy, cx = y + h, x + h
            return fz.enl[cy, cx], fr.enl[cy, cx], fr.mean[cy, cx]
        return _direct(z[y:y + w, x:x + w], ratio[y:y + w, x:x + w])

    stats = {}
    passing = []
    for y, x in window_grid(z.shape, w):
        enl_z, enl_r, mu_r = (float(v) for v in window_values(y, x))
        if not (math.isfinite(enl_z) and math.isfinite(enl_r)) or enl_z <= 0:
            continue
        if mode == "noisy":
            ok = abs(enl_z - looks) / looks <= tol_detect
        else:
            ok = abs(enl_r - enl_z) / enl_z <= tol and abs(mu_r - 1.0) <= tol
        if ok:
            passing.append((y, x))
            stats[(y, x)] = (enl_z, enl_r, mu_r)

    rois = greedy_disjoint(passing, w)
    if not rois:
        raise NoTexturelessAreaError(
            "no textureless area found: the measure needs at least one window that "
            f"passes the '{mode}' selection rule (w={w})"
        )
    windows = tuple(AreaWindow(roi, *stats[(roi.y0, roi.x0)]) for roi in rois)
    extra = {"looks": looks, "tol_detect": tol_detect} if mode == "noisy" else {}
    return AreaSelection(windows=windows, tol=tol, mode=mode, w=w, extra=extra)


def _direct(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float]:
    def enl(v):
        var = v.var(ddof=1)
        return math.inf if var == 0 else v.mean() ** 2 / var

    return enl(a), enl(b), float(b.mean())


def first_order_residual(sel: AreaSelection) -> float:
    """Half the sum over windows of the relative ENL residual plus the mean residual."""
    if sel.n < 1:
        raise ValidationError("first-order residual needs at least one window")
    terms = []
    for win in sel.windows:
        if not (math.isfinite(win.enl_noisy) and win.enl_noisy > 0):
            raise ValidationError(f"window {win.roi} has invalid ENL_noisy {win.enl_noisy}")
        terms += [abs(win.enl_noisy - win.enl_ratio) / win.enl_noisy, abs(1.0 - win.mu_ratio)]
    # correctly rounded, so the result does not depend on window order
    return 0.5 * math.fsum(terms)
