"""Ratio images and the composite score ``M = r + delta_h``.

``evaluate_m`` works on the multiplicative model (ratio ``Z / Xhat``);
``evaluate_m_additive`` on the additive one (residual ``Z - Xhat``), where
the first-order targets become mean 0 and standard deviation ``sigma``.
A perfect filter scores 0; larger is worse.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import firstorder, secondorder
from .errors import NoTexturelessAreaError, SarRatioError, ValidationError
from .firstorder import AreaSelection, AreaWindow
from .raster import as_raster
from .simulate import check_seed

CSV_COLUMNS = ("label", "h_o", "h_g_bar", "delta_h", "r", "M", "n")


@dataclass(frozen=True)
class EvalConfig:
    w: int = 25
    tol: float = 0.03
    mode: str = "noisy"
    tol_detect: float = 0.25
    p: int = 100
    win: int = 11
    offsets: tuple[tuple[int, int], ...] = secondorder.DEFAULT_OFFSETS
    percentiles: tuple[float, float] = (1.0, 99.0)
    eps: float = 1e-12
    dh_scale: float = 1.0
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        if self.mode not in firstorder.MODES:
            raise ValidationError(f"unknown selection mode {self.mode!r}")
        if self.eps <= 0:
            raise ValidationError("eps must be positive")
        check_seed(self.seed)
        object.__setattr__(self, "offsets", tuple(tuple(int(v) for v in o) for o in self.offsets))
        object.__setattr__(self, "percentiles", tuple(float(v) for v in self.percentiles))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["offsets"] = [list(o) for o in self.offsets]
        d["percentiles"] = list(self.percentiles)
        d.pop("threads")
        return d


@dataclass(frozen=True)
class MReport:
    r: float
    h_o: float
    h_g_bar: float
    delta_h: float
    M: float
    n: int
    mode: str
    seed: int
    config: dict
    looks: float | None = None
    sigma: float | None = None
    model: str = "multiplicative"
    selection: AreaSelection | None = field(default=None, compare=False, repr=False)
    second_order: secondorder.SecondOrderReport | None = field(default=None, compare=False, repr=False)

    def to_dict(self, detail: bool = True) -> dict:
        d = {
            "model": self.model,
            "r": self.r,
            "h_o": self.h_o,
            "h_g_bar": self.h_g_bar,
            "delta_h": self.delta_h,
            "M": self.M,
            "n": self.n,
            "mode": self.mode,
            "seed": self.seed,
            "looks": self.looks,
            "sigma": self.sigma,
            "config": self.config,
        }
        if detail and self.selection is not None:
            d["selection"] = self.selection.to_dict()
        if detail and self.second_order is not None:
            d["h_g_samples"] = list(self.second_order.h_g_samples)
        return d

    def csv_row(self, label: str) -> dict:
        return {
            "label": label,
            "h_o": f"{self.h_o:.6g}",
            "h_g_bar": f"{self.h_g_bar:.6g}",
            "delta_h": f"{self.delta_h:.6g}",
            "r": f"{self.r:.6g}",
            "M": f"{self.M:.6g}",
            "n": str(self.n),
        }


def reports_to_csv(rows: list[tuple[str, MReport]]) -> str:
    """Comparison table, one line per filter: h_o, h_g_bar, delta_h, r, M, n."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for label, rep in rows:
        writer.writerow(rep.csv_row(label))
    return buf.getvalue()


def ratio_image(z, xhat, eps: float = 1e-12) -> np.ndarray:
    """``z / max(xhat, eps)`` elementwise."""
    z, xhat = as_raster(z, intensity=True), as_raster(xhat, intensity=True)
    if z.shape != xhat.shape:
        raise ValidationError(f"dimension mismatch: {z.shape} vs {xhat.shape}")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    return z / np.maximum(xhat, eps)


def _second_order(image, cfg: EvalConfig) -> secondorder.SecondOrderReport:
    return secondorder.delta_h(
        image, p=cfg.p, win=cfg.win, offsets=cfg.offsets, seed=cfg.seed,
        percentiles=cfg.percentiles, threads=cfg.threads, scale=cfg.dh_scale,
    )


def _finish(r: float, sel: AreaSelection, so, cfg: EvalConfig, **extra) -> MReport:
    m = r + so.delta_h
    if not all(math.isfinite(v) for v in (r, so.h_o, so.h_g_bar, so.delta_h, m)):
        raise SarRatioError("non-finite value in the quality measure")
    return MReport(
        r=r, h_o=so.h_o, h_g_bar=so.h_g_bar, delta_h=so.delta_h, M=m, n=sel.n,
        mode=cfg.mode, seed=cfg.seed, config=cfg.to_dict(), selection=sel, second_order=so, **extra,
    )


def evaluate_m(z, xhat, looks: float, cfg: EvalConfig | None = None) -> MReport:
    """Score a filtered image ``xhat`` of the observation ``z`` without reference."""
    cfg = cfg or EvalConfig()
    if not (looks is not None and math.isfinite(looks) and looks > 0):
        raise ValidationError(f"looks must be positive, got {looks}")
    z = as_raster(z, intensity=True)
    ratio = ratio_image(z, xhat, cfg.eps)
    sel = firstorder.select_areas(
        z, ratio, w=cfg.w, tol=cfg.tol, mode=cfg.mode, looks=looks, tol_detect=cfg.tol_detect
    )
    r = firstorder.first_order_residual(sel)
    so = _second_order(ratio, cfg)
    return _finish(r, sel, so, cfg, looks=float(looks))


# ------------------------------------------------------------ additive model

def residual_image(z, xhat) -> np.ndarray:
    z, xhat = as_raster(z), as_raster(xhat)
    if z.shape != xhat.shape:
        raise ValidationError(f"dimension mismatch: {z.shape} vs {xhat.shape}")
    return z - xhat


def select_areas_additive(
    z, residual, sigma: float, w: int = 25, tol: float = 0.03, mode: str = "noisy", tol_detect: float = 0.25
) -> AreaSelection:
    """Textureless windows under ``Z = X + N(0, sigma^2)``.

    ``noisy`` accepts windows whose observed std is within ``tol_detect`` of
    ``sigma``; ``paper`` accepts windows whose residual std is within ``tol``
    of the observed std and whose residual mean is within ``tol * sigma`` of 0.
    Windows with a zero-variance residual are never selected.  Each window
    stores ``(std_noisy, std_residual, mean_residual)`` in the
    ``(enl_noisy, enl_ratio, mu_ratio)`` slots.
    """
    from ._window import check_window

    z, residual = as_raster(z), as_raster(residual)
    check_window(w, z.shape, strict=True)
    if mode not in firstorder.MODES:
        raise ValidationError(f"unknown selection mode {mode!r}")
    fz = firstorder.local_stats(z, w)
    fr = firstorder.local_stats(residual, w)
    h = w // 2
    stats = {}
    passing = []
    for y, x in firstorder.window_grid(z.shape, w):
        sz, sr, mr = float(fz.std[y + h, x + h]), float(fr.std[y + h, x + h]), float(fr.mean[y + h, x + h])
        if sz <= 0 or sr <= 0:
            continue
        if mode == "noisy":
            ok = abs(sz - sigma) / sigma <= tol_detect
        else:
            ok = abs(sr - sz) / sz <= tol and abs(mr) / sigma <= tol
        if ok:
            passing.append((y, x))
            stats[(y, x)] = (sz, sr, mr)
    rois = firstorder.greedy_disjoint(passing, w)
    if not rois:
        raise NoTexturelessAreaError(
            f"no textureless area found in the residual image ('{mode}' rule, w={w})"
        )
    windows = tuple(AreaWindow(roi, *stats[(roi.y0, roi.x0)]) for roi in rois)
    return AreaSelection(windows, tol, mode, w, {"model": "additive", "sigma": sigma, "tol_detect": tol_detect})


def first_order_residual_additive(sel: AreaSelection, sigma: float) -> float:
    """Half the sum of ``|mean_res| / sigma + |std_res - sigma| / sigma`` over windows."""
    if sel.n < 1:
        raise ValidationError("first-order residual needs at least one window")
    terms = [abs(win.mu_ratio) / sigma for win in sel.windows]
    terms += [abs(win.enl_ratio - sigma) / sigma for win in sel.windows]
    return 0.5 * math.fsum(terms)


def evaluate_m_additive(z, xhat, sigma: float, cfg: EvalConfig | None = None) -> MReport:
    cfg = cfg or EvalConfig()
    if not (math.isfinite(sigma) and sigma > 0):
        raise ValidationError(f"sigma must be positive, got {sigma}")
    res = residual_image(z, xhat)
    sel = select_areas_additive(z, res, sigma, w=cfg.w, tol=cfg.tol, mode=cfg.mode, tol_detect=cfg.tol_detect)
    r = first_order_residual_additive(sel, sigma)
    so = _second_order(res, cfg)
    return _finish(r, sel, so, cfg, sigma=float(sigma), model="additive")
