"""Reference despeckling filters: identity, Boxcar, Enhanced Lee and SRAD.

``FilterSpec`` is the JSON-serialisable description shared by the CLI and
the tuner, e.g. ``{"family": "srad", "params": {"T": 300, "dt": 0.05}}``.
The ``external`` family loads a raster produced by a third-party filter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.ndimage import uniform_filter

from ._window import check_window, window_mean_var
from .errors import DivergenceError, DomainError, ValidationError
from .raster import as_raster, load_raster

FAMILIES = ("identity", "boxcar", "elee", "srad", "external")

DEFAULTS: dict[str, dict[str, Any]] = {
    "identity": {},
    "boxcar": {"w": 5},
    "elee": {"w": 9, "looks": 1.0, "k": 1.0},
    "srad": {"T": 300, "dt": 0.05, "q0_window": 25, "q0_update": False},
    "external": {},
}


@dataclass(frozen=True)
class FilterSpec:
    family: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown filter family {self.family!r}; expected one of {FAMILIES}")
        allowed = set(DEFAULTS[self.family]) | ({"path"} if self.family == "external" else set())
        unknown = set(self.params) - allowed
        if unknown:
            raise ValidationError(f"unknown {self.family} parameters: {sorted(unknown)}")
        if self.family == "external" and "path" not in self.params:
            raise ValidationError("external filter needs a 'path' parameter")
        p = self.resolved()
        if self.family in ("boxcar", "elee"):
            check_window(p["w"])
        if self.family == "elee" and not (p["looks"] > 0 and p["k"] >= 0):
            raise ValidationError("elee needs looks > 0 and k >= 0")
        if self.family == "srad":
            _check_srad(p["T"], p["dt"])
            check_window(p["q0_window"])

    def resolved(self) -> dict[str, Any]:
        return {**DEFAULTS[self.family], **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> FilterSpec:
        if not isinstance(d, dict) or "family" not in d:
            raise ValidationError("filter spec must be an object with a 'family' key")
        unknown = set(d) - {"family", "params"}
        if unknown:
            raise ValidationError(f"unknown filter spec keys: {sorted(unknown)}")
        return cls(d["family"], dict(d.get("params") or {}))

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}

    def label(self) -> str:
        if not self.params:
            return self.family
        args = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.family}({args})"


def apply_filter(spec: FilterSpec, z) -> np.ndarray:
    p = spec.resolved()
    if spec.family == "identity":
        return filter_identity(z)
    if spec.family == "boxcar":
        return filter_boxcar(z, p["w"])
    if spec.family == "elee":
        return filter_elee(z, p["w"], p["looks"], p["k"])
    if spec.family == "srad":
        return filter_srad(z, p["T"], p["dt"], q0_window=p["q0_window"], q0_update=p["q0_update"])
    out = load_raster(p["path"])
    z = as_raster(z)
    if out.shape != z.shape:
        raise ValidationError(f"external result {p['path']} has shape {out.shape}, input has {z.shape}")
    return out


def filter_identity(z) -> np.ndarray:
    return as_raster(z).copy()


def filter_boxcar(z, w: int) -> np.ndarray:
    """Local mean over a ``w x w`` window, mirror-extended at the borders."""
    z = as_raster(z)
    check_window(w, z.shape)
    return uniform_filter(z, size=w, mode="reflect")


def filter_elee(z, w: int = 9, looks: float = 1.0, k: float = 1.0) -> np.ndarray:
    """Enhanced Lee filter.

    Each pixel is classified by its local coefficient of variation ``C``
    against ``Cu = 1/sqrt(L)`` and ``Cmax = sqrt(1 + 2/L)``:

    * ``C <= Cu``: homogeneous, replaced by the local mean;
    * ``Cu < C < Cmax``: ``mean * W + z * (1 - W)`` with
      ``W = exp(-k (C - Cu) / (Cmax - C))``;
    * ``C >= Cmax``: point target, kept as is.
    """
    z = as_raster(z, intensity=True)
    check_window(w, z.shape)
    if not (looks > 0 and k >= 0):
        raise ValidationError("elee needs looks > 0 and k >= 0")
    cu = 1.0 / math.sqrt(looks)
    cmax = math.sqrt(1.0 + 2.0 / looks)

    mean, var = window_mean_var(z, w)
    c = np.zeros_like(mean)
    np.divide(np.sqrt(var), mean, out=c, where=mean > 0)
    out = np.where(c <= cu, mean, z)
    mid = (c > cu) & (c < cmax)
    weight = np.exp(-k * (c[mid] - cu) / (cmax - c[mid]))
    out[mid] = mean[mid] * weight + z[mid] * (1.0 - weight)
    return out


def _check_srad(T: int, dt: float) -> None:
    if isinstance(T, bool) or not isinstance(T, (int, np.integer)) or T < 0:
        raise ValidationError(f"SRAD iterations must be a non-negative integer, got {T!r}")
    if not 0 < dt <= 0.25:
        raise ValidationError(f"SRAD timestep must lie in (0, 0.25], got {dt}")


def _homogeneous_cv(img: np.ndarray, w: int) -> float:
    """Coefficient of variation of the most homogeneous ``w x w`` tile."""
    ny, nx = img.shape[0] // w, img.shape[1] // w
    if ny == 0 or nx == 0:
        tiles = img.reshape(1, -1)
    else:
        tiles = img[: ny * w, : nx * w].reshape(ny, w, nx, w).transpose(0, 2, 1, 3).reshape(ny * nx, w * w)
    mean = tiles.mean(axis=1)
    std = tiles.std(axis=1, ddof=1)
    ok = mean > 0
    return float(np.min(std[ok] / mean[ok]))


def filter_srad(
    z, T: int = 300, dt: float = 0.05, q0_window: int = 25, q0_update: bool = False
) -> np.ndarray:
    """Speckle reducing anisotropic diffusion, explicit four-neighbour scheme.

    ``T`` is the number of iterations.  The speckle scale ``q0`` is the
    coefficient of variation of the most homogeneous ``q0_window`` tile of the
    input; with ``q0_update`` it is re-estimated on the current image at every
    iteration instead, which shrinks q0 as the image smooths and stalls the
    diffusion around isolated bright pixels.  Borders are Neumann (replicated).
    """
    z = as_raster(z)
    if np.any(z <= 0):
        raise DomainError("SRAD needs a strictly positive input")
    _check_srad(T, dt)
    img = z.copy()
    q0 = _homogeneous_cv(img, q0_window)
    for it in range(1, T + 1):
        if q0_update and it > 1:
            q0 = _homogeneous_cv(img, q0_window)
        q0sq = max(q0, 1e-12) ** 2

        p = np.pad(img, 1, mode="edge")
        dn = p[:-2, 1:-1] - img
        ds = p[2:, 1:-1] - img
        dw = p[1:-1, :-2] - img
        de = p[1:-1, 2:] - img

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            grad2 = (dn * dn + ds * ds + dw * dw + de * de) / (img * img)
            lap = (dn + ds + dw + de) / img
            qsq = (0.5 * grad2 - lap * lap / 16.0) / (1.0 + 0.25 * lap) ** 2
            qsq = np.maximum(qsq, 0.0)
            c = 1.0 / (1.0 + (qsq - q0sq) / (q0sq * (1.0 + q0sq)))
        c = np.clip(np.nan_to_num(c, nan=0.0, posinf=1.0, neginf=0.0), 0.0, 1.0)

        cp = np.pad(c, 1, mode="edge")
        div = cp[2:, 1:-1] * ds + c * dn + cp[1:-1, 2:] * de + c * dw
        img = img + 0.25 * dt * div
        if not np.all(np.isfinite(img)):
            raise DivergenceError(it)
    return img
