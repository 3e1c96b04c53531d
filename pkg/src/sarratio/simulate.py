"""Synthetic scenes and speckle under the multiplicative (and additive) model.

Random draws use numpy's PCG64 generator seeded through ``SeedSequence``; a
stream is identified by ``(seed, *keys)`` so independent draws (texture,
speckle, shuffles...) never share state and are reproducible on a fixed
platform.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ValidationError
from .raster import Roi, as_raster

SEED_MAX = 2**64 - 1

# stream keys for make_rng
STREAM_TEXTURE = 1
STREAM_SPECKLE = 2
STREAM_ADDITIVE = 3
STREAM_SHUFFLE = 4

PHANTOM_KINDS = ("blocks_points", "strips", "step", "textured_step", "sine")


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= SEED_MAX:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream ``(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([check_seed(seed), *keys])))


@dataclass(frozen=True)
class SpeckleParams:
    looks: float
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.looks) and self.looks > 0):
            raise ValidationError(f"looks must be positive, got {self.looks}")
        check_seed(self.seed)


# ---------------------------------------------------------------- phantoms

BLOCK_LEVELS = {"background": 10.0, "top_left": 2.0, "top_right": 40.0, "bottom_left": 60.0, "bottom_right": 80.0}
SCATTERER_LEVEL = 240.0
N_SCATTERERS = 20
STRIP_WIDTHS = (1, 2, 3, 4, 6, 8, 11, 16, 23, 32)


def _square_slices(side: int) -> dict[str, tuple[slice, slice]]:
    s = side // 5
    out = {}
    for name, (qy, qx) in {
        "top_left": (0, 0),
        "top_right": (0, 1),
        "bottom_left": (1, 0),
        "bottom_right": (1, 1),
    }.items():
        cy = (2 * qy + 1) * side // 4
        cx = (2 * qx + 1) * side // 4
        out[name] = (slice(cy - s // 2, cy - s // 2 + s), slice(cx - s // 2, cx - s // 2 + s))
    return out


def _scatterer_offsets(side: int, size: int) -> list[int]:
    # 21 evenly spaced slots along the line, the central one left empty so
    # the two rows of scatterers never touch
    step = side / (N_SCATTERERS + 1)
    slots = [k for k in range(N_SCATTERERS + 1) if k != N_SCATTERERS // 2]
    return [int(round((k + 0.5) * step - size / 2)) for k in slots]


def phantom_blocks_points(side: int = 500) -> np.ndarray:
    """Blocks-and-points phantom: background 10, four squares, forty bright scatterers.

    Squares of side ``side // 5`` are centred in each quadrant with levels
    2 (top left), 40 (top right), 60 (bottom left) and 80 (bottom right).
    Twenty 4x4 scatterers sit on the horizontal mid-line and twenty 4x2
    (4 rows, 2 columns) on the vertical mid-line, all with intensity 240.
    """
    if side < 100:
        raise ValidationError(f"blocks_points phantom needs side >= 100, got {side}")
    img = np.full((side, side), BLOCK_LEVELS["background"])
    for name, sl in _square_slices(side).items():
        img[sl] = BLOCK_LEVELS[name]
    mid = side // 2
    for x in _scatterer_offsets(side, 4):
        img[mid - 2:mid + 2, x:x + 4] = SCATTERER_LEVEL
    for y in _scatterer_offsets(side, 4):
        img[y:y + 4, mid - 1:mid + 1] = SCATTERER_LEVEL
    return img


def blocks_points_rois(side: int = 500) -> dict[str, Roi]:
    """Flat measurement regions of the blocks phantom, keyed like ``BLOCK_LEVELS``.

    Square ROIs are the central 80% of each square; the background ROI is the
    band above the top squares, left of the vertical scatterer line.
    """
    rois = {}
    m = max(2, side // 50)
    top = _square_slices(side)["top_left"][0].start
    rois["background"] = Roi(x0=m, y0=m, w=side // 2 - 4 - 2 * m, h=top - 2 * m)
    for name, (sy, sx) in _square_slices(side).items():
        s = sy.stop - sy.start
        pad = s // 10
        rois[name] = Roi(x0=sx.start + pad, y0=sy.start + pad, w=s - 2 * pad, h=s - 2 * pad)
    return rois


def phantom_strips(
    side: int,
    low: float = 1.0,
    high: float = 20.0,
    widths: Sequence[int] = STRIP_WIDTHS,
    rows: int | None = None,
) -> np.ndarray:
    """Vertical strips of value ``high`` on a ``low`` background.

    Strips are placed left to right in the given order separated by equal
    gaps (the leftover goes after the last strip).
    """
    rows = side if rows is None else rows
    _check_levels(low, high)
    widths = [int(w) for w in widths]
    if any(w < 1 for w in widths):
        raise ValidationError("strip widths must be positive")
    img = np.full((rows, side), float(low))
    if not widths:
        return img
    gap = (side - sum(widths)) // (len(widths) + 1)
    if gap < 1:
        raise ValidationError(f"strips of total width {sum(widths)} plus gaps do not fit in {side} pixels")
    x = gap
    for w in widths:
        img[:, x:x + w] = high
        x += w + gap
    return img


def phantom_step(side: int, left: float = 11.0, right: float = 1.0, rows: int | None = None) -> np.ndarray:
    rows = side if rows is None else rows
    _check_levels(left, right)
    img = np.full((rows, side), float(right))
    img[:, : side // 2] = left
    return img


def phantom_textured_step(
    side: int, seed: int, left: float = 11.0, right: float = 1.0, rows: int | None = None
) -> np.ndarray:
    """Step whose levels are modulated by unit-mean exponential texture."""
    step = phantom_step(side, left, right, rows)
    texture = make_rng(seed, STREAM_TEXTURE).standard_exponential(step.shape)
    return step * texture


def phantom_sine(
    side: int, mean: float = 10.0, amplitude: float = 5.0, period: float | None = None, rows: int | None = None
) -> np.ndarray:
    """Slowly varying backscatter ``mean + amplitude * sin(2 pi x / period)`` along columns."""
    rows = side if rows is None else rows
    period = float(side if period is None else period)
    if not mean > 0 or amplitude < 0 or period <= 0:
        raise ValidationError("sine phantom needs mean > 0, amplitude >= 0, period > 0")
    if amplitude >= mean:
        raise ValidationError(f"sine amplitude {amplitude} >= mean {mean} gives non-positive backscatter")
    x = np.arange(side)
    profile = mean + amplitude * np.sin(2.0 * np.pi * x / period)
    return np.tile(profile, (rows, 1))


def _check_levels(*levels: float) -> None:
    if not all(np.isfinite(v) and v > 0 for v in levels):
        raise ValidationError(f"intensity levels must be positive, got {levels}")


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    side: int = 500
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PHANTOM_KINDS:
            raise ValidationError(f"unknown phantom kind {self.kind!r}; expected one of {PHANTOM_KINDS}")
        if not isinstance(self.side, int) or self.side <= 0:
            raise ValidationError(f"side must be a positive integer, got {self.side!r}")


def make_phantom(spec: PhantomSpec, seed: int = 0) -> np.ndarray:
    p = dict(spec.params)
    try:
        if spec.kind == "blocks_points":
            return phantom_blocks_points(spec.side, **p)
        if spec.kind == "strips":
            return phantom_strips(spec.side, **p)
        if spec.kind == "step":
            return phantom_step(spec.side, **p)
        if spec.kind == "textured_step":
            return phantom_textured_step(spec.side, seed, **p)
        return phantom_sine(spec.side, **p)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {spec.kind} phantom: {exc}") from None


# ------------------------------------------------------------------ noise

def gamma_speckle(width: int, height: int, params: SpeckleParams) -> np.ndarray:
    """I.i.d. Gamma deviates with unit mean and shape ``params.looks``."""
    if width < 1 or height < 1:
        raise ValidationError("speckle field dimensions must be positive")
    rng = make_rng(params.seed, STREAM_SPECKLE)
    return rng.gamma(shape=params.looks, scale=1.0 / params.looks, size=(height, width))


def apply_multiplicative(x, y) -> np.ndarray:
    x, y = as_raster(x), as_raster(y)
    if x.shape != y.shape:
        raise ValidationError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x * y


def apply_additive(x, sigma: float, seed: int) -> np.ndarray:
    x = as_raster(x)
    if not (np.isfinite(sigma) and sigma >= 0):
        raise ValidationError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return x.copy()
    return x + make_rng(seed, STREAM_ADDITIVE).normal(0.0, sigma, size=x.shape)


@dataclass(frozen=True)
class Scene:
    """JSON scene descriptor ``{kind, side, params, looks, seed}``."""

    kind: str
    side: int = 500
    params: dict[str, Any] = field(default_factory=dict)
    looks: float = 1.0
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> Scene:
        unknown = set(d) - {"kind", "side", "params", "looks", "seed"}
        if unknown:
            raise ValidationError(f"unknown scene keys: {sorted(unknown)}")
        if "kind" not in d:
            raise ValidationError("scene descriptor needs a 'kind'")
        return cls(**d)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "side": self.side, "params": dict(self.params), "looks": self.looks, "seed": self.seed}


def simulate_scene(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(truth, noisy)`` for a scene descriptor."""
    truth = make_phantom(PhantomSpec(scene.kind, scene.side, scene.params), scene.seed)
    height, width = truth.shape
    speckle = gamma_speckle(width, height, SpeckleParams(scene.looks, scene.seed))
    return truth, apply_multiplicative(truth, speckle)
