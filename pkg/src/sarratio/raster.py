"""Raster container helpers, ROI statistics and RAS1 file I/O.

A raster is a 2-D ``float64`` numpy array indexed ``[row, col]``.  RAS1 files
hold one line of JSON header followed by the raw little-endian payload::

    {"magic":"RAS1","width":W,"height":H,"dtype":"f64le"}\\n<W*H f64le values>
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, HeaderError, LengthMismatchError, NonFiniteError, ValidationError

MAGIC = "RAS1"
DTYPE = "f64le"


@dataclass(frozen=True)
class Roi:
    """Axis-aligned window: top-left ``(x0, y0)`` and extents ``(w, h)`` in pixels."""

    x0: int
    y0: int
    w: int
    h: int

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y0 + self.h), slice(self.x0, self.x0 + self.w)

    def check(self, shape: tuple[int, ...]) -> None:
        height, width = shape[:2]
        if self.w < 1 or self.h < 1:
            raise ValidationError(f"ROI extents must be positive: {self}")
        if self.x0 < 0 or self.y0 < 0 or self.x0 + self.w > width or self.y0 + self.h > height:
            raise ValidationError(f"ROI {self} does not fit in a {width}x{height} raster")

    def overlaps(self, other: Roi) -> bool:
        return not (
            self.x0 + self.w <= other.x0
            or other.x0 + other.w <= self.x0
            or self.y0 + self.h <= other.y0
            or other.y0 + other.h <= self.y0
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std: float
    enl: float

    def to_dict(self) -> dict:
        return asdict(self)


def as_raster(a, *, intensity: bool = False) -> np.ndarray:
    """Coerce ``a`` to a 2-D float64 raster, checking finiteness.

    With ``intensity=True`` negative values are rejected as well.
    """
    r = np.asarray(a, dtype=np.float64)
    if r.ndim != 2 or r.size == 0:
        raise ValidationError(f"raster must be a non-empty 2-D array, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValidationError("raster contains non-finite values")
    if intensity and np.any(r < 0):
        raise DomainError("intensity raster contains negative values")
    return r


def enl_from_moments(mean: float, var: float) -> float:
    """Equivalent number of looks ``mean**2 / var``; ``+inf`` when ``var == 0``."""
    if var <= 0.0:
        return math.inf
    return mean * mean / var


def stats(values) -> SummaryStats:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 2:
        raise ValidationError("statistics need at least 2 samples")
    mean = float(v.mean())
    var = float(v.var(ddof=1))
    return SummaryStats(mean=mean, std=math.sqrt(var), enl=enl_from_moments(mean, var))


def roi_stats(r, roi: Roi) -> SummaryStats:
    """Mean, sample standard deviation (divisor N-1) and ENL inside ``roi``."""
    r = as_raster(r)
    roi.check(r.shape)
    if roi.w * roi.h < 2:
        raise ValidationError("ROI area must be at least 2 pixels")
    return stats(r[roi.slices])


def square_amplitude(r) -> np.ndarray:
    """Convert amplitude data to intensity."""
    r = as_raster(r)
    if np.any(r < 0):
        raise DomainError("amplitude raster contains negative values")
    return r * r


def save_raster(r, path) -> None:
    r = as_raster(r)
    height, width = r.shape
    header = json.dumps(
        {"magic": MAGIC, "width": width, "height": height, "dtype": DTYPE},
        separators=(",", ":"),
    )
    payload = np.ascontiguousarray(r, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        fh.write(payload)


def load_raster(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    nl = blob.find(b"\n")
    if nl < 0:
        raise HeaderError(f"{path}: missing header line")
    try:
        header = json.loads(blob[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderError(f"{path}: header is not valid JSON ({exc})") from None
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise HeaderError(f"{path}: not a RAS1 file")
    if header.get("dtype") != DTYPE:
        raise HeaderError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    width, height = header.get("width"), header.get("height")
    if not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in (width, height)):
        raise HeaderError(f"{path}: width/height must be positive integers")

    payload = blob[nl + 1:]
    expected = width * height * 8
    if len(payload) != expected:
        raise LengthMismatchError(
            f"{path}: header declares {width}x{height} ({expected} bytes), payload has {len(payload)} bytes"
        )
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(height, width)
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{path}: payload contains non-finite values")
    return data


def to_uint8(r, clip_percentiles: tuple[float, float] = (0.0, 100.0)) -> np.ndarray:
    """Clip at the given percentiles and map linearly onto 0..255."""
    r = as_raster(r)
    lo, hi = np.percentile(r, clip_percentiles)
    if not hi > lo:
        return np.full(r.shape, 128, dtype=np.uint8)
    scaled = (np.clip(r, lo, hi) - lo) / (hi - lo) * 255.0
    return np.rint(scaled).astype(np.uint8)


def export_png8(r, path, clip_percentiles: tuple[float, float] = (1.0, 99.0)) -> None:
    """Write an 8-bit grayscale PNG view of ``r`` (not a lossless format)."""
    from PIL import Image

    Image.fromarray(to_uint8(r, clip_percentiles)).save(path, format="PNG")
