"""Co-occurrence homogeneity and the shuffling test for residual structure.

The ratio image is quantized to eight levels; homogeneity (inverse
difference moment) is averaged over non-overlapping ``win x win`` tiles and
a set of pixel offsets.  Under the null hypothesis the ratio is i.i.d., so
its homogeneity should match that of random permutations of its own
values; ``delta_h`` is the relative change in percent.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .errors import ValidationError
from .raster import Roi, as_raster
from .simulate import STREAM_SHUFFLE, check_seed, make_rng

LEVELS = 8
DEFAULT_OFFSETS = ((0, 1), (1, 0))

# 1 / (1 + (i - j)^2) for every level pair
_IDM_WEIGHTS = 1.0 / (1.0 + (np.arange(LEVELS)[:, None] - np.arange(LEVELS)[None, :]) ** 2)
# integer weights on a common denominator, so homogeneity is a ratio of
# integers rounded once (independent of summation order)
_IDM_DEN = lcm(*(1 + d * d for d in range(LEVELS)))
_IDM_NUM = np.array([_IDM_DEN // (1 + d * d) for d in range(LEVELS)], dtype=np.int64)


def quantize8(r, percentiles: tuple[float, float] = (1.0, 99.0)) -> np.ndarray:
    """Equal-width 8-level quantization between two percentiles (values clipped)."""
    r = as_raster(r)
    lo, hi = np.percentile(r, percentiles)
    if not hi > lo:
        return np.zeros(r.shape, dtype=np.uint8)
    q = np.floor((np.clip(r, lo, hi) - lo) / (hi - lo) * LEVELS)
    return np.clip(q, 0, LEVELS - 1).astype(np.uint8)


@dataclass(frozen=True)
class Glcm:
    counts: np.ndarray  # (8, 8) int64
    offset: tuple[int, int]

    @property
    def K(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        return self.counts / self.K


def _check_offset(offset) -> tuple[int, int]:
    dy, dx = (int(v) for v in offset)
    if dy == 0 and dx == 0:
        raise ValidationError("GLCM offset must be non-zero")
    return dy, dx


def _pairs(block: np.ndarray, dy: int, dx: int) -> tuple[np.ndarray, np.ndarray]:
    """Level arrays ``(q(p), q(p + offset))`` over positions with both ends in ``block``."""
    h, w = block.shape
    ys = slice(max(0, -dy), h - max(0, dy))
    xs = slice(max(0, -dx), w - max(0, dx))
    yt = slice(max(0, dy), h - max(0, -dy))
    xt = slice(max(0, dx), w - max(0, -dx))
    return block[ys, xs], block[yt, xt]


def glcm(q, roi: Roi, offset=(0, 1)) -> Glcm:
    """Symmetric co-occurrence counts of level pairs at ``offset`` inside ``roi``."""
    q = np.asarray(q)
    roi.check(q.shape)
    dy, dx = _check_offset(offset)
    if abs(dy) >= roi.h or abs(dx) >= roi.w:
        raise ValidationError(f"ROI {roi} is smaller than the offset span {offset}")
    a, b = _pairs(q[roi.slices], dy, dx)
    a = a.ravel().astype(np.int64)
    b = b.ravel().astype(np.int64)
    counts = np.bincount(a * LEVELS + b, minlength=LEVELS * LEVELS).reshape(LEVELS, LEVELS)
    return Glcm(counts=counts + counts.T, offset=(dy, dx))


def homogeneity(g: Glcm) -> float:
    if g.K <= 0:
        raise ValidationError("empty co-occurrence matrix")
    d = np.abs(np.arange(LEVELS)[:, None] - np.arange(LEVELS)[None, :])
    num = int(np.sum(_IDM_NUM[d] * g.counts.astype(np.int64)))
    return float(Fraction(num, g.K * _IDM_DEN))


def mean_homogeneity(q, win: int = 11, offsets=DEFAULT_OFFSETS) -> float:
    """Homogeneity averaged over the ``win x win`` tiling and over ``offsets``.

    Every full tile holds the same number of pairs for a given offset, so
    the average of per-tile homogeneities is the mean pair weight over all
    within-tile pairs.  Symmetrisation does not change the value.
    """
    q = np.asarray(q)
    if q.ndim != 2:
        raise ValidationError("quantized raster must be 2-D")
    if isinstance(win, bool) or not isinstance(win, (int, np.integer)) or win < 2:
        raise ValidationError(f"GLCM window must be an integer >= 2, got {win!r}")
    ny, nx = q.shape[0] // win, q.shape[1] // win
    if ny == 0 or nx == 0:
        raise ValidationError(f"no full {win}x{win} window fits in a {q.shape[1]}x{q.shape[0]} raster")
    offsets = [_check_offset(o) for o in offsets]
    if not offsets:
        raise ValidationError("at least one offset is required")
    tiles = q[: ny * win, : nx * win].reshape(ny, win, nx, win).transpose(0, 2, 1, 3).astype(np.int8)
    total = Fraction(0)
    for dy, dx in offsets:
        if abs(dy) >= win or abs(dx) >= win:
            raise ValidationError(f"offset {(dy, dx)} does not fit in a {win}x{win} window")
        a = tiles[:, :, max(0, -dy): win - max(0, dy), max(0, -dx): win - max(0, dx)]
        b = tiles[:, :, max(0, dy): win - max(0, -dy), max(0, dx): win - max(0, -dx)]
        hist = np.bincount(np.abs(a - b).astype(np.int64).ravel(), minlength=LEVELS)
        total += Fraction(int(hist @ _IDM_NUM), int(hist.sum()) * _IDM_DEN)
    return float(total / len(offsets))


def shuffle(r, seed: int) -> np.ndarray:
    """Uniform random permutation of all pixel values (same shape)."""
    a = np.asarray(r)
    rng = make_rng(seed, STREAM_SHUFFLE)
    return rng.permutation(a.ravel()).reshape(a.shape)


@dataclass(frozen=True)
class SecondOrderReport:
    h_o: float
    h_g_samples: tuple[float, ...]
    h_g_bar: float
    delta_h: float
    p: int
    seed: int
    scale: float = 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["h_g_samples"] = list(self.h_g_samples)
        return d


def _replicate_h(q: np.ndarray, seed: int, index: int, win: int, offsets) -> float:
    rng = make_rng(seed, STREAM_SHUFFLE, index)
    perm = rng.permutation(q.ravel()).reshape(q.shape)
    return mean_homogeneity(perm, win, offsets)


def delta_h(
    ratio,
    p: int = 100,
    win: int = 11,
    offsets=DEFAULT_OFFSETS,
    seed: int = 0,
    percentiles: tuple[float, float] = (1.0, 99.0),
    threads: int | None = None,
    scale: float = 1.0,
) -> SecondOrderReport:
    """Percent change of mean homogeneity between ``ratio`` and ``p`` shufflings of it.

    Shuffling the quantized levels is equivalent to quantizing a shuffled
    image, since a permutation leaves the percentiles unchanged.
    Replicate ``i`` uses the stream ``(seed, shuffle, i)``, so results do not
    depend on ``threads``.  ``scale`` multiplies the percentage; 100 gives the
    magnitude used in published comparison tables.
    """
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or p < 1:
        raise ValidationError(f"number of shuffles must be a positive integer, got {p!r}")
    if not scale > 0:
        raise ValidationError("delta_h scale must be positive")
    seed = check_seed(seed)
    q = quantize8(ratio, percentiles)
    h_o = mean_homogeneity(q, win, offsets)

    def job(i):
        return _replicate_h(q, seed, i, win, offsets)

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(job, range(p)))
    else:
        samples = [job(i) for i in range(p)]
    h_g_bar = float(np.mean(samples))
    return SecondOrderReport(
        h_o=h_o,
        h_g_samples=tuple(samples),
        h_g_bar=h_g_bar,
        delta_h=scale * 100.0 * abs(h_o - h_g_bar) / h_o,
        p=int(p),
        seed=seed,
        scale=float(scale),
    )
