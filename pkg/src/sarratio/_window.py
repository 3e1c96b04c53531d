from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import ValidationError


def check_window(w: int, shape: tuple[int, int] | None = None, *, strict: bool = False) -> int:
    if isinstance(w, bool) or not isinstance(w, (int, np.integer)) or w < 3 or w % 2 == 0:
        raise ValidationError(f"window must be an odd integer >= 3, got {w!r}")
    if shape is not None:
        limit = min(shape)
        if w > limit or (strict and w == limit):
            raise ValidationError(f"window {w} too large for a {shape[1]}x{shape[0]} raster")
    return int(w)


def window_mean_var(r: np.ndarray, w: int, ddof: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Sliding ``w x w`` mean and variance with mirror (half-sample) boundaries.

    Data are shifted by one of its own values before accumulating, so a
    constant neighbourhood yields exactly zero variance.
    """
    shift = r.flat[0]
    d = r - shift
    m = uniform_filter(d, size=w, mode="reflect")
    m2 = uniform_filter(d * d, size=w, mode="reflect")
    n = w * w
    var = np.maximum(m2 - m * m, 0.0) * (n / (n - ddof))
    # sums of exact zeros are exact; anything below rounding noise is zero
    var[var <= 1e-13 * (m2 + 1e-300)] = 0.0
    return m + shift, var
