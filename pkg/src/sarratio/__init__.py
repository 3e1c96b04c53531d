"""Unassisted quality assessment of SAR despeckling filters via ratio images."""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DivergenceError,
    DomainError,
    NoTexturelessAreaError,
    RasterFormatError,
    SarRatioError,
    ValidationError,
)
from .filters import FilterSpec, apply_filter  # noqa: E402
from .quality import EvalConfig, MReport, evaluate_m, evaluate_m_additive, ratio_image  # noqa: E402
from .raster import Roi, SummaryStats, load_raster, save_raster  # noqa: E402
from .simulate import Scene, simulate_scene  # noqa: E402
from .tune import ParamGrid, grid_search  # noqa: E402

__all__ = [
    "DivergenceError", "DomainError", "EvalConfig", "FilterSpec", "MReport", "NoTexturelessAreaError",
    "ParamGrid", "RasterFormatError", "Roi", "SarRatioError", "Scene", "SummaryStats", "ValidationError",
    "__version__", "apply_filter", "evaluate_m", "evaluate_m_additive", "grid_search", "load_raster",
    "ratio_image", "save_raster", "simulate_scene",
]
