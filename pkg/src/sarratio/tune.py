"""Exhaustive grid search of filter parameters minimising M."""
from __future__ import annotations

import csv
import io
import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any

from .errors import SarRatioError, ValidationError
from .filters import FAMILIES, FilterSpec, apply_filter
from .quality import EvalConfig, MReport, evaluate_m


@dataclass(frozen=True)
class ParamGrid:
    family: str
    axes: tuple[tuple[str, tuple[Any, ...]], ...]

    def __post_init__(self):
        if self.family not in FAMILIES or self.family == "external":
            raise ValidationError(f"cannot tune filter family {self.family!r}")
        axes = tuple((str(name), tuple(values)) for name, values in self.axes)
        if any(not values for _, values in axes):
            raise ValidationError("every grid axis needs at least one value")
        if len({name for name, _ in axes}) != len(axes):
            raise ValidationError("duplicate grid axis")
        object.__setattr__(self, "axes", axes)
        self.specs()  # FilterSpec validates every point

    @property
    def size(self) -> int:
        n = 1
        for _, values in self.axes:
            n *= len(values)
        return n

    def points(self) -> list[dict[str, Any]]:
        """Grid points in row-major order over the axes as declared."""
        names = [name for name, _ in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.axes))]

    def specs(self) -> list[FilterSpec]:
        return [FilterSpec(self.family, p) for p in self.points()]

    @classmethod
    def from_dict(cls, d: dict) -> ParamGrid:
        try:
            return cls(d["family"], tuple((name, tuple(values)) for name, values in d["axes"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed grid: {exc!r}") from None

    @classmethod
    def from_json(cls, text: str) -> ParamGrid:
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"grid is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ValidationError("grid must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return {"family": self.family, "axes": [[name, list(values)] for name, values in self.axes]}


@dataclass(frozen=True)
class TuneRow:
    index: int
    spec: FilterSpec
    report: MReport | None
    error: str | None
    wall_time: float

    @property
    def ok(self) -> bool:
        return self.report is not None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "params": dict(self.spec.params),
            "ok": self.ok,
            "error": self.error,
            "report": None if self.report is None else self.report.to_dict(detail=False),
            "wall_time": self.wall_time,
        }


@dataclass(frozen=True)
class TuneTrace:
    grid: ParamGrid
    rows: tuple[TuneRow, ...]
    best: TuneRow

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "best": {"index": self.best.index, "filter": self.best.spec.to_dict(), "M": self.best.report.M},
            "rows": [row.to_dict() for row in self.rows],
        }

    def to_csv(self) -> str:
        names = [name for name, _ in self.grid.axes]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", *names, "ok", "h_o", "h_g_bar", "delta_h", "r", "M", "n", "error"])
        for row in self.rows:
            rep = row.report
            nums = ["", "", "", "", "", ""] if rep is None else [
                f"{rep.h_o:.6g}", f"{rep.h_g_bar:.6g}", f"{rep.delta_h:.6g}", f"{rep.r:.6g}", f"{rep.M:.6g}", str(rep.n)
            ]
            w.writerow([row.index, *(row.spec.params[n] for n in names), int(row.ok), *nums, row.error or ""])
        return buf.getvalue()


def evaluate_point(z, spec: FilterSpec, looks: float, cfg: EvalConfig, index: int = 0) -> TuneRow:
    t0 = time.perf_counter()
    try:
        rep = evaluate_m(z, apply_filter(spec, z), looks, cfg)
        err = None
    except SarRatioError as exc:
        rep, err = None, f"{type(exc).__name__}: {exc}"
    return TuneRow(index, spec, rep, err, time.perf_counter() - t0)


def grid_search(
    z, grid: ParamGrid, looks: float, cfg: EvalConfig | None = None, seed: int | None = None, threads: int = 1
) -> TuneTrace:
    """Evaluate M at every grid point with the same configuration and seed.

    Failing points are kept in the trace and skipped by the argmin; ties go
    to the earliest point in grid order.
    """
    cfg = cfg or EvalConfig()
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    # points run concurrently; each evaluation stays single-threaded
    cfg = replace(cfg, threads=None)
    specs = grid.specs()

    def job(item):
        i, spec = item
        return evaluate_point(z, spec, looks, cfg, i)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = tuple(pool.map(job, enumerate(specs)))
    else:
        rows = tuple(job(item) for item in enumerate(specs))

    ok = [row for row in rows if row.ok]
    if not ok:
        raise SarRatioError(f"all {len(rows)} grid points failed; first error: {rows[0].error}")
    best = min(ok, key=lambda row: (row.report.M, row.index))
    return TuneTrace(grid=grid, rows=rows, best=best)
