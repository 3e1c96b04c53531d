"""Command line interface: ``sarratio simulate|filter|evaluate|metrics|tune``.

Every command writes a ``manifest.json`` holding the exact argument vector,
so ``sarratio <manifest argv>`` reproduces the outputs bit for bit.

Exit codes: 0 success, 2 usage, 3 data/validation error, 4 no textureless area.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

from . import __version__
from .errors import NoTexturelessAreaError, SarRatioError
from .filters import FAMILIES, FilterSpec, apply_filter
from .metrics import beta_edges, mssim, psnr, roi_table, roi_table_csv
from .quality import EvalConfig, evaluate_m, evaluate_m_additive, ratio_image, reports_to_csv, residual_image
from .raster import Roi, export_png8, load_raster, save_raster
from .simulate import PHANTOM_KINDS, Scene, apply_additive, blocks_points_rois, make_phantom, PhantomSpec, simulate_scene
from .tune import ParamGrid, grid_search

log = logging.getLogger("sarratio")

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NO_AREA = 4


class UsageError(Exception):
    pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n")


def _write_manifest(path: Path, command: str, argv: list[str], args, inputs, outputs, seeds, t0) -> None:
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    _write_json(path, {
        "command": command,
        "argv": argv,
        "flags": json.loads(json.dumps(flags, default=str)),
        "seeds": seeds,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "version": __version__,
        "wall_time": time.perf_counter() - t0,
    })


def _out_dir(p: str) -> Path:
    d = Path(p)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _kv(pairs: list[str] | None) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise UsageError(f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = _parse_value(v)
    return out


def _offsets(text: str) -> tuple[tuple[int, int], ...]:
    try:
        pairs = tuple(tuple(int(v) for v in item.split(",")) for item in text.split(";") if item)
    except ValueError:
        raise UsageError(f"offsets must look like '0,1;1,0', got {text!r}") from None
    if not pairs or any(len(p) != 2 for p in pairs):
        raise UsageError(f"offsets must look like '0,1;1,0', got {text!r}")
    return pairs


# ---------------------------------------------------------------- simulate

def cmd_simulate(args, argv) -> int:
    t0 = time.perf_counter()
    if args.scene:
        scene = Scene.from_dict(json.loads(Path(args.scene).read_text()))
    else:
        kind = "blocks_points" if args.phantom == "blocks" else args.phantom
        scene = Scene(kind=kind, side=args.side, params=_kv(args.param), looks=args.looks, seed=args.seed)
    out = _out_dir(args.output)
    if args.sigma is not None:
        truth = make_phantom(PhantomSpec(scene.kind, scene.side, scene.params), scene.seed)
        noisy = apply_additive(truth, args.sigma, scene.seed)
    else:
        truth, noisy = simulate_scene(scene)
    outputs = [out / "truth.ras1", out / "noisy.ras1"]
    save_raster(truth, outputs[0])
    save_raster(noisy, outputs[1])
    _write_json(out / "scene.json", {**scene.to_dict(), "sigma": args.sigma})
    outputs.append(out / "scene.json")
    if args.png:
        for name, img in (("truth", truth), ("noisy", noisy)):
            export_png8(img, out / f"{name}.png")
            outputs.append(out / f"{name}.png")
    _write_manifest(out / "manifest.json", "simulate", argv, args, [], outputs, {"scene": scene.seed}, t0)
    log.info("wrote %s", ", ".join(str(p) for p in outputs))
    return 0


# ------------------------------------------------------------------ filter

def _filter_spec(args) -> FilterSpec:
    if args.spec:
        return FilterSpec.from_dict(json.loads(Path(args.spec).read_text()))
    if not args.family:
        raise UsageError("filter needs --family or --spec")
    params = {}
    for name in ("w", "looks", "k", "T", "dt", "path"):
        v = getattr(args, name)
        if v is not None:
            params[name] = v
    return FilterSpec(args.family, params)


def cmd_filter(args, argv) -> int:
    t0 = time.perf_counter()
    spec = _filter_spec(args)
    z = load_raster(args.input)
    out = apply_filter(spec, z)
    dest = Path(args.output)
    dest.parent.mkdir(parents=True, exist_ok=True)
    save_raster(out, dest)
    outputs = [dest]
    spec_path = dest.with_suffix(".filter.json")
    _write_json(spec_path, spec.to_dict())
    outputs.append(spec_path)
    if args.png:
        export_png8(out, dest.with_suffix(".png"))
        outputs.append(dest.with_suffix(".png"))
    inputs = [Path(args.input)] + ([Path(spec.params["path"])] if spec.family == "external" else [])
    _write_manifest(dest.with_suffix(".manifest.json"), "filter", argv, args, inputs, outputs, {}, t0)
    return 0


# ---------------------------------------------------------------- evaluate

def _eval_config(args) -> EvalConfig:
    return EvalConfig(
        w=args.w, tol=args.tol, mode=args.mode, tol_detect=args.tol_detect, p=args.p, win=args.win,
        offsets=_offsets(args.offsets), dh_scale=args.dh_scale, seed=args.seed, threads=args.threads,
    )


def cmd_evaluate(args, argv) -> int:
    t0 = time.perf_counter()
    if args.looks is None and args.sigma is None:
        raise UsageError("evaluate needs --looks (multiplicative model) or --sigma (additive model)")
    labels = args.label or []
    if labels and len(labels) != len(args.filtered):
        raise UsageError("give one --label per --filtered input")
    labels = labels or [Path(p).stem for p in args.filtered]
    cfg = _eval_config(args)
    z = load_raster(args.noisy)
    out = _out_dir(args.output)
    outputs, reports = [], []
    for label, path in zip(labels, args.filtered):
        xhat = load_raster(path)
        if args.sigma is not None:
            rep = evaluate_m_additive(z, xhat, args.sigma, cfg)
            image = residual_image(z, xhat)
        else:
            rep = evaluate_m(z, xhat, args.looks, cfg)
            image = ratio_image(z, xhat, cfg.eps)
        reports.append((label, rep))
        p = out / f"report_{label}.json"
        _write_json(p, {"label": label, "noisy": args.noisy, "filtered": path, **rep.to_dict()})
        outputs.append(p)
        if args.png:
            from .plotting import plot_ratio_overlay

            export_png8(image, out / f"ratio_{label}.png")
            plot_ratio_overlay(image, rep.selection, out / f"selection_{label}.png", title=label)
            outputs += [out / f"ratio_{label}.png", out / f"selection_{label}.png"]
        log.info("%s: M=%.6g (r=%.6g, delta_h=%.6g, n=%d)", label, rep.M, rep.r, rep.delta_h, rep.n)
    (out / "report.csv").write_text(reports_to_csv(reports))
    outputs.append(out / "report.csv")
    if args.png:
        from .plotting import plot_components

        plot_components([lbl for lbl, _ in reports], [rep for _, rep in reports], out / "components.png")
        outputs.append(out / "components.png")
    sys.stdout.write(reports_to_csv(reports))
    inputs = [Path(args.noisy)] + [Path(p) for p in args.filtered]
    _write_manifest(out / "manifest.json", "evaluate", argv, args, inputs, outputs, {"evaluate": cfg.seed}, t0)
    return 0


# ----------------------------------------------------------------- metrics

def _rois(args, shape) -> dict[str, Roi]:
    if args.rois:
        d = json.loads(Path(args.rois).read_text())
        return {k: Roi(**v) for k, v in d.items()}
    if args.blocks_rois:
        if shape[0] != shape[1]:
            raise SarRatioError("--blocks-rois needs a square raster")
        return blocks_points_rois(shape[0])
    return {}


def cmd_metrics(args, argv) -> int:
    t0 = time.perf_counter()
    truth = load_raster(args.truth)
    inputs = [Path(args.truth)]
    out = _out_dir(args.output)
    result = {}
    images = {}
    for role in ("noisy", "filtered"):
        path = getattr(args, role)
        if path:
            images[role] = load_raster(path)
            inputs.append(Path(path))
    if not images:
        raise UsageError("metrics needs --noisy and/or --filtered")
    for role, img in images.items():
        beta = None
        try:
            beta = beta_edges(truth, img)
        except SarRatioError as exc:
            log.warning("beta undefined for %s: %s", role, exc)
        p = psnr(truth, img, args.peak)
        result[role] = {"psnr": None if math.isinf(p) else p, "psnr_identical": math.isinf(p),
                        "mssim": mssim(truth, img), "beta": beta}
    outputs = [out / "metrics.json", out / "metrics.csv"]
    _write_json(outputs[0], result)
    lines = ["image,psnr,mssim,beta"]
    for role, m in result.items():
        ps = "inf" if m["psnr_identical"] else f"{m['psnr']:.6g}"
        beta = "" if m["beta"] is None else f"{m['beta']:.6g}"
        lines.append(f"{role},{ps},{m['mssim']:.6g},{beta}")
    outputs[1].write_text("\n".join(lines) + "\n")
    rois = _rois(args, truth.shape)
    if rois:
        rows = roi_table(truth, images.get("noisy"), images.get("filtered"), rois)
        (out / "roi_table.csv").write_text(roi_table_csv(rows))
        _write_json(out / "roi_table.json", [r.to_dict() for r in rows])
        outputs += [out / "roi_table.csv", out / "roi_table.json"]
    sys.stdout.write(outputs[1].read_text())
    _write_manifest(out / "manifest.json", "metrics", argv, args, inputs, outputs, {}, t0)
    return 0


# -------------------------------------------------------------------- tune

def cmd_tune(args, argv) -> int:
    t0 = time.perf_counter()
    if args.looks is None:
        raise UsageError("tune needs --looks")
    grid = ParamGrid.from_json(Path(args.grid).read_text())
    z = load_raster(args.input)
    cfg = _eval_config(args)
    trace = grid_search(z, grid, args.looks, cfg, threads=args.threads or 1)
    out = _out_dir(args.output)
    outputs = [out / "trace.csv", out / "trace.json", out / "best.json"]
    outputs[0].write_text(trace.to_csv())
    d = trace.to_dict()
    for row in d["rows"]:
        row.pop("wall_time")
    _write_json(outputs[1], d)
    _write_json(outputs[2], trace.best.spec.to_dict())
    if args.png:
        from .plotting import plot_tune_trace

        plot_tune_trace(trace, out / "trace.png")
        outputs.append(out / "trace.png")
    sys.stdout.write(json.dumps(trace.best.spec.to_dict()) + "\n")
    _write_manifest(out / "manifest.json", "tune", argv, args, [Path(args.input), Path(args.grid)], outputs,
                    {"evaluate": cfg.seed}, t0)
    return 0


# ------------------------------------------------------------------ parser

def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--looks", type=float, help="nominal number of looks of the noisy image")
    p.add_argument("--mode", choices=("noisy", "paper"), default="noisy", help="textureless selection rule")
    p.add_argument("--w", type=int, default=25, help="selection window side (default 25)")
    p.add_argument("--tol", type=float, default=0.03, help="selection tolerance for mode 'paper' (default 0.03)")
    p.add_argument("--tol-detect", type=float, default=0.25, help="ENL tolerance for mode 'noisy' (default 0.25)")
    p.add_argument("--p", type=int, default=100, help="number of shuffles (default 100)")
    p.add_argument("--win", type=int, default=11, help="co-occurrence window side (default 11)")
    p.add_argument("--offsets", default="0,1;1,0", help="co-occurrence offsets 'dy,dx;dy,dx'")
    p.add_argument("--dh-scale", type=float, default=1.0, help="extra factor on delta_h (default 1)")
    p.add_argument("--seed", type=int, default=0, help="shuffle seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    p.add_argument("--png", action="store_true", help="also write PNG views and figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sarratio", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a phantom and its speckled observation")
    p.add_argument("--phantom", choices=("blocks", *PHANTOM_KINDS), default="blocks")
    p.add_argument("--side", type=int, default=500)
    p.add_argument("--looks", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="phantom parameter (JSON value)")
    p.add_argument("--scene", help="JSON scene descriptor {kind, side, params, looks, seed}")
    p.add_argument("--sigma", type=float, help="additive Gaussian noise instead of speckle")
    p.add_argument("--png", action="store_true")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("filter", help="apply a despeckling filter")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--spec", help="FilterSpec JSON file")
    p.add_argument("--w", type=int)
    p.add_argument("--looks", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--T", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--path", help="raster produced by an external filter")
    p.add_argument("--png", action="store_true")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("evaluate", help="score filtered images with M")
    p.add_argument("-z", "--noisy", required=True)
    p.add_argument("-x", "--filtered", required=True, action="append")
    p.add_argument("--label", action="append")
    p.add_argument("--sigma", type=float, help="additive model with this noise std")
    p.add_argument("-o", "--output", required=True)
    _add_eval_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("metrics", help="reference metrics against ground truth")
    p.add_argument("-t", "--truth", required=True)
    p.add_argument("--noisy")
    p.add_argument("--filtered")
    p.add_argument("--peak", type=float, help="PSNR peak (default max of truth)")
    p.add_argument("--rois", help="JSON {label: {x0, y0, w, h}}")
    p.add_argument("--blocks-rois", action="store_true", help="use the blocks phantom ROIs")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("tune", help="grid search minimising M")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--grid", required=True, help='JSON {"family": ..., "axes": [[name, [values]], ...]}')
    p.add_argument("-o", "--output", required=True)
    _add_eval_flags(p)
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args, argv)
    except UsageError as exc:
        sys.stderr.write(f"sarratio {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except NoTexturelessAreaError as exc:
        sys.stderr.write(f"sarratio {args.command}: {exc}\n")
        return EXIT_NO_AREA
    except (SarRatioError, OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        sys.stderr.write(f"sarratio {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
