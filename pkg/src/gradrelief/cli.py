"""Command-line front end.

Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio
from .fields import FieldError, full_mask, gradient, thread_count
from .gradmap import (
    DEFAULT_ALPHA,
    DEFAULT_ALPHA1,
    DEFAULT_ALPHA2,
    DEFAULT_ETA,
    PHI_MODES,
    ParameterError,
    ReliefParams,
    phi1,
)
from .losses import evaluate
from .optimize import (
    OptimizeConfig,
    OptimizerDivergence,
    STYLE_CONFIG,
    StyleReport,
    gauge_background,
    optimize_height,
    style_compare,
    style_metrics,
)
from .pipeline import detail_solve, structure_solve, two_scale_layers
from .poisson import SolverError, reconstruct_from_gradients

LOSS_FLAGS = {"l1": "l1s", "l2": "l2s", "cosine": "cosine"}


class UsageError(Exception):
    pass


def _io_fail(exc: Exception) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return 3


def _add_io(p: argparse.ArgumentParser, out_help: str = "output height field (.pfm or .png)") -> None:
    p.add_argument("--input", required=True, help="source height field (.pfm, or .png with range sidecar)")
    p.add_argument("--mask", default="none", help="foreground mask image, or 'none' for all-foreground")
    p.add_argument("--out", required=True, help=out_help)


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--alpha1", type=float, default=DEFAULT_ALPHA1)
    p.add_argument("--alpha2", type=float, default=DEFAULT_ALPHA2)
    p.add_argument("--mode", choices=PHI_MODES, default="normalized")
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)


def _add_optimizer(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iters", type=int, default=OptimizeConfig.max_iter)
    p.add_argument("--step", type=float, default=OptimizeConfig.step)
    p.add_argument("--momentum", type=float, default=OptimizeConfig.momentum)
    p.add_argument("--rel-tol", type=float, default=OptimizeConfig.rel_tol)
    p.add_argument("--init", choices=("zeros", "source"), default="zeros")
    p.add_argument("--report", help="write the style metrics as JSON")
    p.add_argument("--csv", help="write the style metrics as CSV")
    p.add_argument("--figure", help="write a comparison figure (PNG/PDF/SVG)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradrelief", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("structure", "structure layer (remapped gradients, Poisson, normalized)"),
                        ("detail", "band-pass detail layer"),
                        ("pipeline", "two-scale relief: structure at <=1024 px, detail at full size")):
        p = sub.add_parser(name, help=help_)
        _add_io(p)
        _add_params(p)
        if name == "pipeline":
            p.add_argument("--figure", help="write a source/structure/detail/relief figure")

    p = sub.add_parser("optimize", help="minimize one loss directly over the height field")
    _add_io(p)
    _add_params(p)
    p.add_argument("--loss", choices=tuple(LOSS_FLAGS), default="l2")
    _add_optimizer(p)

    p = sub.add_parser("style", help="compare the three losses on one source")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True, help="foreground mask image")
    p.add_argument("--out", help="directory for the per-loss height fields")
    _add_params(p)
    _add_optimizer(p)
    p.set_defaults(init=STYLE_CONFIG.init, iters=STYLE_CONFIG.max_iter)

    p = sub.add_parser("preview", help="Lambertian shading of a height field")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output 8-bit PNG")
    p.add_argument("--light", default="0,0,1", help="light direction 'x,y,z'")
    p.add_argument("--eta", type=float, default=1.0)

    p = sub.add_parser("mesh", help="export a closed printable solid")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width-mm", type=float, default=100.0)
    p.add_argument("--relief-depth-mm", type=float, default=5.0)
    p.add_argument("--base-mm", type=float, default=2.0)
    p.add_argument("--format", choices=fileio.MESH_FORMATS, default="stl_binary")
    return parser


def _params(args) -> ReliefParams:
    try:
        return ReliefParams(args.alpha, args.alpha1, args.alpha2, args.eta, args.mode)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None


def _load(args) -> tuple[np.ndarray, np.ndarray, bool]:
    """Read input and mask; the flag says whether a real mask was given."""
    h = fileio.read_height(args.input)
    if args.mask is None or args.mask.lower() == "none":
        return h, full_mask(h.shape), False
    m = fileio.read_mask(args.mask)
    if m.shape != h.shape:
        raise fileio.FormatError(f"mask {m.shape[1]}x{m.shape[0]} does not match input {h.shape[1]}x{h.shape[0]}")
    return h, m, True


def _summary(h: np.ndarray, t0: float, residual: float | None = None, extra: str = "") -> None:
    H, W = h.shape
    res = "" if residual is None else f"  residual={residual:.3e}"
    print(f"{W}x{H}  wall={time.perf_counter() - t0:.3f}s{res}{extra}")


def _cmd_layer(args) -> int:
    params = _params(args)
    t0 = time.perf_counter()
    h, mask, _ = _load(args)
    if args.command == "structure":
        out, rep = structure_solve(h, mask, params)
        residual = rep.residual
    elif args.command == "detail":
        out, rep = detail_solve(h, params)
        residual = rep.residual
    else:
        layers = two_scale_layers(h, mask, params)
        out = layers.relief
        residual = max(r.residual for r in layers.reports)
        if args.figure:
            from .plotting import layers_figure
            layers_figure(h, layers.structure, layers.detail, out, args.figure)
    fileio.write_height(args.out, out)
    _summary(out, t0, residual)
    return 0


def _opt_config(args, kind: str) -> OptimizeConfig:
    try:
        return OptimizeConfig(loss_kind=kind, step=args.step, momentum=args.momentum,
                              max_iter=args.iters, rel_tol=args.rel_tol, init=args.init)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_reports(args, report: StyleReport, heights: dict, mask: np.ndarray) -> None:
    if args.report:
        Path(args.report).write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["loss", "background_mean_abs", "silhouette_sharpness", "iterations", "final_loss"])
            for k in report.background_mean_abs:
                w.writerow([k, repr(report.background_mean_abs[k]), repr(report.silhouette_sharpness[k]),
                            report.iterations.get(k, ""), repr(report.final_loss.get(k, ""))])
    if args.figure:
        from .plotting import style_figure
        style_figure(heights, mask, report, args.figure)


def _cmd_optimize(args) -> int:
    params = _params(args)
    kind = LOSS_FLAGS[args.loss]
    cfg = _opt_config(args, kind)
    t0 = time.perf_counter()
    h, mask, _ = _load(args)
    g = phi1(gradient(h), params.alpha, params.phi_mode)
    out, iters = optimize_height(g, None, cfg, params.eta, source=h)
    final = evaluate(kind, out, g, None, params.eta).value
    ref, _ = reconstruct_from_gradients(g)
    ref_loss = evaluate(kind, ref, g, None, params.eta).value
    fileio.write_height(args.out, out)
    flat, sharp = style_metrics(out, mask)
    report = StyleReport({kind: flat}, {kind: sharp}, {kind: iters}, {kind: final})
    _write_reports(args, report, {kind: gauge_background(out, mask)}, mask)
    _summary(out, t0, extra=f"  loss={final:.9e}  spectral_loss={ref_loss:.9e}  iterations={iters}")
    return 0


def _cmd_style(args) -> int:
    params = _params(args)
    cfg = _opt_config(args, "l2s")
    h, mask, _ = _load(args)
    t0 = time.perf_counter()
    heights: dict = {}
    report = style_compare(h, mask, params, cfg, results=heights)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for kind, hk in heights.items():
            fileio.write_height(out / f"{kind}.pfm", hk)
    _write_reports(args, report, heights, mask)
    print("loss,background_mean_abs,silhouette_sharpness,iterations")
    for k in report.background_mean_abs:
        print(f"{k},{report.background_mean_abs[k]:.6e},{report.silhouette_sharpness[k]:.6f},{report.iterations[k]}")
    _summary(h, t0)
    return 0


def _parse_light(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"--light must be 'x,y,z', got {text!r}") from None
    if len(parts) != 3 or not any(parts):
        raise UsageError(f"--light must be a non-zero 'x,y,z' vector, got {text!r}")
    return parts


def _cmd_preview(args) -> int:
    light = _parse_light(args.light)
    if not args.eta > 0:
        raise UsageError(f"--eta must be positive, got {args.eta}")
    t0 = time.perf_counter()
    h = fileio.read_height(args.input)
    fileio.write_preview(args.out, fileio.render_preview(h, light, args.eta))
    _summary(h, t0)
    return 0


def _cmd_mesh(args) -> int:
    for flag in ("width_mm", "relief_depth_mm", "base_mm"):
        if not getattr(args, flag) > 0:
            raise UsageError(f"--{flag.replace('_', '-')} must be positive")
    t0 = time.perf_counter()
    h = fileio.read_height(args.input)
    nv, nf = fileio.export_mesh(args.out, h, args.width_mm, args.relief_depth_mm, args.base_mm, args.format)
    _summary(h, t0, extra=f"  vertices={nv}  triangles={nf}")
    return 0


COMMANDS = {
    "structure": _cmd_layer,
    "detail": _cmd_layer,
    "pipeline": _cmd_layer,
    "optimize": _cmd_optimize,
    "style": _cmd_style,
    "preview": _cmd_preview,
    "mesh": _cmd_mesh,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad usage
    try:
        thread_count()
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except FieldError as exc:
        if "RELIEF_THREADS" in str(exc):
            parser.error(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (OSError, fileio.FormatError) as exc:
        return _io_fail(exc)
    except (SolverError, OptimizerDivergence, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
