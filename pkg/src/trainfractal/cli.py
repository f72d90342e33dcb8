"""Command-line driver: render fields, zoom sequences, dimension estimates,
the closed-form training oracle check, and the HTTP service.

Every command is deterministic given its flags; the final stdout line of
each command is a frozen machine-readable contract.  Exit codes: 0 success,
1 runtime failure, 2 flag errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fracdim
from .colorize import colorize
from .conditions import CONDITION_IDS, TANH_FULLBATCH, preset
from .formats import (
    FormatError,
    encode_request,
    png_bytes,
    read_field,
    request_for_field,
    write_boxcount_csv,
    write_field,
)
from .renderer import (
    Viewport,
    ZoomSpec,
    render_field,
    render_zoom_sequence,
    resolve_workers,
)
from .trainer import RunClass, TrainOptions, train_run, readout_critical_lr
from .model import build_problem

ORACLE_AGREEMENT_FLOOR = 0.99
ORACLE_BAND = 0.01
ORACLE_SWEEP_DECADES = 2.0  # sweep spans critical/10 .. critical*10


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"size must look like 512x512, got {text!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("size must be at least 1x1")
    return w, h


def _parse_floats(text: str, count: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != count:
        raise argparse.ArgumentTypeError(
            f"{what} needs {count} comma-separated values, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} values must be numbers")


def _parse_window(text: str) -> tuple[float, float, float, float]:
    xlo, xhi, ylo, yhi = _parse_floats(text, 4, "window")
    if not (xlo < xhi and ylo < yhi):
        raise argparse.ArgumentTypeError(
            "window must satisfy xlo < xhi and ylo < yhi")
    return xlo, xhi, ylo, yhi


def _parse_seed(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return seed


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) == 1:
        parts = [parts[0], parts[0]]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"{what} needs one or two comma-separated values")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} values must be numbers")


def _progress_printer(label: str):
    if not sys.stderr.isatty():
        return None
    state = {"last": -1}

    def cb(done, total):
        pct = 100 * done // total
        if pct // 10 > state["last"]:
            state["last"] = pct // 10
            print(f"{label}: {done}/{total} pixels ({pct}%)", file=sys.stderr)
    return cb


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trainfractal",
        description="Fractal renderer for the trainable/untrainable boundary "
                    "of neural-network hyperparameters.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one hyperparameter field")
    p.add_argument("--condition", choices=CONDITION_IDS, default=TANH_FULLBATCH)
    p.add_argument("--seed", type=_parse_seed, default=0)
    p.add_argument("--steps", type=int, default=None,
                   help="training steps per pixel (default: preset, 500)")
    p.add_argument("--size", type=_parse_size, default=(1024, 1024),
                   metavar="WxH")
    p.add_argument("--window", type=_parse_window, default=None,
                   metavar="XLO,XHI,YLO,YHI",
                   help="axis window (default: the condition's window)")
    p.add_argument("--out", default="render", metavar="PREFIX")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--report", action="store_true",
                   help="also write PREFIX.boxcount.csv and a log-log figure")

    p = sub.add_parser("zoom", help="render a x2-per-frame zoom sequence")
    p.add_argument("--condition", choices=CONDITION_IDS, default=TANH_FULLBATCH)
    p.add_argument("--seed", type=_parse_seed, default=0)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--center", required=True, metavar="CX,CY",
                   type=lambda t: _parse_pair(t, "center"))
    p.add_argument("--halfwidth", required=True, metavar="HX,HY",
                   type=lambda t: _parse_pair(t, "halfwidth"))
    p.add_argument("--frames", type=int, default=50)
    p.add_argument("--size", type=int, default=1024, metavar="EXTENT",
                   help="square frame extent in pixels (paper scale: 4096)")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--report", action="store_true",
                   help="also write per-frame dimension CSV and figure")

    p = sub.add_parser("fracdim", help="box-count dimension of a stored field")
    p.add_argument("--in", dest="path", required=True, metavar="FIELD.nnfr")
    p.add_argument("--plot", default=None, metavar="FIGURE.png",
                   help="write the log-log fit figure")

    p = sub.add_parser("oracle-check",
                       help="validate classification against the readout-only "
                            "closed-form stability criterion")
    p.add_argument("--seed", type=_parse_seed, default=0)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--steps", type=int, default=500)

    p = sub.add_parser("serve", help="run the HTTP render service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--out", default=None, metavar="DIR")
    p.add_argument("--workers", type=int, default=None)
    return parser


def _cmd_render(args) -> int:
    condition = preset(args.condition)
    if args.window is None:
        viewport = Viewport.of_condition(condition)
    else:
        viewport = Viewport.from_ranges(condition, *args.window)
    width, height = args.size
    field = render_field(condition, viewport, width, height, args.seed,
                         args.steps, workers=args.workers,
                         progress=_progress_printer("render"))
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    with open(f"{prefix}.nnfr", "wb") as f:
        write_field(field, f)
    with open(f"{prefix}.png", "wb") as f:
        f.write(png_bytes(colorize(field)))
    with open(f"{prefix}.json", "w") as f:
        f.write(encode_request(request_for_field(field)))
        f.write("\n")
    dimension, r2 = math.nan, math.nan
    try:
        result = fracdim.field_dimension(field)
        dimension, r2 = result.dimension, result.fit_r2
        if args.report:
            with open(f"{prefix}.boxcount.csv", "w") as f:
                write_boxcount_csv(result, f)
            from .report import save_boxcount_figure
            save_boxcount_figure(result, f"{prefix}.boxcount.png")
    except (fracdim.InsufficientScalesError, ValueError):
        pass
    print(f"dimension={_fmt(dimension)} r2={_fmt(r2)}")
    return 0


def _cmd_zoom(args) -> int:
    condition = preset(args.condition)
    spec = ZoomSpec(
        center_x=args.center[0], center_y=args.center[1],
        initial_halfwidth_x=args.halfwidth[0],
        initial_halfwidth_y=args.halfwidth[1],
        max_frames=args.frames, frame_extent=args.size,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_frames = []
    dims = []
    for k, field in enumerate(render_zoom_sequence(
            condition, spec, args.seed, args.steps, workers=args.workers,
            progress=_progress_printer("zoom frame"))):
        png_name = f"frame_{k:03d}.png"
        nnfr_name = f"frame_{k:03d}.nnfr"
        with open(out_dir / nnfr_name, "wb") as f:
            write_field(field, f)
        with open(out_dir / png_name, "wb") as f:
            f.write(png_bytes(colorize(field)))
        dim = math.nan
        try:
            dim = fracdim.field_dimension(field).dimension
            dims.append(dim)
        except (fracdim.InsufficientScalesError, ValueError):
            pass
        vp = field.viewport
        manifest_frames.append({
            "index": k,
            "png": png_name,
            "nnfr": nnfr_name,
            "viewport": {"x": {"lo": vp.x_axis.lo, "hi": vp.x_axis.hi},
                         "y": {"lo": vp.y_axis.lo, "hi": vp.y_axis.hi}},
            "dimension": None if math.isnan(dim) else dim,
        })
    median = fracdim.median_lower(dims) if dims else math.nan
    manifest = {
        "condition": condition.id,
        "seed": args.seed,
        "steps": args.steps if args.steps is not None
                 else condition.train_defaults.steps,
        "frame_extent": args.size,
        "center": {"x": spec.center_x, "y": spec.center_y},
        "initial_halfwidth": {"x": spec.initial_halfwidth_x,
                              "y": spec.initial_halfwidth_y},
        "median_dimension": None if math.isnan(median) else median,
        "frames": manifest_frames,
    }
    with open(out_dir / "sequence.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    if args.report and dims:
        from .report import save_zoom_dimension_figure
        with open(out_dir / "dimensions.csv", "w") as f:
            f.write("frame,dimension\n")
            for fr in manifest_frames:
                if fr["dimension"] is not None:
                    f.write(f"{fr['index']},{fr['dimension']:.17g}\n")
        save_zoom_dimension_figure(dims, median, out_dir / "dimensions.png")
    print(f"median_dimension={_fmt(median)} frames={len(manifest_frames)}")
    return 0


def _cmd_fracdim(args) -> int:
    with open(args.path, "rb") as f:
        field = read_field(f)
    mask = fracdim.boundary_mask(field)
    entries = fracdim.boxcount(mask)
    dimension, r2 = math.nan, math.nan
    try:
        dimension, r2 = fracdim.fit_dimension(entries)
    except fracdim.InsufficientScalesError:
        pass
    result = fracdim.BoxCountResult(
        entries=entries, dimension=dimension, fit_r2=r2,
        usable_sizes=len(fracdim.usable_entries(entries)))
    write_boxcount_csv(result, sys.stdout)
    if args.plot:
        from .report import save_boxcount_figure
        save_boxcount_figure(result, args.plot)
    print(f"dimension={_fmt(dimension)}")
    return 0


def _cmd_oracle_check(args) -> int:
    condition = preset(TANH_FULLBATCH)
    problem = build_problem(condition.model, args.seed)
    critical = readout_critical_lr(problem)
    half = ORACLE_SWEEP_DECADES / 2.0
    exponents = np.linspace(math.log10(critical) - half,
                            math.log10(critical) + half, args.samples)
    considered = 0
    agreed = 0
    for e in exponents:
        eta1 = 10.0 ** float(e)
        if abs(eta1 - critical) <= ORACLE_BAND * critical:
            continue
        opts = TrainOptions(steps=args.steps, eta0=0.0, eta1=eta1)
        outcome = train_run(problem, opts)
        predicted = (RunClass.DIVERGED if eta1 > critical
                     else RunClass.CONVERGED)
        considered += 1
        if outcome.run_class is predicted:
            agreed += 1
    agreement = agreed / considered if considered else 0.0
    print(f"critical_eta1={_fmt(critical)}")
    print(f"samples={considered} matched={agreed}")
    print(f"agreement={agreement:.6f}")
    return 0 if agreement >= ORACLE_AGREEMENT_FLOOR else 1


def _cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    app = create_app(output_dir=args.out,
                     workers=resolve_workers(args.workers))
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    except OSError as exc:
        print(f"failed to bind {args.host}:{args.port}: {exc}",
              file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "render": _cmd_render,
        "zoom": _cmd_zoom,
        "fracdim": _cmd_fracdim,
        "oracle-check": _cmd_oracle_check,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
