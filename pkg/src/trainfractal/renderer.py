"""Field rendering: one full training run per pixel, embarrassingly parallel,
bitwise deterministic regardless of worker count or tile splits.

Determinism comes from two rules: every pixel's arithmetic goes through the
same per-pixel kernel on arrays whose shapes never depend on chunking, and
results are merged by pixel index, never by completion order.  Axis values
are precomputed once in the parent process and shipped to workers verbatim.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from multiprocessing import get_context

import numpy as np

from .conditions import AxisSpec, ConditionConfig, apply_hypers, pixel_to_hyper
from .model import Problem, build_problem, with_init_mean
from .trainer import RunOutcome, RunClass, batch_schedule, train_run

ZOOM_FRAME_HARD_CAP = 60
DEPTH_GUARD_ULPS = 64


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else TRAINFRACTAL_WORKERS, else all cores."""
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("TRAINFRACTAL_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Viewport:
    """Axis window of a render; targets and scales always come from the
    condition, only the ranges here matter."""

    x_axis: AxisSpec
    y_axis: AxisSpec

    @classmethod
    def of_condition(cls, condition: ConditionConfig) -> "Viewport":
        return cls(condition.x_axis, condition.y_axis)

    @classmethod
    def from_ranges(cls, condition: ConditionConfig, x_lo: float, x_hi: float,
                    y_lo: float, y_hi: float) -> "Viewport":
        return cls(
            replace(condition.x_axis, lo=x_lo, hi=x_hi),
            replace(condition.y_axis, lo=y_lo, hi=y_hi),
        )


@dataclass(frozen=True)
class ZoomSpec:
    center_x: float
    center_y: float
    initial_halfwidth_x: float
    initial_halfwidth_y: float
    max_frames: int = 50
    frame_extent: int = 1024

    def __post_init__(self):
        if self.initial_halfwidth_x <= 0 or self.initial_halfwidth_y <= 0:
            raise ValueError("halfwidths must be positive")
        if self.max_frames < 1:
            raise ValueError("max_frames must be at least 1")


@dataclass(eq=False)
class Field:
    """A rendered grid of run outcomes, row-major, row j at
    y = pixel_to_hyper(y_axis, j, height)."""

    width: int
    height: int
    condition: ConditionConfig
    viewport: Viewport
    base_seed: int
    steps: int
    run_class: np.ndarray   # (h*w,) uint8, RunClass values
    steps_run: np.ndarray   # (h*w,) uint32
    final_loss: np.ndarray  # (h*w,) float64
    accumulator: np.ndarray  # (h*w,) float64

    def outcome(self, x: int, y: int) -> RunOutcome:
        k = y * self.width + x
        return RunOutcome(
            run_class=RunClass(int(self.run_class[k])),
            steps_run=int(self.steps_run[k]),
            accumulator=float(self.accumulator[k]),
            final_loss=float(self.final_loss[k]),
        )

    def class_grid(self) -> np.ndarray:
        return self.run_class.reshape(self.height, self.width)


@dataclass(frozen=True)
class _RenderContext:
    condition: ConditionConfig
    problem: Problem
    xs: np.ndarray
    ys: np.ndarray
    width: int
    steps: int
    schedule: list | None


def _render_rows(ctx: _RenderContext, row0: int, row1: int):
    """Train every pixel in rows [row0, row1); returns that slab's arrays."""
    count = (row1 - row0) * ctx.width
    run_class = np.empty(count, dtype=np.uint8)
    steps_run = np.empty(count, dtype=np.uint32)
    final_loss = np.empty(count, dtype=np.float64)
    accumulator = np.empty(count, dtype=np.float64)
    base_mean = ctx.problem.config.init_mean
    k = 0
    for j in range(row0, row1):
        y_val = ctx.ys[j]
        for i in range(ctx.width):
            model_cfg, opts = apply_hypers(ctx.condition, ctx.xs[i], y_val)
            opts = replace(opts, steps=ctx.steps)
            if model_cfg.init_mean != base_mean:
                problem = with_init_mean(ctx.problem, model_cfg.init_mean)
            else:
                problem = ctx.problem
            out = train_run(problem, opts, ctx.schedule)
            run_class[k] = int(out.run_class)
            steps_run[k] = out.steps_run
            final_loss[k] = out.final_loss
            accumulator[k] = out.accumulator
            k += 1
    return row0, row1, run_class, steps_run, final_loss, accumulator


def render_field(
    condition: ConditionConfig,
    viewport: Viewport | None = None,
    width: int = 256,
    height: int = 256,
    base_seed: int = 0,
    steps: int | None = None,
    workers: int | None = None,
    progress=None,
) -> Field:
    """Render the field: a full training run per pixel.

    The problem instance (weights, data, labels) is built once from the seed
    and shared by every pixel; when an axis targets the initialization mean,
    the per-pixel weights are re-derived from the same standard-normal draws
    with the shift applied, so data and labels never change.  Output is
    independent of execution order and worker count.
    """
    if width < 1 or height < 1:
        raise ValueError("field extents must be at least 1 pixel")
    if viewport is None:
        viewport = Viewport.of_condition(condition)
    x_axis = replace(condition.x_axis, lo=viewport.x_axis.lo, hi=viewport.x_axis.hi)
    y_axis = replace(condition.y_axis, lo=viewport.y_axis.lo, hi=viewport.y_axis.hi)
    viewport = Viewport(x_axis, y_axis)
    if steps is None:
        steps = condition.train_defaults.steps
    workers = resolve_workers(workers)

    xs = np.array([pixel_to_hyper(x_axis, i, width) for i in range(width)])
    ys = np.array([pixel_to_hyper(y_axis, j, height) for j in range(height)])
    problem = build_problem(condition.model, base_seed)
    batch = condition.train_defaults.batch_size
    schedule = None
    if batch > 0:
        schedule = batch_schedule(base_seed, condition.model.dataset_size,
                                  batch, steps)
    ctx = _RenderContext(condition=condition, problem=problem, xs=xs, ys=ys,
                         width=width, steps=steps, schedule=schedule)

    field = Field(
        width=width, height=height, condition=condition, viewport=viewport,
        base_seed=base_seed, steps=steps,
        run_class=np.empty(height * width, dtype=np.uint8),
        steps_run=np.empty(height * width, dtype=np.uint32),
        final_loss=np.empty(height * width, dtype=np.float64),
        accumulator=np.empty(height * width, dtype=np.float64),
    )
    total = width * height
    done = 0

    def merge(result):
        nonlocal done
        row0, row1, rc, sr, fl, ac = result
        lo, hi = row0 * width, row1 * width
        field.run_class[lo:hi] = rc
        field.steps_run[lo:hi] = sr
        field.final_loss[lo:hi] = fl
        field.accumulator[lo:hi] = ac
        done += hi - lo
        if progress is not None:
            progress(done, total)

    if workers == 1 or height == 1:
        chunk = max(1, height // 16)
        for row0 in range(0, height, chunk):
            merge(_render_rows(ctx, row0, min(row0 + chunk, height)))
        return field

    chunk = max(1, math.ceil(height / (workers * 4)))
    spans = [(r, min(r + chunk, height)) for r in range(0, height, chunk)]
    with ProcessPoolExecutor(max_workers=min(workers, len(spans)),
                             mp_context=get_context("spawn")) as pool:
        futures = [pool.submit(_render_rows, ctx, r0, r1) for r0, r1 in spans]
        for fut in as_completed(futures):
            merge(fut.result())
    return field


def depth_guard(viewport: Viewport, width: int, height: int) -> bool:
    """True when either axis's per-pixel step is within 64 ulps of the axis
    coordinates themselves, i.e. further zooming shows float64 quantization
    rather than structure."""
    for axis, extent in ((viewport.x_axis, width), (viewport.y_axis, height)):
        step = (axis.hi - axis.lo) / extent
        if step < DEPTH_GUARD_ULPS * math.ulp(max(abs(axis.lo), abs(axis.hi))):
            return True
    return False


def zoom_viewports(condition: ConditionConfig, spec: ZoomSpec) -> list[Viewport]:
    """Viewport sequence of a zoom: frame k covers center +- halfwidth / 2^k,
    stopping at max_frames, the depth guard, or the hard frame cap."""
    frames = []
    limit = min(spec.max_frames, ZOOM_FRAME_HARD_CAP)
    for k in range(limit):
        hw_x = spec.initial_halfwidth_x / 2.0**k
        hw_y = spec.initial_halfwidth_y / 2.0**k
        x_lo, x_hi = spec.center_x - hw_x, spec.center_x + hw_x
        y_lo, y_hi = spec.center_y - hw_y, spec.center_y + hw_y
        if not (x_lo < x_hi and y_lo < y_hi):
            break
        vp = Viewport.from_ranges(condition, x_lo, x_hi, y_lo, y_hi)
        if depth_guard(vp, spec.frame_extent, spec.frame_extent):
            break
        frames.append(vp)
    return frames


def render_zoom_sequence(
    condition: ConditionConfig,
    spec: ZoomSpec,
    base_seed: int = 0,
    steps: int | None = None,
    workers: int | None = None,
    progress=None,
):
    """Generator yielding one Field per zoom frame as it is produced."""
    for vp in zoom_viewports(condition, spec):
        yield render_field(condition, vp, spec.frame_extent, spec.frame_extent,
                           base_seed, steps, workers, progress)
