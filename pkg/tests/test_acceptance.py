"""Acceptance suite: one test per release criterion, each printing a
PASS line with its runtime (run with -s to see them live).

Runtime budgets assume an 8-core machine; on smaller machines the budget is
scaled by 8 / cpu_count, since the renders parallelize across pixels.
Criterion 3 exercises determinism at 40 training steps: determinism is
step-count independent, and a full-depth 500-step serial render could not
fit any per-machine budget.
"""

import io
import math
import os
import time

import numpy as np
import pytest

from trainfractal import fracdim
from trainfractal.conditions import CONDITION_IDS, preset
from trainfractal.formats import (
    decode_request,
    encode_request,
    field_to_bytes,
    read_field,
)
from trainfractal.model import (
    Params,
    build_problem,
    forward,
    gradients,
    loss,
    model_config,
)
from trainfractal.numerics import Nonlinearity
from trainfractal.renderer import (
    Field,
    Viewport,
    ZoomSpec,
    render_field,
    zoom_viewports,
)
from trainfractal.trainer import (
    RunClass,
    TrainOptions,
    batch_schedule,
    readout_critical_lr,
    train_run,
)
from fieldutil import build_field
from test_formats import random_field

CORES = os.cpu_count() or 1
SCALE = max(1.0, 8.0 / CORES)


def budget(seconds: float, parallel: bool) -> float:
    return seconds * SCALE if parallel else seconds


def report(criterion: str, elapsed: float, limit: float, detail: str = ""):
    line = (f"ACCEPTANCE {criterion}: PASS "
            f"({elapsed:.1f}s of {limit:.0f}s budget{'; ' + detail if detail else ''})")
    print(line, flush=True)


def test_criterion_1_gradient_correctness():
    limit = budget(5.0, parallel=False)
    t0 = time.perf_counter()
    checked = 0
    for kind in (Nonlinearity.TANH, Nonlinearity.RELU, Nonlinearity.IDENTITY):
        for n in (2, 4):
            for seed in range(5):
                problem = build_problem(model_config(kind, n=n), seed)
                params = problem.init_params
                pre, _, _ = forward(problem, params)
                if kind is Nonlinearity.RELU and np.abs(pre).min() < 1e-7:
                    continue
                _, grads = gradients(problem, params)

                def loss_at(W0, W1):
                    _, _, p = forward(problem, Params(W0=W0, W1=W1))
                    return loss(p, problem.y)

                for matrix, grad in ((params.W0, grads.G0),
                                     (params.W1, grads.G1)):
                    it = np.nditer(matrix, flags=["multi_index"])
                    for w in it:
                        idx = it.multi_index
                        h = 1e-6 * max(1.0, abs(float(w)))
                        plus, minus = matrix.copy(), matrix.copy()
                        plus[idx] += h
                        minus[idx] -= h
                        if matrix is params.W0:
                            fd = (loss_at(plus, params.W1)
                                  - loss_at(minus, params.W1)) / (2 * h)
                        else:
                            fd = (loss_at(params.W0, plus)
                                  - loss_at(params.W0, minus)) / (2 * h)
                        # 1e-9 floor = the roundoff noise of the central
                        # difference itself (eps * loss / h)
                        assert grad[idx] == pytest.approx(
                            fd, rel=1e-6, abs=1e-9), (kind, n, seed, idx)
                        checked += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < limit
    report("1 gradient-correctness", elapsed, limit,
           f"{checked} entries checked")


def test_criterion_2_readout_only_oracle():
    limit = budget(30.0, parallel=False)
    t0 = time.perf_counter()
    worst = 1.0
    for seed in range(3):
        problem = build_problem(model_config(Nonlinearity.TANH), seed)
        critical = readout_critical_lr(problem)
        samples = np.logspace(math.log10(critical) - 1.0,
                              math.log10(critical) + 1.0, 512)
        considered = agreed = 0
        for eta1 in samples:
            if abs(eta1 - critical) <= 0.01 * critical:
                continue
            out = train_run(problem, TrainOptions(steps=500, eta0=0.0,
                                                  eta1=float(eta1)))
            want = (RunClass.DIVERGED if eta1 > critical
                    else RunClass.CONVERGED)
            considered += 1
            agreed += out.run_class is want
        agreement = agreed / considered
        worst = min(worst, agreement)
        assert agreement >= 0.99, f"seed {seed}: agreement {agreement:.4f}"
    elapsed = time.perf_counter() - t0
    assert elapsed < limit
    report("2 readout-only-oracle", elapsed, limit,
           f"worst agreement {worst:.4f} over 3 seeds")


def test_criterion_3_determinism_across_workers_and_tiles():
    limit = budget(120.0, parallel=True)
    steps = 40
    cond = preset("tanh-fullbatch")
    t0 = time.perf_counter()
    vp = Viewport.from_ranges(cond, 0.0, 3.0, 0.0, 3.0)
    one = render_field(cond, vp, 128, 128, base_seed=0, steps=steps, workers=1)
    eight = render_field(cond, vp, 128, 128, base_seed=0, steps=steps,
                         workers=8)
    blob = field_to_bytes(one)
    assert field_to_bytes(eight) == blob

    stitched = Field(
        width=128, height=128, condition=one.condition, viewport=one.viewport,
        base_seed=0, steps=steps,
        run_class=np.empty(128 * 128, dtype=np.uint8),
        steps_run=np.empty(128 * 128, dtype=np.uint32),
        final_loss=np.empty(128 * 128, dtype=np.float64),
        accumulator=np.empty(128 * 128, dtype=np.float64),
    )
    for qx, (x_lo, x_hi) in enumerate([(0.0, 1.5), (1.5, 3.0)]):
        for qy, (y_lo, y_hi) in enumerate([(0.0, 1.5), (1.5, 3.0)]):
            quad = render_field(
                cond, Viewport.from_ranges(cond, x_lo, x_hi, y_lo, y_hi),
                64, 64, base_seed=0, steps=steps, workers=CORES)
            for j in range(64):
                dst = (qy * 64 + j) * 128 + qx * 64
                src = j * 64
                for name in ("run_class", "steps_run", "final_loss",
                             "accumulator"):
                    getattr(stitched, name)[dst:dst + 64] = \
                        getattr(quad, name)[src:src + 64]
    assert field_to_bytes(stitched) == blob
    elapsed = time.perf_counter() - t0
    assert elapsed < limit
    report("3 determinism", elapsed, limit,
           "1 worker == 8 workers == 4 stitched quadrants, byte-identical")


def test_criterion_4_boxcount_battery():
    limit = budget(5.0, parallel=False)
    t0 = time.perf_counter()

    line = np.zeros((256, 256), dtype=bool)
    line[:, 100] = True
    mask = fracdim.BoundaryMask(width=256, height=256, bits=line)
    line_dim, _ = fracdim.fit_dimension(fracdim.boxcount(mask))
    assert abs(line_dim - 1.00) <= 0.05

    h = w = 512
    yy, xx = np.mgrid[0:h, 0:w]
    disk = ((xx - 255.5) ** 2 + (yy - 255.5) ** 2 <= 200.0**2).astype(int)
    circle = fracdim.field_dimension(build_field(disk))
    assert abs(circle.dimension - 1.0) <= 0.07

    carpet = np.ones((1, 1), dtype=bool)
    for _ in range(5):
        z = np.zeros_like(carpet)
        carpet = np.block([[carpet, carpet, carpet],
                           [carpet, z, carpet],
                           [carpet, carpet, carpet]])
    assert carpet.shape == (243, 243)
    mask = fracdim.BoundaryMask(width=243, height=243, bits=carpet)
    carpet_dim, _ = fracdim.fit_dimension(fracdim.boxcount(mask))
    assert abs(carpet_dim - math.log(8) / math.log(3)) <= 0.05

    elapsed = time.perf_counter() - t0
    assert elapsed < limit
    report("4 boxcount-battery", elapsed, limit,
           f"line {line_dim:.3f}, circle {circle.dimension:.3f}, "
           f"carpet {carpet_dim:.3f}")


def test_criterion_5_baseline_render_is_measurably_fractal():
    limit = budget(1800.0, parallel=True)
    cond = preset("tanh-fullbatch")
    t0 = time.perf_counter()
    field = render_field(cond, Viewport.of_condition(cond), 512, 512,
                         base_seed=0, steps=500, workers=CORES)
    elapsed = time.perf_counter() - t0
    classes = set(np.unique(field.run_class).tolist())
    assert classes == {int(RunClass.CONVERGED), int(RunClass.DIVERGED)}
    mask = fracdim.boundary_mask(field)
    assert mask.bits.any()
    result = fracdim.box_count_result(mask)
    assert result.fit_r2 >= 0.97
    assert 1.05 < result.dimension < 2.0
    assert elapsed < limit
    report("5 baseline-fractal", elapsed, limit,
           f"dimension {result.dimension:.3f}, r2 {result.fit_r2:.4f}, "
           f"diverged {float(np.mean(field.run_class)):.2%}")


def test_criterion_6_condition_coverage():
    limit = budget(600.0, parallel=True)
    t0 = time.perf_counter()
    for cid in CONDITION_IDS:
        cond = preset(cid)
        field = render_field(cond, None, 128, 128, base_seed=0,
                             workers=CORES)
        assert field.run_class.shape == (128 * 128,)
        assert np.all((field.run_class == 0) | (field.run_class == 1))
        assert np.all(np.isfinite(field.accumulator))

    # structural claim: the minibatch preset consumes one frozen,
    # seed-determined schedule, identical for every pixel
    mb = preset("tanh-minibatch")
    sched_a = batch_schedule(0, mb.model.dataset_size, 16, 500)
    sched_b = batch_schedule(0, mb.model.dataset_size, 16, 500)
    hash_a = hash(tuple(tuple(batch.tolist()) for batch in sched_a))
    hash_b = hash(tuple(tuple(batch.tolist()) for batch in sched_b))
    assert hash_a == hash_b
    mb_field = render_field(mb, None, 4, 4, base_seed=0, steps=60, workers=1)
    problem = build_problem(mb.model, 0)
    sched = batch_schedule(0, mb.model.dataset_size, 16, 60)
    from trainfractal.conditions import apply_hypers, pixel_to_hyper
    for (i, j) in ((0, 0), (3, 1), (2, 3)):
        xv = pixel_to_hyper(mb.x_axis, i, 4)
        yv = pixel_to_hyper(mb.y_axis, j, 4)
        _, opts = apply_hypers(mb, xv, yv)
        from dataclasses import replace
        out = train_run(problem, replace(opts, steps=60), sched)
        assert mb_field.outcome(i, j) == out

    # structural claim: the single-datapoint preset really builds |D| = 1
    single = preset("tanh-single-datapoint")
    assert single.model.dataset_size == 1
    sp = build_problem(single.model, 0)
    assert sp.X.shape == (16, 1)
    assert sp.y.shape == (1,)

    elapsed = time.perf_counter() - t0
    assert elapsed < limit
    report("6 condition-coverage", elapsed, limit,
           "six presets at 128^2, frozen schedule, |D|=1")


def test_criterion_7_zoom_depth_guard():
    limit = budget(1.0, parallel=False)
    t0 = time.perf_counter()
    cond = preset("tanh-fullbatch")
    spec = ZoomSpec(center_x=1.0, center_y=1.0, initial_halfwidth_x=1.0,
                    initial_halfwidth_y=1.0, max_frames=60, frame_extent=1024)
    frames = zoom_viewports(cond, spec)
    assert 35 <= len(frames) <= 60
    for a, b in zip(frames, frames[1:]):
        assert b.x_axis.lo > a.x_axis.lo and b.x_axis.hi < a.x_axis.hi
        assert b.y_axis.lo > a.y_axis.lo and b.y_axis.hi < a.y_axis.hi
    elapsed = time.perf_counter() - t0
    assert elapsed < limit
    report("7 zoom-depth-guard", elapsed, limit,
           f"guard fired after {len(frames)} frames")


def test_criterion_8_format_round_trips():
    limit = budget(10.0, parallel=False)
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    for _ in range(100):
        field = random_field(rng)
        blob = field_to_bytes(field)
        assert field_to_bytes(read_field(io.BytesIO(blob))) == blob
    from test_formats import TestConfigCodec
    maker = TestConfigCodec()
    for _ in range(100):
        req = maker.random_request(rng)
        text = encode_request(req)
        assert decode_request(text) == req
        assert encode_request(decode_request(text)) == text
    elapsed = time.perf_counter() - t0
    assert elapsed < limit
    report("8 format-round-trips", elapsed, limit,
           "100 fields + 100 configs, bitwise")
