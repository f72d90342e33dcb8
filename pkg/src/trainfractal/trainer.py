"""Full training of one pixel: steepest descent from the shared init under
that pixel's learning rates, classified converged/diverged, with the
escape-time intensity accumulators.

A run is Diverged the moment its batch loss goes non-finite or above the
divergence threshold; everything that completes all its steps is Converged.
Converged intensity is the sum of per-step batch losses, diverged intensity
the sum of guarded inverse losses over the completed steps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import GradientWorkspace, Problem, gradient_step, hidden_features
from .numerics import STREAM_BATCHES, next_uniform, rng_for_stream

DEFAULT_DIVERGENCE_THRESHOLD = 1e12
DEFAULT_INVERSE_LOSS_FLOOR = 1e-300


class RunClass(enum.IntEnum):
    CONVERGED = 0
    DIVERGED = 1


@dataclass(frozen=True)
class TrainOptions:
    steps: int = 500
    eta0: float = 0.0
    eta1: float = 0.0
    batch_size: int = 0  # 0 means full batch
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD
    inverse_loss_floor: float = DEFAULT_INVERSE_LOSS_FLOOR


@dataclass(frozen=True)
class RunOutcome:
    run_class: RunClass
    steps_run: int
    accumulator: float
    final_loss: float


def batch_schedule(base_seed: int, dataset_size: int, batch_size: int,
                   steps: int) -> list[np.ndarray]:
    """Epoch-based minibatch schedule, identical for every pixel of an image.

    Stream 4 drives one Fisher-Yates shuffle of [0, dataset_size) per epoch;
    consecutive steps consume consecutive slices of the permutation, with a
    final short slice when the batch size does not divide the dataset.
    """
    if not 1 <= batch_size <= dataset_size:
        raise ValueError(
            f"batch_size must be in [1, {dataset_size}], got {batch_size}")
    state = rng_for_stream(base_seed, STREAM_BATCHES)
    schedule: list[np.ndarray] = []
    perm = np.arange(dataset_size, dtype=np.int64)
    while len(schedule) < steps:
        for i in range(dataset_size - 1, 0, -1):
            state, u = next_uniform(state)
            j = int(u * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        for start in range(0, dataset_size, batch_size):
            schedule.append(perm[start:start + batch_size].copy())
            if len(schedule) == steps:
                break
    return schedule


def train_run(problem: Problem, opts: TrainOptions,
              schedule: list[np.ndarray] | None = None) -> RunOutcome:
    """Train from problem.init_params for opts.steps steps of steepest descent.

    At each step the batch loss is evaluated at the current parameters; the
    divergence check uses that same value, so there is exactly one gradient
    evaluation per step.  `schedule` may carry a precomputed batch schedule
    (it is seed-determined, hence shared across all pixels of a render);
    when omitted and batch_size > 0 it is derived from the problem's seed.
    """
    cfg = problem.config
    n, d = cfg.n, cfg.dataset_size
    minibatch = opts.batch_size > 0
    if minibatch and schedule is None:
        schedule = batch_schedule(problem.base_seed, d, opts.batch_size, opts.steps)

    W0 = problem.init_params.W0.copy()
    W1 = problem.init_params.W1.copy()
    need_g0 = opts.eta0 != 0.0
    need_g1 = opts.eta1 != 0.0
    workspaces: dict[int, GradientWorkspace] = {}

    loss_sum = 0.0
    inv_sum = 0.0
    floor = opts.inverse_loss_floor
    threshold = opts.divergence_threshold
    for t in range(opts.steps):
        if minibatch:
            cols = schedule[t]
            b = cols.shape[0]
        else:
            cols = None
            b = d
        ws = workspaces.get(b)
        if ws is None:
            ws = workspaces[b] = GradientWorkspace(n, b)
        step_loss = gradient_step(problem, W0, W1, cols, ws, need_g0, need_g1)
        if not math.isfinite(step_loss) or step_loss > threshold:
            return RunOutcome(RunClass.DIVERGED, t, inv_sum, step_loss)
        loss_sum += step_loss
        inv_sum += 1.0 / max(step_loss, floor)
        if need_g0:
            ws.G0 *= opts.eta0
            W0 -= ws.G0
        if need_g1:
            ws.G1 *= opts.eta1
            W1 -= ws.G1
    ws = workspaces.get(d)
    if ws is None:
        ws = GradientWorkspace(n, d)
    final_loss = gradient_step(problem, W0, W1, None, ws, False, False)
    return RunOutcome(RunClass.CONVERGED, opts.steps, loss_sum, final_loss)


def readout_hessian(problem: Problem) -> np.ndarray:
    """Hessian of the loss in the readout weights at the initial features.

    With eta0 = 0 training is linear regression on fixed hidden features A,
    whose gradient-descent stability is governed by this matrix.
    """
    A = hidden_features(problem, problem.init_params)
    cfg = problem.config
    return (2.0 * cfg.alpha1 * cfg.alpha1 / cfg.dataset_size) * (A @ A.T)


def readout_critical_lr(problem: Problem) -> float:
    """Closed-form stability boundary for readout-only training: descent on
    the quadratic converges iff eta1 < 2 / lambda_max."""
    lam = float(np.linalg.eigvalsh(readout_hessian(problem)).max())
    return 2.0 / lam
