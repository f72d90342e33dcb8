"""One-hidden-layer MLP under mean-field scaling: problem setup, forward
pass, MSE loss, and closed-form backprop.

The network is ``pred = alpha1 * W1 @ act(alpha0 * W0 @ x)`` with
``alpha1 = 1/n`` and ``alpha0 = sqrt(2/n)`` (``sqrt(1/n)`` for the identity
nonlinearity).  Gradients are written out by hand so the per-step cost is a
couple of small GEMMs plus elementwise passes; there is no autodiff anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .numerics import (
    Nonlinearity,
    STREAM_INPUTS,
    STREAM_LABELS,
    STREAM_W0,
    STREAM_W1,
    normals,
    rng_for_stream,
)


def default_dataset_size(n: int, nonlinearity: Nonlinearity) -> int:
    """Dataset size matching the number of free parameters: n^2 + n for the
    nonlinear networks, n for the linear one."""
    if nonlinearity is Nonlinearity.IDENTITY:
        return n
    return n * n + n


def default_alpha0(n: int, nonlinearity: Nonlinearity) -> float:
    if nonlinearity is Nonlinearity.IDENTITY:
        return math.sqrt(1.0 / n)
    return math.sqrt(2.0 / n)


@dataclass(frozen=True)
class ModelConfig:
    n: int
    nonlinearity: Nonlinearity
    dataset_size: int
    alpha0: float
    alpha1: float
    init_mean: float = 0.0


def model_config(
    nonlinearity: Nonlinearity = Nonlinearity.TANH,
    n: int = 16,
    dataset_size: int | None = None,
    init_mean: float = 0.0,
) -> ModelConfig:
    """Build a ModelConfig with the scaling factors and dataset size derived
    from (n, nonlinearity) unless explicitly overridden."""
    if n <= 0:
        raise ValueError(f"width must be positive, got {n}")
    if dataset_size is None:
        dataset_size = default_dataset_size(n, nonlinearity)
    if dataset_size <= 0:
        raise ValueError(f"dataset_size must be positive, got {dataset_size}")
    return ModelConfig(
        n=n,
        nonlinearity=nonlinearity,
        dataset_size=dataset_size,
        alpha0=default_alpha0(n, nonlinearity),
        alpha1=1.0 / n,
        init_mean=init_mean,
    )


@dataclass(frozen=True, eq=False)
class Params:
    W0: np.ndarray  # (n, n)
    W1: np.ndarray  # (1, n)


@dataclass(frozen=True, eq=False)
class Gradients:
    G0: np.ndarray  # (n, n)
    G1: np.ndarray  # (1, n)


@dataclass(frozen=True, eq=False)
class Problem:
    """A fixed random instance shared by every pixel of an image.

    ``init_std`` holds the raw standard-normal weight draws; ``init_params``
    is those draws shifted by ``config.init_mean``.  Keeping the raw draws
    lets a render vary the initialization mean per pixel without touching
    the underlying randomness.
    """

    config: ModelConfig
    base_seed: int
    init_params: Params
    init_std: Params
    X: np.ndarray  # (n, |D|), one datapoint per column
    y: np.ndarray  # (|D|,)


def build_problem(config: ModelConfig, base_seed: int) -> Problem:
    """Instantiate weights, inputs, and labels from the seed's streams.

    Draw order is frozen: W0 row-major from stream 0, W1 from stream 1,
    X column-major (datapoint by datapoint) from stream 2, y from stream 3.
    """
    if config.n <= 0:
        raise ValueError(f"width must be positive, got {config.n}")
    if config.dataset_size <= 0:
        raise ValueError(f"dataset_size must be positive, got {config.dataset_size}")
    n, d = config.n, config.dataset_size
    _, w0 = normals(rng_for_stream(base_seed, STREAM_W0), n * n)
    _, w1 = normals(rng_for_stream(base_seed, STREAM_W1), n)
    _, xs = normals(rng_for_stream(base_seed, STREAM_INPUTS), n * d)
    _, ys = normals(rng_for_stream(base_seed, STREAM_LABELS), d)
    init_std = Params(W0=w0.reshape(n, n), W1=w1.reshape(1, n))
    init = Params(W0=config.init_mean + init_std.W0, W1=config.init_mean + init_std.W1)
    # xs was drawn datapoint by datapoint; as an (d, n) buffer each row is one
    # datapoint, so the transpose gives X with one datapoint per column.
    X = np.ascontiguousarray(xs.reshape(d, n).T)
    return Problem(config=config, base_seed=base_seed, init_params=init,
                   init_std=init_std, X=X, y=ys)


def with_init_mean(problem: Problem, init_mean: float) -> Problem:
    """Same instance with the weight-initialization mean replaced.

    The underlying standard-normal draws, inputs, and labels are shared;
    only the shift applied to the initial weights changes.
    """
    init = Params(
        W0=init_mean + problem.init_std.W0,
        W1=init_mean + problem.init_std.W1,
    )
    return Problem(
        config=replace(problem.config, init_mean=init_mean),
        base_seed=problem.base_seed,
        init_params=init,
        init_std=problem.init_std,
        X=problem.X,
        y=problem.y,
    )


def _batch(problem: Problem, columns) -> tuple[np.ndarray, np.ndarray]:
    if columns is None:
        return problem.X, problem.y
    return problem.X[:, columns], problem.y[columns]


def forward(problem: Problem, params: Params, columns=None):
    """Forward pass over the selected dataset columns (None = all).

    Returns (hidden_pre, hidden_act, predictions) with shapes
    (n, B), (n, B), (1, B).
    """
    cfg = problem.config
    Xb, _ = _batch(problem, columns)
    hidden_pre = cfg.alpha0 * np.dot(params.W0, Xb)
    hidden_act = _activate_array(cfg.nonlinearity, hidden_pre)
    predictions = cfg.alpha1 * np.dot(params.W1, hidden_act)
    return hidden_pre, hidden_act, predictions


def loss(predictions: np.ndarray, labels: np.ndarray) -> float:
    """Mean squared error over the batch presented."""
    r = np.subtract(predictions, labels).ravel()
    return float(np.dot(r, r)) / r.shape[0]


def hidden_features(problem: Problem, params: Params) -> np.ndarray:
    """Hidden activations for the full dataset; the fixed features of the
    readout-only (linear regression) limit."""
    _, hidden_act, _ = forward(problem, params)
    return hidden_act


def _activate_array(kind: Nonlinearity, x: np.ndarray) -> np.ndarray:
    if kind is Nonlinearity.TANH:
        return np.tanh(x)
    if kind is Nonlinearity.RELU:
        return np.maximum(x, 0.0)
    return x


class GradientWorkspace:
    """Preallocated buffers for repeated gradient evaluation at one batch size.

    A 500-step training run calls the gradient kernel 500 times on arrays of
    identical shape; reusing buffers removes every per-step allocation.  The
    kernel writes G0/G1 in place and returns the batch loss.
    """

    def __init__(self, n: int, batch: int):
        self.batch = batch
        self.H = np.empty((n, batch))
        self.A = np.empty((n, batch))
        self.P = np.empty((1, batch))
        self.R = np.empty((1, batch))
        self.D = np.empty((1, batch))
        self.T = np.empty((n, batch))
        self.DR = np.empty((n, batch))
        self.mask = np.empty((n, batch), dtype=bool)
        self.W1s = np.empty((1, n))
        self.G0 = np.empty((n, n))
        self.G1 = np.empty((1, n))
        self.Xb = np.empty((n, batch))
        self.yb = np.empty(batch)


def gradient_step(
    problem: Problem,
    W0: np.ndarray,
    W1: np.ndarray,
    columns,
    ws: GradientWorkspace,
    need_g0: bool = True,
    need_g1: bool = True,
) -> float:
    """Evaluate loss and gradients at (W0, W1) on the given batch.

    Fills ws.G0 / ws.G1 (when requested) and returns the batch loss.  This is
    the single arithmetic path used by both the public `gradients` operation
    and the training loop, so the two can never disagree.
    """
    cfg = problem.config
    if columns is None:
        Xb, yb = problem.X, problem.y
    else:
        np.take(problem.X, columns, axis=1, out=ws.Xb)
        np.take(problem.y, columns, out=ws.yb)
        Xb, yb = ws.Xb, ws.yb
    b = ws.batch
    inv_b = 2.0 / b

    np.dot(W0, Xb, out=ws.H)
    ws.H *= cfg.alpha0
    kind = cfg.nonlinearity
    if kind is Nonlinearity.TANH:
        np.tanh(ws.H, out=ws.A)
        A = ws.A
    elif kind is Nonlinearity.RELU:
        np.maximum(ws.H, 0.0, out=ws.A)
        A = ws.A
    else:
        A = ws.H
    np.dot(W1, A, out=ws.P)
    ws.P *= cfg.alpha1
    np.subtract(ws.P, yb, out=ws.R)
    r = ws.R[0]
    batch_loss = float(np.dot(r, r)) / b

    if not (need_g0 or need_g1):
        return batch_loss
    np.multiply(ws.R, inv_b, out=ws.D)
    if need_g1:
        np.dot(ws.D, A.T, out=ws.G1)
        ws.G1 *= cfg.alpha1
    if need_g0:
        np.multiply(W1, cfg.alpha1, out=ws.W1s)
        np.multiply(ws.W1s.T, ws.D, out=ws.T)
        if kind is Nonlinearity.TANH:
            np.multiply(A, A, out=ws.DR)
            np.subtract(1.0, ws.DR, out=ws.DR)
            ws.T *= ws.DR
        elif kind is Nonlinearity.RELU:
            np.greater(ws.H, 0.0, out=ws.mask)
            np.copyto(ws.DR, ws.mask)
            ws.T *= ws.DR
        np.dot(ws.T, Xb.T, out=ws.G0)
        ws.G0 *= cfg.alpha0
    return batch_loss


def gradients(problem: Problem, params: Params, columns=None) -> tuple[float, Gradients]:
    """Batch loss and analytic gradients of the MSE loss at `params`."""
    if columns is None:
        b = problem.config.dataset_size
    else:
        columns = np.asarray(columns)
        b = columns.shape[0]
        if b == 0:
            raise ValueError("columns must be nonempty")
    ws = GradientWorkspace(problem.config.n, b)
    batch_loss = gradient_step(problem, params.W0, params.W1, columns, ws)
    return batch_loss, Gradients(G0=ws.G0.copy(), G1=ws.G1.copy())
