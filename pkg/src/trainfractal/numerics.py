"""Deterministic random numbers and pointwise nonlinearities.

The generator is splitmix64: a single 64-bit state word advanced by a fixed
odd constant and run through an xor-shift-multiply finalizer.  It is trivial
to port bit-exactly, which is what makes every render reproducible across
runs, platforms, and worker counts.  All functions here are pure: state is
a plain int and every operation returns the successor state.
"""

from __future__ import annotations

import enum
import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Fixed stream allocation for one problem instance.
STREAM_W0 = 0
STREAM_W1 = 1
STREAM_INPUTS = 2
STREAM_LABELS = 3
STREAM_BATCHES = 4


def _mix(z: int) -> int:
    """splitmix64 finalizer on a 64-bit word."""
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def rng_for_stream(base_seed: int, stream_id: int) -> int:
    """Derive an independent generator state for (base_seed, stream_id)."""
    return _mix((base_seed ^ (stream_id * _GOLDEN)) & _MASK64)


def next_uniform(state: int) -> tuple[int, float]:
    """Advance the state once; return (new state, uniform value in [0, 1))."""
    state = (state + _GOLDEN) & _MASK64
    return state, (_mix(state) >> 11) * 2.0**-53


def _box_muller(u1: float, u2: float) -> tuple[float, float]:
    if u1 == 0.0:
        u1 = 2.0**-53
    r = math.sqrt(-2.0 * math.log(u1))
    theta = 2.0 * math.pi * u2
    return r * math.cos(theta), r * math.sin(theta)


def next_normal_pair(state: int) -> tuple[int, float, float]:
    """Draw two independent standard normals by the Box-Muller transform."""
    state, u1 = next_uniform(state)
    state, u2 = next_uniform(state)
    z0, z1 = _box_muller(u1, u2)
    return state, z0, z1


def normals(state: int, count: int) -> tuple[int, np.ndarray]:
    """Draw `count` standard normals.

    Consumes whole Box-Muller pairs; for odd counts the second member of the
    final pair is discarded.  This ordering is frozen: problem construction
    depends on it bit-for-bit.
    """
    out = np.empty(count)
    i = 0
    while i < count:
        state, z0, z1 = next_normal_pair(state)
        out[i] = z0
        if i + 1 < count:
            out[i + 1] = z1
        i += 2
    return state, out


class Nonlinearity(enum.Enum):
    TANH = "tanh"
    RELU = "relu"
    IDENTITY = "identity"


def activate(kind: Nonlinearity, x):
    """Apply the pointwise nonlinearity. Accepts scalars or arrays."""
    if kind is Nonlinearity.TANH:
        return np.tanh(x)
    if kind is Nonlinearity.RELU:
        return np.maximum(x, 0.0)
    return np.multiply(x, 1.0)


def activate_deriv(kind: Nonlinearity, x):
    """Derivative of `activate`; the ReLU derivative at exactly 0 is 0."""
    if kind is Nonlinearity.TANH:
        t = np.tanh(x)
        return 1.0 - t * t
    if kind is Nonlinearity.RELU:
        return np.where(np.greater(x, 0.0), 1.0, 0.0)
    return np.ones_like(np.asarray(x, dtype=float))
