"""Escape-time coloring of a rendered field.

Converged pixels shade white -> deep blue, diverged pixels white -> deep red;
the palest pixels are the runs that resolved fastest.  Intensity is the
log-compressed accumulator normalized per class against that image's 2nd and
98th percentiles, so the color scale adapts to each image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .renderer import Field
from .trainer import RunClass

WHITE = (255.0, 255.0, 255.0)
DEEP_BLUE = (26.0, 51.0, 217.0)
DEEP_RED = (217.0, 38.0, 26.0)


@dataclass(eq=False)
class RgbImage:
    """8-bit RGB image, row-major; row 0 is the top of the picture, i.e. the
    high end of the field's y axis."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()


def percentile(values, q: float) -> float:
    """Linear-interpolated order statistic at rank q * (count - 1)."""
    values = np.sort(np.asarray(values, dtype=float))
    if values.size == 0:
        raise ValueError("percentile of empty collection")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {q}")
    pos = q * (values.size - 1)
    i = int(pos)
    if i == values.size - 1:
        return float(values[-1])
    frac = pos - i
    return float(values[i] + (values[i + 1] - values[i]) * frac)


def normalized_intensity(field: Field) -> np.ndarray:
    """Per-pixel intensity in [0, 1], normalized independently per class.

    u = ln(1 + accumulator); v clamps (u - q02) / (q98 - q02) into [0, 1]
    using that class's percentiles within this image.  A class with fewer
    than two distinct values (or a zero percentile span) is rendered at
    full intensity.
    """
    if field.width * field.height == 0:
        raise ValueError("empty field")
    u = np.log1p(field.accumulator)
    v = np.ones_like(u)
    for cls in (RunClass.CONVERGED, RunClass.DIVERGED):
        sel = field.run_class == int(cls)
        if not sel.any():
            continue
        cu = u[sel]
        if np.unique(cu).size < 2:
            continue
        q02 = percentile(cu, 0.02)
        q98 = percentile(cu, 0.98)
        span = q98 - q02
        if span <= 0.0:
            continue
        v[sel] = np.clip((cu - q02) / span, 0.0, 1.0)
    return v


def _lerp_channel(lo: float, hi: float, v: np.ndarray) -> np.ndarray:
    c = lo + (hi - lo) * v
    return np.floor(c + 0.5).astype(np.uint8)  # round half away from zero


def colorize(field: Field) -> RgbImage:
    """Render the field to RGB; class picks the palette, intensity the
    saturation.  Rows are flipped so that the image's top row is the high
    end of the y axis."""
    v = normalized_intensity(field)
    out = np.empty((field.height * field.width, 3), dtype=np.uint8)
    diverged = field.run_class == int(RunClass.DIVERGED)
    for ch in range(3):
        blue = _lerp_channel(WHITE[ch], DEEP_BLUE[ch], v)
        red = _lerp_channel(WHITE[ch], DEEP_RED[ch], v)
        out[:, ch] = np.where(diverged, red, blue)
    grid = out.reshape(field.height, field.width, 3)[::-1]
    return RgbImage(width=field.width, height=field.height,
                    pixels=np.ascontiguousarray(grid))
