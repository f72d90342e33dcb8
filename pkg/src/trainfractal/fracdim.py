"""Boundary extraction and box-counting fractal dimension.

The boundary mask marks every pixel whose 4-neighborhood contains both run
classes (both sides of the edge).  Box counting tiles the mask with
origin-aligned dyadic boxes; the dimension is minus the least-squares slope
of ln(occupied) against ln(box size) over the usable scale range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .renderer import Field

MIN_OCCUPIED = 8
MIN_FIT_BOX_SIZE = 2
MIN_FIT_SIZES = 3


class InsufficientScalesError(ValueError):
    """Raised when fewer than three box sizes survive the fit filters."""


@dataclass(eq=False)
class BoundaryMask:
    width: int
    height: int
    bits: np.ndarray  # (height, width) bool


@dataclass(frozen=True)
class BoxCount:
    box_size: int
    occupied: int
    total: int  # number of grid boxes at this size, for saturation checks


@dataclass(eq=False)
class BoxCountResult:
    entries: list[BoxCount]
    dimension: float
    fit_r2: float
    usable_sizes: int


def boundary_mask(field: Field) -> BoundaryMask:
    """Pixels whose class differs from at least one 4-neighbor."""
    if field.width < 2 or field.height < 2:
        raise ValueError("boundary of a degenerate field is undefined")
    cls = field.class_grid()
    bits = np.zeros(cls.shape, dtype=bool)
    horiz = cls[:, :-1] != cls[:, 1:]
    bits[:, :-1] |= horiz
    bits[:, 1:] |= horiz
    vert = cls[:-1, :] != cls[1:, :]
    bits[:-1, :] |= vert
    bits[1:, :] |= vert
    return BoundaryMask(width=field.width, height=field.height, bits=bits)


def boxcount(mask: BoundaryMask) -> list[BoxCount]:
    """Occupied-box counts for box sizes 1, 2, 4, ... up to min(w, h).

    Boxes are origin-aligned; ragged boxes at the right/bottom edges count
    like any other.
    """
    h, w = mask.bits.shape
    if h == 0 or w == 0:
        raise ValueError("empty mask")
    entries = []
    s = 1
    while s <= min(w, h):
        ny = -(-h // s)
        nx = -(-w // s)
        padded = np.zeros((ny * s, nx * s), dtype=bool)
        padded[:h, :w] = mask.bits
        occ = padded.reshape(ny, s, nx, s).any(axis=(1, 3)).sum()
        entries.append(BoxCount(box_size=s, occupied=int(occ), total=ny * nx))
        s *= 2
    return entries


def fit_dimension(entries: list[BoxCount]) -> tuple[float, float]:
    """Least-squares dimension from the usable scales of a box count.

    Discards sizes that are empty, sparse (occupied < 8), saturated
    (every box occupied), or the single-pixel scale, which measures mask
    thickness rather than geometry.  Needs at least three surviving sizes.
    Returns (dimension clamped to [0, 2], r^2 of the log-log fit).
    """
    usable = _usable(entries)
    if len(usable) < MIN_FIT_SIZES:
        raise InsufficientScalesError(
            f"only {len(usable)} usable box sizes, need {MIN_FIT_SIZES}")
    ls = np.log([e.box_size for e in usable])
    lo = np.log([e.occupied for e in usable])
    A = np.vstack([ls, np.ones_like(ls)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, lo, rcond=None)
    pred = A @ np.array([slope, intercept])
    ss_res = float(((lo - pred) ** 2).sum())
    ss_tot = float(((lo - lo.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dimension = min(2.0, max(0.0, -float(slope)))
    return dimension, r2


def usable_entries(entries: list[BoxCount]) -> list[BoxCount]:
    """The scales that participate in the dimension fit."""
    return [
        e for e in entries
        if e.box_size >= MIN_FIT_BOX_SIZE
        and e.occupied >= MIN_OCCUPIED
        and e.occupied < e.total
    ]


_usable = usable_entries


def box_count_result(mask: BoundaryMask) -> BoxCountResult:
    """Full pipeline on one mask: counts, fitted dimension, fit quality."""
    entries = boxcount(mask)
    dimension, r2 = fit_dimension(entries)
    return BoxCountResult(entries=entries, dimension=dimension, fit_r2=r2,
                          usable_sizes=len(usable_entries(entries)))


def field_dimension(field: Field) -> BoxCountResult:
    return box_count_result(boundary_mask(field))


def median_lower(values: list[float]) -> float:
    """Median taking the lower-middle element for even counts."""
    if not values:
        raise ValueError("median of empty list")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def sequence_dimension(fields) -> float:
    """Median of the per-field dimension estimates across a zoom sequence;
    fields whose fit fails are skipped."""
    dims = []
    for field in fields:
        try:
            dims.append(field_dimension(field).dimension)
        except (InsufficientScalesError, ValueError):
            continue
    if not dims:
        raise InsufficientScalesError("no usable fields in sequence")
    return median_lower(dims)
