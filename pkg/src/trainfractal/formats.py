"""Bit-exact persistence: binary field dumps, PNG images, box-count CSV, and
the canonical render-request JSON.

The field format is little-endian fixed-width binary: a 4096x4096 field is
16.7M records of 21 bytes each, which text could not carry losslessly at
reasonable size.  The PNG encoder is self-contained (filter 0 scanlines,
one fixed-level zlib stream) so identical images always produce identical
bytes.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field as dataclass_field, replace

import numpy as np

from .colorize import RgbImage
from .conditions import (
    AxisScale,
    AxisSpec,
    AxisTarget,
    CONDITION_IDS,
    preset,
)
from .fracdim import BoxCountResult
from .renderer import Field, Viewport

MAGIC = b"NNFR"
VERSION = 1
_HEADER = struct.Struct("<4sIIIBIQddddBBBB")
_RECORD_DTYPE = np.dtype([
    ("run_class", "u1"),
    ("steps_run", "<u4"),
    ("final_loss", "<f8"),
    ("accumulator", "<f8"),
])

_TARGET_CODES = {t: i for i, t in enumerate(AxisTarget)}
_SCALE_CODES = {s: i for i, s in enumerate(AxisScale)}
_TARGETS_BY_CODE = {i: t for t, i in _TARGET_CODES.items()}
_SCALES_BY_CODE = {i: s for s, i in _SCALE_CODES.items()}
_CONDITION_CODES = {cid: i for i, cid in enumerate(CONDITION_IDS)}


class FormatError(ValueError):
    """Malformed or unsupported on-disk data."""


def write_field(field: Field, sink) -> None:
    """Serialize a field; byte-identical output for identical fields."""
    header = _HEADER.pack(
        MAGIC, VERSION, field.width, field.height,
        _CONDITION_CODES[field.condition.id], field.steps, field.base_seed,
        field.viewport.x_axis.lo, field.viewport.x_axis.hi,
        field.viewport.y_axis.lo, field.viewport.y_axis.hi,
        _TARGET_CODES[field.viewport.x_axis.target],
        _SCALE_CODES[field.viewport.x_axis.scale],
        _TARGET_CODES[field.viewport.y_axis.target],
        _SCALE_CODES[field.viewport.y_axis.scale],
    )
    records = np.empty(field.width * field.height, dtype=_RECORD_DTYPE)
    records["run_class"] = field.run_class
    records["steps_run"] = field.steps_run
    records["final_loss"] = field.final_loss
    records["accumulator"] = field.accumulator
    sink.write(header)
    sink.write(records.tobytes())


def field_to_bytes(field: Field) -> bytes:
    import io
    buf = io.BytesIO()
    write_field(field, buf)
    return buf.getvalue()


def read_field(source) -> Field:
    """Inverse of write_field; the condition is reconstructed from its id
    plus the stored axis data."""
    raw = source.read()
    if len(raw) < _HEADER.size:
        raise FormatError("truncated header")
    (magic, version, width, height, cond_code, steps, base_seed,
     x_lo, x_hi, y_lo, y_hi, xt, xs, yt, ys) = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if width < 1 or height < 1:
        raise FormatError("degenerate field extents")
    code_to_id = {v: k for k, v in _CONDITION_CODES.items()}
    if cond_code not in code_to_id:
        raise FormatError(f"unknown condition code {cond_code}")
    try:
        x_axis = AxisSpec(_TARGETS_BY_CODE[xt], _SCALES_BY_CODE[xs], x_lo, x_hi)
        y_axis = AxisSpec(_TARGETS_BY_CODE[yt], _SCALES_BY_CODE[ys], y_lo, y_hi)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad axis data: {exc}") from exc
    body = raw[_HEADER.size:]
    expected = width * height * _RECORD_DTYPE.itemsize
    if len(body) != expected:
        raise FormatError(
            f"pixel data is {len(body)} bytes, expected {expected}")
    records = np.frombuffer(body, dtype=_RECORD_DTYPE)
    condition = preset(code_to_id[cond_code])
    condition = replace(condition, x_axis=x_axis, y_axis=y_axis)
    return Field(
        width=width, height=height, condition=condition,
        viewport=Viewport(x_axis, y_axis), base_seed=base_seed, steps=steps,
        run_class=records["run_class"].copy(),
        steps_run=records["steps_run"].copy(),
        final_loss=records["final_loss"].copy(),
        accumulator=records["accumulator"].copy(),
    )


# --- PNG ------------------------------------------------------------------

def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def png_bytes(image: RgbImage) -> bytes:
    """Encode 8-bit RGB as PNG with fixed settings (filter 0, zlib level 6)."""
    ihdr = struct.pack(">IIBBBBB", image.width, image.height, 8, 2, 0, 0, 0)
    rows = image.pixels.reshape(image.height, image.width * 3)
    raw = b"".join(b"\x00" + row.tobytes() for row in rows)
    comp = zlib.compressobj(6, zlib.DEFLATED, 15, 8, zlib.Z_DEFAULT_STRATEGY)
    idat = comp.compress(raw) + comp.flush()
    return (b"\x89PNG\r\n\x1a\n" + _chunk(b"IHDR", ihdr)
            + _chunk(b"IDAT", idat) + _chunk(b"IEND", b""))


def write_png(image: RgbImage, sink) -> None:
    sink.write(png_bytes(image))


# --- box-count CSV ---------------------------------------------------------

def write_boxcount_csv(result: BoxCountResult, sink) -> None:
    """CSV of (box_size, occupied) pairs with the fit appended as comments."""
    sink.write("box_size,occupied\n")
    for entry in result.entries:
        sink.write(f"{entry.box_size},{entry.occupied}\n")
    sink.write(f"# dimension={result.dimension:.17g}\n")
    sink.write(f"# r2={result.fit_r2:.17g}\n")


# --- render-request JSON ----------------------------------------------------

class ConfigError(ValueError):
    """Render-request JSON violating the schema; `path` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class RangeError(ValueError):
    """Structurally valid request with an empty axis range."""


@dataclass(frozen=True)
class RenderRequest:
    condition: str
    seed: int = 0
    steps: int | None = None
    width: int = 256
    height: int = 256
    viewport: tuple[float, float, float, float] | None = None
    overrides: dict = dataclass_field(default_factory=dict)

    def resolve(self):
        """Expand to (condition, viewport, steps, train options) with preset
        defaults filled in; e.g. the minibatch condition contributes its
        batch size unless overridden."""
        cond = preset(self.condition)
        train = cond.train_defaults
        if "batch_size" in self.overrides:
            batch = int(self.overrides["batch_size"])
            if batch > cond.model.dataset_size:
                raise RangeError(
                    f"batch_size {batch} exceeds the dataset size "
                    f"{cond.model.dataset_size}")
            train = replace(train, batch_size=batch)
        if "threshold" in self.overrides:
            train = replace(train,
                            divergence_threshold=float(self.overrides["threshold"]))
        cond = replace(cond, train_defaults=train)
        steps = self.steps if self.steps is not None else train.steps
        if "steps" in self.overrides:
            steps = int(self.overrides["steps"])
        if self.viewport is None:
            vp = Viewport.of_condition(cond)
        else:
            x_lo, x_hi, y_lo, y_hi = self.viewport
            if not (x_lo < x_hi and y_lo < y_hi):
                raise RangeError(
                    f"viewport ranges are empty: x [{x_lo}, {x_hi}], "
                    f"y [{y_lo}, {y_hi}]")
            vp = Viewport.from_ranges(cond, x_lo, x_hi, y_lo, y_hi)
        return cond, vp, steps, train


_TOP_KEYS = {"condition", "seed", "steps", "width", "height", "viewport",
             "overrides"}
_OVERRIDE_KEYS = {"batch_size", "steps", "threshold"}


def _require(value, types, path):
    if isinstance(value, bool) or not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else \
            "/".join(t.__name__ for t in types)
        raise ConfigError(path, f"expected {names}, got {type(value).__name__}")
    return value


def decode_request(text: str | bytes) -> RenderRequest:
    """Parse and validate the canonical render-request JSON; unknown fields
    are rejected with their path."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("$", "request must be a JSON object")
    for key in obj:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown field")
    if "condition" not in obj:
        raise ConfigError("condition", "required field missing")
    condition = _require(obj["condition"], str, "condition")
    if condition not in CONDITION_IDS:
        raise ConfigError("condition", f"unknown condition {condition!r}")
    seed = _require(obj.get("seed", 0), int, "seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must fit in 64 unsigned bits")
    steps = obj.get("steps")
    if steps is not None:
        steps = _require(steps, int, "steps")
        if steps < 1:
            raise ConfigError("steps", "must be positive")
    width = _require(obj.get("width", 256), int, "width")
    height = _require(obj.get("height", 256), int, "height")
    if width < 1:
        raise ConfigError("width", "must be positive")
    if height < 1:
        raise ConfigError("height", "must be positive")
    viewport = None
    if obj.get("viewport") is not None:
        vp = _require(obj["viewport"], dict, "viewport")
        for key in vp:
            if key not in {"x", "y"}:
                raise ConfigError(f"viewport.{key}", "unknown field")
        ranges = []
        for axis in ("x", "y"):
            if axis not in vp:
                raise ConfigError(f"viewport.{axis}", "required field missing")
            spec = _require(vp[axis], dict, f"viewport.{axis}")
            for key in spec:
                if key not in {"lo", "hi"}:
                    raise ConfigError(f"viewport.{axis}.{key}", "unknown field")
            for key in ("lo", "hi"):
                if key not in spec:
                    raise ConfigError(f"viewport.{axis}.{key}",
                                      "required field missing")
                ranges.append(float(_require(spec[key], (int, float),
                                             f"viewport.{axis}.{key}")))
        viewport = (ranges[0], ranges[1], ranges[2], ranges[3])
    overrides = {}
    if obj.get("overrides") is not None:
        ov = _require(obj["overrides"], dict, "overrides")
        for key, value in ov.items():
            if key not in _OVERRIDE_KEYS:
                raise ConfigError(f"overrides.{key}", "unknown field")
            if key == "threshold":
                overrides[key] = float(_require(value, (int, float),
                                                f"overrides.{key}"))
            else:
                overrides[key] = _require(value, int, f"overrides.{key}")
                if overrides[key] < 1:
                    raise ConfigError(f"overrides.{key}", "must be positive")
    return RenderRequest(condition=condition, seed=seed, steps=steps,
                         width=width, height=height, viewport=viewport,
                         overrides=overrides)


def encode_request(request: RenderRequest) -> str:
    """Canonical key-sorted encoding; decode(encode(r)) == r."""
    obj = {
        "condition": request.condition,
        "seed": request.seed,
        "steps": request.steps,
        "width": request.width,
        "height": request.height,
        "viewport": None,
        "overrides": dict(sorted(request.overrides.items())),
    }
    if request.viewport is not None:
        x_lo, x_hi, y_lo, y_hi = request.viewport
        obj["viewport"] = {"x": {"lo": x_lo, "hi": x_hi},
                           "y": {"lo": y_lo, "hi": y_hi}}
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def request_for_field(field: Field) -> RenderRequest:
    """Provenance record for a rendered field (the JSON sidecar contents)."""
    vp = field.viewport
    return RenderRequest(
        condition=field.condition.id,
        seed=field.base_seed,
        steps=field.steps,
        width=field.width,
        height=field.height,
        viewport=(vp.x_axis.lo, vp.x_axis.hi, vp.y_axis.lo, vp.y_axis.hi),
    )
