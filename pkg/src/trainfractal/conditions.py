"""The six experiment presets and the mapping from image coordinates to
concrete hyperparameters.

Learning-rate axes are log10-scaled; the default window for them is
log10(eta) in [0, 3] on both axes, which brackets the mean-field stability
edge for width-16 networks (the readout-only critical learning rate sits
near 2e2, i.e. log10 ~ 2.3, and the full 2-D edge lies within a decade of
it).  Every window is user-adjustable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .model import ModelConfig, model_config
from .numerics import Nonlinearity
from .trainer import TrainOptions

LR_WINDOW_LO = 0.0
LR_WINDOW_HI = 3.0
INIT_MEAN_LO = -1.0
INIT_MEAN_HI = 1.0


class AxisTarget(enum.Enum):
    LEARNING_RATE_0 = "eta0"
    LEARNING_RATE_1 = "eta1"
    SHARED_LEARNING_RATE = "eta"
    INIT_MEAN = "init_mean"


class AxisScale(enum.Enum):
    LOG10 = "log10"
    LINEAR = "linear"


@dataclass(frozen=True)
class AxisSpec:
    target: AxisTarget
    scale: AxisScale
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"axis range is empty: [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class ConditionConfig:
    id: str
    label: str
    model: ModelConfig
    train_defaults: TrainOptions
    x_axis: AxisSpec
    y_axis: AxisSpec


TANH_FULLBATCH = "tanh-fullbatch"
RELU_FULLBATCH = "relu-fullbatch"
DEEP_LINEAR = "deep-linear"
TANH_MINIBATCH = "tanh-minibatch"
TANH_SINGLE_DATAPOINT = "tanh-single-datapoint"
INITMEAN_VS_LR = "initmean-vs-lr"

CONDITION_IDS = (
    TANH_FULLBATCH,
    RELU_FULLBATCH,
    DEEP_LINEAR,
    TANH_MINIBATCH,
    TANH_SINGLE_DATAPOINT,
    INITMEAN_VS_LR,
)

_LABELS = {
    TANH_FULLBATCH: "tanh, full batch",
    RELU_FULLBATCH: "ReLU, full batch",
    DEEP_LINEAR: "deep linear, full batch",
    TANH_MINIBATCH: "tanh, minibatch size 16",
    TANH_SINGLE_DATAPOINT: "tanh, single datapoint",
    INITMEAN_VS_LR: "init mean vs shared learning rate",
}


def _lr_axis(target: AxisTarget) -> AxisSpec:
    return AxisSpec(target, AxisScale.LOG10, LR_WINDOW_LO, LR_WINDOW_HI)


def preset(condition_id: str) -> ConditionConfig:
    """Frozen preset for one of the six experimental conditions.

    The baseline is tanh, full batch, n=16, 500 steps, learning-rate axes;
    each variant applies exactly its one documented delta.
    """
    if condition_id not in CONDITION_IDS:
        raise ValueError(f"unknown condition {condition_id!r}; "
                         f"expected one of {', '.join(CONDITION_IDS)}")
    model = model_config(Nonlinearity.TANH)
    train = TrainOptions(steps=500)
    x_axis = _lr_axis(AxisTarget.LEARNING_RATE_0)
    y_axis = _lr_axis(AxisTarget.LEARNING_RATE_1)
    if condition_id == RELU_FULLBATCH:
        model = model_config(Nonlinearity.RELU)
    elif condition_id == DEEP_LINEAR:
        model = model_config(Nonlinearity.IDENTITY)
    elif condition_id == TANH_MINIBATCH:
        train = replace(train, batch_size=16)
    elif condition_id == TANH_SINGLE_DATAPOINT:
        model = model_config(Nonlinearity.TANH, dataset_size=1)
    elif condition_id == INITMEAN_VS_LR:
        x_axis = AxisSpec(AxisTarget.INIT_MEAN, AxisScale.LINEAR,
                          INIT_MEAN_LO, INIT_MEAN_HI)
        y_axis = _lr_axis(AxisTarget.SHARED_LEARNING_RATE)
    return ConditionConfig(
        id=condition_id,
        label=_LABELS[condition_id],
        model=model,
        train_defaults=train,
        x_axis=x_axis,
        y_axis=y_axis,
    )


def pixel_to_hyper(axis: AxisSpec, index: int, extent: int) -> float:
    """Hyperparameter value at the center of pixel `index` of `extent`."""
    if not 0 <= index < extent:
        raise ValueError(f"pixel index {index} outside [0, {extent})")
    a = axis.lo + (index + 0.5) / extent * (axis.hi - axis.lo)
    if axis.scale is AxisScale.LOG10:
        return 10.0 ** a
    return a


def apply_hypers(condition: ConditionConfig, x_value: float,
                 y_value: float) -> tuple[ModelConfig, TrainOptions]:
    """Route the two axis values into their target fields; everything else
    copies from the preset."""
    model = condition.model
    train = condition.train_defaults
    for axis, value in ((condition.x_axis, x_value), (condition.y_axis, y_value)):
        if axis.target is AxisTarget.LEARNING_RATE_0:
            train = replace(train, eta0=value)
        elif axis.target is AxisTarget.LEARNING_RATE_1:
            train = replace(train, eta1=value)
        elif axis.target is AxisTarget.SHARED_LEARNING_RATE:
            train = replace(train, eta0=value, eta1=value)
        else:
            model = replace(model, init_mean=value)
    return model, train
