from .gradcheck import GradCheckReport, grad_check, relative_error
from .module import Module, Parameter, count_parameters
from .ops import (
    batchnorm_temporal,
    conv2d,
    conv_transpose2d,
    linear,
    log_softmax_spatial,
    maxpool2d,
    pointwise,
    softmax_spatial,
    standardize,
)
from .optim import Adam, AdamState, adam_step
from .tensor import NumericError, ShapeError, Tensor, as_tensor, concat, no_grad, split, stack

__all__ = [
    "Adam",
    "AdamState",
    "GradCheckReport",
    "Module",
    "NumericError",
    "Parameter",
    "ShapeError",
    "Tensor",
    "adam_step",
    "as_tensor",
    "batchnorm_temporal",
    "concat",
    "conv2d",
    "conv_transpose2d",
    "count_parameters",
    "grad_check",
    "linear",
    "log_softmax_spatial",
    "maxpool2d",
    "no_grad",
    "pointwise",
    "relative_error",
    "softmax_spatial",
    "split",
    "stack",
    "standardize",
]
