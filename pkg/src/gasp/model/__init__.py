from .dam import DAM, invert_channels
from .gasp import (
    CONTEXT_SIZES,
    DESK_WIDTHS,
    GASP,
    GATED_VARIANTS,
    N_MODALITIES,
    FULL_WIDTHS,
    SEQUENTIAL_VARIANTS,
    STACK_CHANNELS,
    STATIC_VARIANTS,
    VARIANTS,
    ModelOutput,
    Widths,
    build_model,
    model_from_description,
    validate,
)
from .report import GateReport, UnsupportedVariant, gate_report, load_checkpoint, save_checkpoint
from .layers import ALSTM, GMU, BatchNormTemporal, Conv2d, ConvLSTMCell, ConvTranspose2d, Encoder, Linear, SELayer, SpatialAttention

__all__ = [
    "ALSTM",
    "BatchNormTemporal",
    "CONTEXT_SIZES",
    "Conv2d",
    "ConvLSTMCell",
    "ConvTranspose2d",
    "DAM",
    "DESK_WIDTHS",
    "Encoder",
    "GASP",
    "GATED_VARIANTS",
    "GMU",
    "GateReport",
    "Linear",
    "N_MODALITIES",
    "FULL_WIDTHS",
    "SELayer",
    "SEQUENTIAL_VARIANTS",
    "STACK_CHANNELS",
    "STATIC_VARIANTS",
    "SpatialAttention",
    "UnsupportedVariant",
    "VARIANTS",
    "ModelOutput",
    "Widths",
    "build_model",
    "gate_report",
    "load_checkpoint",
    "invert_channels",
    "model_from_description",
    "save_checkpoint",
    "validate",
]
