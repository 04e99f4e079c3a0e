from .config import TIE_MODES, WIDTH_PROFILES, ConfigError, TrainConfig, load_config, parse_config_text
from .loop import (
    Batch,
    RunReport,
    TrainingAborted,
    TrainResult,
    ablate,
    ablation_masks,
    checksum,
    contribution,
    evaluate,
    evaluate_predictor,
    get_dataset,
    make_batch,
    modality_mask,
    run_trials,
    summarize,
    train,
)

__all__ = [
    "Batch",
    "ConfigError",
    "RunReport",
    "TIE_MODES",
    "TrainConfig",
    "TrainResult",
    "TrainingAborted",
    "WIDTH_PROFILES",
    "ablate",
    "ablation_masks",
    "checksum",
    "contribution",
    "evaluate",
    "evaluate_predictor",
    "get_dataset",
    "load_config",
    "make_batch",
    "modality_mask",
    "parse_config_text",
    "run_trials",
    "summarize",
    "train",
]
