from .losses import LossWeights, combine, cross_entropy, downsample_mean, fixation_counts, loss_dam, loss_total
from .metrics import (
    METRICS,
    all_metrics,
    metric_auc_judd,
    metric_cc,
    metric_nss,
    metric_sauc,
    metric_sim,
)

__all__ = [
    "LossWeights",
    "METRICS",
    "all_metrics",
    "combine",
    "cross_entropy",
    "downsample_mean",
    "fixation_counts",
    "loss_dam",
    "loss_total",
    "metric_auc_judd",
    "metric_cc",
    "metric_nss",
    "metric_sauc",
    "metric_sim",
]
