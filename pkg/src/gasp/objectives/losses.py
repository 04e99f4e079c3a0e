"""Training objectives on spatial logits.

The network emits logits; every loss term works on the spatial softmax
``p`` of those logits. Batched inputs have shape (B, 1, H, W) or (B, H, W);
per-sample terms are averaged over the batch.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..core import ShapeError, Tensor, as_tensor, log_softmax_spatial, softmax_spatial

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossWeights:
    ce: float = 0.1
    cc: float = 2.0
    nss: float = 1.0
    dam: float = 0.5

    def __post_init__(self):
        if min(self.ce, self.cc, self.nss, self.dam) < 0:
            raise ValueError("loss weights must be nonnegative")


def combine(components: dict, weights: LossWeights):
    """Weighted sum of the (ce, cc, nss) components; works on floats or tensors."""
    return components["ce"] * weights.ce + components["cc"] * weights.cc + components["nss"] * weights.nss


def _flat(logits: Tensor) -> Tensor:
    logits = as_tensor(logits)
    if logits.ndim == 4:
        if logits.shape[1] != 1:
            raise ShapeError(f"expected one output channel, got {logits.shape}")
        return logits.reshape(logits.shape[0], logits.shape[2], logits.shape[3])
    if logits.ndim == 3:
        return logits
    if logits.ndim == 2:
        return logits.reshape(1, *logits.shape)
    raise ShapeError(f"logits must be (B, 1, H, W), (B, H, W) or (H, W), got {logits.shape}")


def _targets(fdm, shape: tuple) -> np.ndarray:
    fdm = np.asarray(fdm, dtype=np.float64).reshape(shape)
    totals = fdm.sum(axis=(1, 2))
    if np.any(totals <= 0) or np.any(fdm < 0):
        raise ValueError("fixation density map must be nonnegative with a positive sum")
    return fdm / totals[:, None, None]


def cross_entropy(logits, fdm) -> Tensor:
    """Mean over the batch of ``-sum q log softmax(logits)``, q = fdm / sum(fdm)."""
    z = _flat(logits)
    q = _targets(fdm, z.shape)
    return -(log_softmax_spatial(z) * q).sum() / z.shape[0]


def _cc_per_sample(p: Tensor, q: np.ndarray) -> Tensor:
    pc = p - p.mean(axis=(1, 2), keepdims=True)
    qc = q - q.mean(axis=(1, 2), keepdims=True)
    cov = (pc * qc).sum(axis=(1, 2))
    var_p = (pc * pc).sum(axis=(1, 2))
    var_q = (qc * qc).sum(axis=(1, 2))
    # constant targets correlate with nothing; the eps keeps sqrt differentiable
    return cov / ((var_p + 1e-24).sqrt() * np.sqrt(np.maximum(var_q, 1e-300)))


def _nss_per_sample(p: Tensor, counts: np.ndarray) -> Tensor:
    pc = p - p.mean(axis=(1, 2), keepdims=True)
    std = ((pc * pc).mean(axis=(1, 2), keepdims=True) + 1e-24).sqrt()
    totals = counts.sum(axis=(1, 2))
    weights = counts / np.maximum(totals, 1)[:, None, None]
    return (pc / std * weights).sum(axis=(1, 2))


def fixation_counts(points_per_sample, shape: tuple[int, int]) -> np.ndarray:
    """Stack per-sample (N, 2) point arrays into a (B, H, W) count map."""
    out = np.zeros((len(points_per_sample), *shape))
    for b, pts in enumerate(points_per_sample):
        pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
        np.add.at(out[b], (pts[:, 0], pts[:, 1]), 1.0)
    return out


def loss_total(logits, fdm, counts, weights: LossWeights = LossWeights()):
    """Composite objective ``ce*CE + cc*(1 - CC) + nss*(-NSS)`` on p = softmax(logits).

    ``counts`` holds per-pixel fixation counts (B, H, W). Samples without
    fixations contribute no NSS term and are listed in the returned info.
    Returns ``(total, info)`` where ``info`` carries float components.
    """
    z = _flat(logits)
    b = z.shape[0]
    q = _targets(fdm, z.shape)
    counts = np.asarray(counts, dtype=np.float64).reshape(z.shape)
    p = softmax_spatial(z)
    ce = -(log_softmax_spatial(z) * q).sum() / b
    cc_term = 1.0 - _cc_per_sample(p, q).mean()
    has_fix = counts.sum(axis=(1, 2)) > 0
    skipped = [int(i) for i in np.flatnonzero(~has_fix)]
    if skipped:
        log.warning("NSS term skipped for samples without fixations: %s", skipped)
    if has_fix.any():
        nss_term = -(_nss_per_sample(p, counts) * has_fix.astype(float)).sum() / int(has_fix.sum())
    else:
        nss_term = Tensor(0.0)
    total = combine({"ce": ce, "cc": cc_term, "nss": nss_term}, weights)
    info = {
        "ce": ce.item(),
        "cc": cc_term.item(),
        "nss": nss_term.item(),
        "total": total.item(),
        "nss_skipped": skipped,
    }
    return total, info


def downsample_mean(fdm: np.ndarray, factor: int) -> np.ndarray:
    """Block mean over non-overlapping factor x factor tiles of the last two axes."""
    fdm = np.asarray(fdm, dtype=np.float64)
    h, w = fdm.shape[-2:]
    if h % factor or w % factor:
        raise ShapeError(f"map {h}x{w} not divisible by {factor}")
    return fdm.reshape(*fdm.shape[:-2], h // factor, factor, w // factor, factor).mean(axis=(-3, -1))


def loss_dam(preds, fdms, weights: LossWeights = LossWeights()) -> Tensor:
    """``dam * sum_t CE(pred_t, fdm_t)`` with each fdm block-averaged to the head size.

    ``preds`` is a sequence of (B, 1, h, w) logits, ``fdms`` the matching
    (B, H, W) full-resolution targets.
    """
    if len(preds) != len(fdms) or not preds:
        raise ValueError("loss_dam needs one target per prediction timestep")
    total = None
    for pred, fdm in zip(preds, fdms):
        pred = as_tensor(pred)
        fdm = np.asarray(fdm, dtype=np.float64)
        factor = fdm.shape[-1] // pred.shape[-1]
        term = cross_entropy(pred, downsample_mean(fdm, factor) if factor > 1 else fdm)
        total = term if total is None else total + term
    return total * weights.dam
