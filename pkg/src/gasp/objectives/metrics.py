"""Saliency evaluation metrics on single H x W maps.

Fixations are given as an (N, 2) integer array of (row, col) locations.
Every metric returns a Python float.
"""
from __future__ import annotations

import numpy as np


def _as_points(points, shape: tuple[int, int]) -> np.ndarray:
    pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    if pts.size and (
        pts[:, 0].min() < 0 or pts[:, 1].min() < 0 or pts[:, 0].max() >= shape[0] or pts[:, 1].max() >= shape[1]
    ):
        raise ValueError("fixation point out of bounds")
    return pts


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _map(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2D map, got shape {a.shape}")
    return a


def metric_nss(pred, points) -> float:
    """Mean standardised saliency at the fixations (population std).

    A constant map scores 0.
    """
    pred = _map(pred)
    pts = _as_points(points, pred.shape)
    if len(pts) == 0:
        raise ValueError("NSS needs at least one fixation")
    std = pred.std()
    if std == 0:
        return 0.0
    z = (pred - pred.mean()) / std
    return float(z[pts[:, 0], pts[:, 1]].mean())


def metric_cc(pred, fdm) -> float:
    """Pearson correlation of two maps; 0 if either is constant."""
    a, b = _map(pred).ravel(), _map(fdm).ravel()
    if a.shape != b.shape:
        raise ValueError("CC maps differ in shape")
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a * a).sum() * (b * b).sum())
    if den == 0:
        return 0.0
    return float(np.clip((a * b).sum() / den, -1.0, 1.0))


def _as_distribution(a: np.ndarray) -> np.ndarray:
    a = a - a.min()
    total = a.sum()
    if total == 0:
        return np.full(a.shape, 1.0 / a.size)
    return a / total


def metric_sim(pred, fdm) -> float:
    """Histogram intersection after min-shifting and normalising both maps."""
    a, b = _map(pred), _map(fdm)
    if a.shape != b.shape:
        raise ValueError("SIM maps differ in shape")
    return float(np.minimum(_as_distribution(a), _as_distribution(b)).sum())


def metric_auc_judd(pred, points) -> float:
    """Judd AUC: thresholds at the saliency of each fixated pixel.

    Fixated pixels are deduplicated. TPR counts fixated pixels with saliency
    >= threshold, FPR counts the remaining pixels likewise; the curve runs
    from (0, 0) to (1, 1) and is integrated with the trapezoid rule.
    """
    pred = _map(pred)
    pts = _as_points(points, pred.shape)
    if len(pts) == 0:
        raise ValueError("AUC-J needs at least one fixation")
    fixated = np.zeros(pred.shape, dtype=bool)
    fixated[pts[:, 0], pts[:, 1]] = True
    pos = np.sort(pred[fixated])
    neg = np.sort(pred[~fixated])
    if neg.size == 0:
        raise ValueError("AUC-J needs at least one non-fixated pixel")
    thresholds = np.unique(pos)[::-1]
    tpr = (pos.size - np.searchsorted(pos, thresholds, side="left")) / pos.size
    fpr = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    tpr = np.concatenate([[0.0], tpr, [1.0]])
    fpr = np.concatenate([[0.0], fpr, [1.0]])
    return float(_trapezoid(tpr, fpr))


def metric_sauc(pred, points, negatives) -> float:
    """Shuffled AUC against a pool of negative fixation locations.

    Thresholds sweep every saliency value, which makes the area equal to the
    probability that a fixated pixel outranks a negative one, ties counted
    as one half. Fixated pixels are deduplicated; negatives are used as given.
    """
    pred = _map(pred)
    pts = np.unique(_as_points(points, pred.shape), axis=0)
    negs = _as_points(negatives, pred.shape)
    if len(pts) == 0 or len(negs) == 0:
        raise ValueError("sAUC needs fixations and negatives")
    pos = pred[pts[:, 0], pts[:, 1]]
    neg = np.sort(pred[negs[:, 0], negs[:, 1]])
    below = np.searchsorted(neg, pos, side="left")
    tied = np.searchsorted(neg, pos, side="right") - below
    return float((below + 0.5 * tied).sum() / (pos.size * neg.size))


METRICS = ("AUC-J", "sAUC", "CC", "NSS", "SIM")


def all_metrics(pred, fdm, points, negatives) -> dict[str, float]:
    return {
        "AUC-J": metric_auc_judd(pred, points),
        "sAUC": metric_sauc(pred, points, negatives),
        "CC": metric_cc(pred, fdm),
        "NSS": metric_nss(pred, points),
        "SIM": metric_sim(pred, fdm),
    }
