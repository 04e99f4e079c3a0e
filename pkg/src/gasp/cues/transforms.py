"""Resizing and per-clip standardisation of modality maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODALITIES = ("IMG", "SP", "GF", "GE", "FER")


def _axis_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel centres (corner alignment off), clamped at the borders
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize over the last two axes."""
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape[-2:]
    if (h, w) == (out_h, out_w):
        return arr.copy()
    r0, r1, fr = _axis_weights(h, out_h)
    c0, c1, fc = _axis_weights(w, out_w)
    rows = arr[..., r0, :] * (1 - fr)[:, None] + arr[..., r1, :] * fr[:, None]
    return rows[..., c0] * (1 - fc) + rows[..., c1] * fc


@dataclass
class ModalityClip:
    """A T x 3 x H x W stack of colour-mapped maps for one modality."""

    modality: str
    frames: np.ndarray
    standardized: bool = False
    degenerate: bool = False

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 4 or self.frames.shape[1] != 3:
            raise ValueError(f"clip frames must be T x 3 x H x W, got {self.frames.shape}")

    def resized(self, size: int) -> "ModalityClip":
        return ModalityClip(self.modality, resize_bilinear(self.frames, size, size), self.standardized, self.degenerate)


def standardize_clip(clip: ModalityClip) -> ModalityClip:
    """Zero mean, unit (population) std over the whole clip.

    A clip with std below 1e-8 becomes all zeros and is flagged degenerate.
    """
    x = clip.frames
    std = x.std()
    if std < 1e-8:
        return ModalityClip(clip.modality, np.zeros_like(x), standardized=True, degenerate=True)
    return ModalityClip(clip.modality, (x - x.mean()) / std, standardized=True)
