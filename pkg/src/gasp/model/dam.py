"""Two-stream directed attention over the stacked modality maps.

The inverted stream sees the spatially inverted maps ``-log softmax(u)``
and learns to predict fixations from them; its SE weights are copied into a
frozen direct stream that rescales the original maps channel-wise.
"""
from __future__ import annotations

import numpy as np

from ..core import Module, ShapeError, Tensor, as_tensor, log_softmax_spatial, maxpool2d, standardize
from .layers import Conv2d, SELayer


def invert_channels(u: Tensor) -> Tensor:
    """Per-channel surprisal ``-log softmax_spatial(u)`` (before standardisation)."""
    return -log_softmax_spatial(u)


class InvertedStream(Module):
    def __init__(self, channels: int, rng: np.random.Generator, hidden: int = 32):
        self.se = SELayer(channels, rng)
        self.conv = Conv2d(channels, hidden, 3, rng)
        self.head = Conv2d(hidden, 1, 1, rng)

    def forward(self, u: Tensor) -> Tensor:
        x = standardize(invert_channels(u), axes=(2, 3))
        x = self.conv(self.se(x)).relu()
        x, _ = maxpool2d(x, 2)
        return self.head(x)


class DirectStream(Module):
    def __init__(self, channels: int, rng: np.random.Generator):
        self.se = SELayer(channels, rng)
        for p in self.se.parameters():
            p.frozen = True

    def forward(self, u: Tensor) -> tuple[Tensor, Tensor]:
        s = self.se.scale(u)
        return u * s.reshape(u.shape[0], u.shape[1], 1, 1), s


class DAM(Module):
    def __init__(self, channels: int, rng: np.random.Generator):
        self.channels = channels
        self.inverted = InvertedStream(channels, rng)
        self.direct = DirectStream(channels, rng)
        self.tie_sync()

    def tie_sync(self) -> None:
        """Copy the inverted-stream SE weights into the frozen direct stream."""
        src = dict(self.inverted.se.named_parameters())
        for name, p in self.direct.se.named_parameters():
            p.data = src[name].data.copy()

    def tied(self) -> bool:
        src = dict(self.inverted.se.named_parameters())
        return all(np.array_equal(p.data, src[n].data) for n, p in self.direct.se.named_parameters())

    def forward(self, fm: Tensor) -> tuple[Tensor, Tensor]:
        """``(priority maps, inverted-stream logits at half resolution)`` for (N, C, H, W) maps."""
        fm = as_tensor(fm)
        if fm.ndim != 4 or fm.shape[1] != self.channels:
            raise ShapeError(f"DAM expects (N, {self.channels}, H, W) maps, got {fm.shape}")
        pm, _ = self.direct(fm)
        return pm, self.inverted(fm)
