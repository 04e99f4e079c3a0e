"""Per-modality sliding windows over the incoming frame stream.

Each modality keeps a window of its last ``W`` payloads and emits the
element at read index ``T'``. At the first frame the whole window is filled
with that frame; afterwards the window shifts left by one and the new
payload goes into the last slot. ``W = 0`` modalities pass frames through.
A read index at or beyond the window length reads the newest slot.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any

# (window size, read index) per modality
WINDOW_TABLE: dict[str, tuple[int, int]] = {
    "SP": (15, 15),
    "GE": (7, 4),
    "GF": (5, 0),
    "FER": (0, 0),
}

# detector-native input sizes; recorded for reference, unused without detectors
DETECTOR_INPUT_SIZES = {"GF": (227, 227), "GE": (224, 224), "FER": (96, 96), "SP": (256, 320)}


@dataclass
class WindowBuffer:
    size: int
    read_index: int
    slots: deque = field(default_factory=deque)
    t: int = 0

    @classmethod
    def for_modality(cls, modality: str) -> "WindowBuffer":
        size, read = WINDOW_TABLE[modality]
        return cls(size, read)

    @property
    def effective_index(self) -> int:
        return min(self.read_index, max(self.size, 1) - 1)


def window_step(buf: WindowBuffer, payload: Any, t: int | None = None) -> Any:
    """Push ``payload`` for frame ``t`` and return the emitted element."""
    t = buf.t if t is None else t
    if t != buf.t:
        raise ValueError(f"window expected frame {buf.t}, got {t}")
    buf.t += 1
    if buf.size == 0:
        return payload
    if t == 0:
        buf.slots = deque([payload] * buf.size, maxlen=buf.size)
    else:
        buf.slots.append(payload)
    return buf.slots[buf.effective_index]


def window_sequence(modality: str, payloads: list) -> list:
    """Run a fresh window for ``modality`` over a whole stream."""
    buf = WindowBuffer.for_modality(modality)
    return [window_step(buf, p, t) for t, p in enumerate(payloads)]
