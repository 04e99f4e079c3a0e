"""Jet colormap, Hann windows and binary PPM output."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

clamp_events = 0


def jet_colormap(gray: np.ndarray) -> np.ndarray:
    """Map an H x W array in [0, 1] to a 3 x H x W RGB array.

    Piecewise-linear jet: r = 1.5 - |4v - 3|, g = 1.5 - |4v - 2|,
    b = 1.5 - |4v - 1|, each clamped to [0, 1]. Out-of-range inputs are
    clamped first and counted in ``clamp_events``.
    """
    global clamp_events
    v = np.asarray(gray, dtype=np.float64)
    if v.size and (v.min() < 0.0 or v.max() > 1.0):
        clamp_events += 1
        log.warning("jet_colormap input outside [0, 1] (range %.3g..%.3g); clamping", v.min(), v.max())
        v = np.clip(v, 0.0, 1.0)
    rgb = np.stack([1.5 - np.abs(4 * v - 3), 1.5 - np.abs(4 * v - 2), 1.5 - np.abs(4 * v - 1)])
    return np.clip(rgb, 0.0, 1.0)


def hann(n: int) -> np.ndarray:
    """Symmetric Hann window 0.5 * (1 - cos(2 pi k / (n - 1)))."""
    if n < 1:
        return np.zeros(0)
    if n == 1:
        return np.ones(1)
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))


def hanning2d(h: int, w: int) -> np.ndarray:
    return np.outer(hann(h), hann(w))


def minmax(gray: np.ndarray) -> np.ndarray:
    """Rescale to [0, 1]; a constant map becomes all zeros."""
    lo, hi = gray.min(), gray.max()
    if hi - lo <= 0:
        return np.zeros_like(gray, dtype=np.float64)
    return (gray - lo) / (hi - lo)


def to_uint8(rgb: np.ndarray) -> np.ndarray:
    """3 x H x W float in [0, 1] -> H x W x 3 bytes."""
    return np.round(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8).transpose(1, 2, 0)


def encode_ppm(rgb: np.ndarray) -> bytes:
    pixels = to_uint8(rgb)
    h, w = pixels.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def decode_ppm(blob: bytes) -> np.ndarray:
    """Parse a P6 file written by ``encode_ppm``; returns H x W x 3 uint8."""
    parts = blob.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def write_ppm(path: str | Path, rgb: np.ndarray) -> None:
    Path(path).write_bytes(encode_ppm(rgb))
