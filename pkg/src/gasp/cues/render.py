"""Rasterise detection records into gaze-cone, gaze-target and affect maps.

Every renderer produces a gray map normalised to [0, 1] and then applies the
jet colormap, returning 3 x H x W. Pixel (row i, col j) sits at image
coordinates (x=j, y=i).
"""
from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from .colormap import hanning2d, jet_colormap, minmax
from .records import FaceDetection
from .transforms import resize_bilinear

log = logging.getLogger(__name__)

CONE_HALF_ANGLE = math.radians(30.0)
CONE_BORDER_FALLOFF = 0.2
FURTHEST_ALPHA = 0.5
NEARER_ALPHA = 0.75

skipped_faces = 0


def _valid(face: FaceDetection) -> bool:
    global skipped_faces
    if face.bbox[2] <= 0 or face.bbox[3] <= 0:
        skipped_faces += 1
        log.warning("skipping face with degenerate bbox %s", face.bbox)
        return False
    return True


def gaze_direction(azimuth: float, pitch: float) -> tuple[float, float] | None:
    """Unit image-plane gaze direction, or None when the projection vanishes."""
    dx = math.cos(azimuth) * math.cos(pitch)
    dy = math.sin(pitch)
    norm = math.hypot(dx, dy)
    if norm < 1e-9:
        return None
    return dx / norm, dy / norm


def cone_layer(height: int, width: int, apex: tuple[float, float], direction: tuple[float, float], confidence: float):
    """Membership mask and intensity of one cone.

    Intensity is ``confidence`` at the apex and falls linearly to
    ``0.2 * confidence`` where the ray through the pixel meets the border.
    """
    ax, ay = apex
    ux, uy = direction
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    dx, dy = xs - ax, ys - ay
    dist = np.hypot(dx, dy)
    safe = np.where(dist > 0, dist, 1.0)
    cosang = (dx * ux + dy * uy) / safe
    mask = (cosang >= math.cos(CONE_HALF_ANGLE) - 1e-12) | (dist == 0)

    rx, ry = dx / safe, dy / safe
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(rx > 0, (width - 1 - ax) / rx, np.where(rx < 0, -ax / rx, np.inf))
        ty = np.where(ry > 0, (height - 1 - ay) / ry, np.where(ry < 0, -ay / ry, np.inf))
    reach = np.minimum(tx, ty)
    frac = np.where(reach > 0, np.clip(dist / np.where(reach > 0, reach, 1.0), 0.0, 1.0), 0.0)
    intensity = confidence * (1.0 - (1.0 - CONE_BORDER_FALLOFF) * frac)
    return mask, intensity


def cone_gray(height: int, width: int, faces: Sequence[FaceDetection]) -> np.ndarray:
    canvas = np.zeros((height, width))
    valid = [f for f in faces if _valid(f)]
    # smallest bbox is taken as furthest from the lens and drawn first
    order = sorted(range(len(valid)), key=lambda i: valid[i].area)
    drawn = 0
    for i in order:
        face = valid[i]
        direction = gaze_direction(face.gaze[0], face.gaze[1])
        if direction is None:
            continue
        mask, intensity = cone_layer(height, width, face.centroid, direction, face.gaze[2])
        alpha = FURTHEST_ALPHA if drawn == 0 else NEARER_ALPHA
        canvas[mask] = (1.0 - alpha) * canvas[mask] + alpha * intensity[mask]
        drawn += 1
    return minmax(canvas)


def gf_gray(height: int, width: int, faces: Sequence[FaceDetection]) -> np.ndarray:
    maps = [resize_bilinear(f.gaze_target_heatmap, height, width) for f in faces if f.gaze_target_heatmap is not None]
    if not maps:
        return np.zeros((height, width))
    return minmax(np.mean(maps, axis=0))


def fer_gray(height: int, width: int, faces: Sequence[FaceDetection]) -> np.ndarray:
    canvas = np.zeros((height, width))
    for face in faces:
        if not _valid(face):
            continue
        cx, cy = face.centroid
        bw = max(1, int(round(face.bbox[2])))
        bh = max(1, int(round(face.bbox[3])))
        patch = resize_bilinear(face.expression_grid, bh, bw) * hanning2d(bh, bw)
        top = int(round(cy - bh / 2.0))
        left = int(round(cx - bw / 2.0))
        r0, c0 = max(top, 0), max(left, 0)
        r1, c1 = min(top + bh, height), min(left + bw, width)
        if r1 <= r0 or c1 <= c0:
            continue
        canvas[r0:r1, c0:c1] += patch[r0 - top : r1 - top, c0 - left : c1 - left]
    return minmax(canvas)


def render_cone_map(height: int, width: int, faces: Sequence[FaceDetection]) -> np.ndarray:
    return jet_colormap(cone_gray(height, width, faces))


def render_gf_map(height: int, width: int, faces: Sequence[FaceDetection]) -> np.ndarray:
    return jet_colormap(gf_gray(height, width, faces))


def render_fer_map(height: int, width: int, faces: Sequence[FaceDetection]) -> np.ndarray:
    return jet_colormap(fer_gray(height, width, faces))
