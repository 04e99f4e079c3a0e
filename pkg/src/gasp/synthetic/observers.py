"""Simulated observers and the detection records a cue detector would emit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, shift as nd_shift

from ..cues import DetectionRecord, FaceDetection, ModalityClip, jet_colormap, minmax
from .rng import stream
from .scene import REFERENCE_SIZE, SceneScript

TARGET_SIGMA_REF = 6.0  # gaze-target heatmap spread, px at 120 x 120
FDM_SIGMA_REF = 4.0  # fixation map blur, px at 120 x 120
GRID_SIZE = 7
SP_BLUR_REF = 8.0  # corruption blur at quality 0, px at 120 x 120


def _scale(script: SceneScript) -> float:
    return script.size / REFERENCE_SIZE


def gaussian_map(size: int, centre, sigma: float) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    return np.exp(-0.5 * ((xs - centre[0]) ** 2 + (ys - centre[1]) ** 2) / sigma**2)


def expression_grid(intensity: float) -> np.ndarray:
    r = np.linspace(-1.0, 1.0, GRID_SIZE)
    bump = np.exp(-2.0 * (r[:, None] ** 2 + r[None, :] ** 2))
    return intensity * bump


def emit_detections(script: SceneScript, noise: float = 0.0, seed: int | None = None) -> list[DetectionRecord]:
    """Per-frame records; ``noise`` is an additive std on bboxes (px) and gaze angles (rad)."""
    sigma_t = TARGET_SIGMA_REF * _scale(script)
    seed = script.seed if seed is None else seed
    records = []
    for t in range(script.frames):
        rng = stream(seed, "detections", t) if noise > 0 else None
        faces = []
        for a in range(script.n_actors):
            bbox = script.bboxes[a, t].copy()
            gaze = script.gaze[a, t].copy()
            if rng is not None:
                bbox[:2] += rng.normal(0.0, noise, size=2)
                gaze[:2] += rng.normal(0.0, noise, size=2)
            heat = gaussian_map(script.size, script.targets[a, t], sigma_t)
            faces.append(
                FaceDetection(tuple(float(v) for v in bbox), tuple(float(v) for v in gaze), expression_grid(script.expression[a, t]), heat)
            )
        records.append(DetectionRecord(t, faces))
    return records


@dataclass(frozen=True)
class ObserverModel:
    n_observers: int = 12
    w_face: float = 0.4
    w_gazetarget: float = 0.4
    w_expression: float = 0.2
    attraction_sigma_ref: float = 3.0  # px at 120 x 120
    noise_sigma_ref: float = 1.0
    fdm_sigma_ref: float = FDM_SIGMA_REF

    def __post_init__(self):
        w = (self.w_face, self.w_gazetarget, self.w_expression)
        if min(w) < 0 or sum(w) == 0:
            raise ValueError("observer weights must be nonnegative and not all zero")
        if self.n_observers < 1:
            raise ValueError("need at least one observer")


def attraction_mixture(script: SceneScript, t: int, obs: ObserverModel) -> tuple[np.ndarray, np.ndarray]:
    """Mixture centres (K, 2) as x, y and normalised weights (K,) for frame ``t``."""
    centres = script.centroids(t)
    n = script.n_actors
    pts, weights = [], []
    for a in range(n):
        pts.append(centres[a])
        weights.append(obs.w_face / n + obs.w_expression * script.expression[a, t] / n)
        pts.append(script.targets[a, t])
        weights.append(obs.w_gazetarget * script.gaze[a, t, 2] / n)
    weights = np.asarray(weights)
    if weights.sum() <= 0:
        return np.array([[script.size / 2, script.size / 2]]), np.ones(1)
    return np.asarray(pts), weights / weights.sum()


@dataclass
class FixationFrame:
    frame: int
    points: np.ndarray  # (N, 2) row, col
    fdm: np.ndarray


def fixation_map(points: np.ndarray, size: int, sigma: float) -> np.ndarray:
    hist = np.zeros((size, size))
    np.add.at(hist, (points[:, 0], points[:, 1]), 1.0)
    fdm = gaussian_filter(hist, sigma, mode="constant") if sigma > 0 else hist
    return fdm / fdm.sum()


def simulate_fixations(script: SceneScript, obs: ObserverModel = ObserverModel()) -> list[FixationFrame]:
    k = _scale(script)
    spread = np.hypot(obs.attraction_sigma_ref, obs.noise_sigma_ref) * k
    out = []
    for t in range(script.frames):
        centres, weights = attraction_mixture(script, t, obs)
        pts = np.zeros((obs.n_observers, 2), dtype=np.int64)
        for o in range(obs.n_observers):
            rng = stream(script.seed, "fixation", t, o)
            c = centres[rng.choice(len(weights), p=weights)]
            x, y = c + rng.normal(0.0, spread, size=2)
            pts[o] = (min(max(int(round(y)), 0), script.size - 1), min(max(int(round(x)), 0), script.size - 1))
        out.append(FixationFrame(t, pts, fixation_map(pts, script.size, obs.fdm_sigma_ref * k)))
    return out


def sp_gray(fdm: np.ndarray, quality: float, rng: np.random.Generator, offset: np.ndarray) -> np.ndarray:
    """Corrupted saliency map; every corruption grows with ``1 - quality``.

    The map is shifted by ``(1 - q)**2 * offset`` (wrapping), blurred with
    ``(1 - q) * 8`` reference pixels and mixed with uniform noise of weight
    ``(1 - q) / 2``. Quality 1 returns the normalised map itself.
    """
    size = fdm.shape[0]
    bad = 1.0 - quality
    moved = nd_shift(minmax(fdm), bad**2 * offset, order=1, mode="wrap") if bad > 0 else minmax(fdm)
    sigma = bad * SP_BLUR_REF * size / REFERENCE_SIZE
    corrupted = minmax(gaussian_filter(moved, sigma, mode="wrap")) if sigma > 0 else moved
    return minmax(quality * corrupted + 0.5 * bad * rng.uniform(size=fdm.shape))


def emit_sp_clip(script: SceneScript, fixations: list[FixationFrame], quality: float, seed: int | None = None) -> ModalityClip:
    """Stand-in saliency-predictor clip whose fidelity to the fixation maps is ``quality``."""
    if not 0.0 <= quality <= 1.0:
        raise ValueError("quality must lie in [0, 1]")
    seed = script.seed if seed is None else seed
    # one displacement per scene of about half the frame, in a random direction
    angle = stream(seed, "sp-offset").uniform(0, 2 * np.pi)
    offset = 0.5 * script.size * np.array([np.sin(angle), np.cos(angle)])
    frames = [jet_colormap(sp_gray(f.fdm, quality, stream(seed, "sp", f.frame), offset)) for f in fixations]
    return ModalityClip("SP", np.stack(frames))


def render_frame(script: SceneScript, t: int) -> np.ndarray:
    """Flat-colour actors (body and face) on a smooth noise background, 3 x H x W."""
    s = script.size
    bg_rng = stream(script.seed, "background")
    img = gaussian_filter(bg_rng.uniform(0.0, 1.0, size=(3, s, s)), (0, 1.5 * s / 24, 1.5 * s / 24), mode="wrap")
    img = 0.3 + 0.4 * minmax(img)
    ys, xs = np.mgrid[0:s, 0:s].astype(np.float64)
    order = np.argsort(script.bboxes[:, t, 2], kind="stable")
    for a in order:
        x, y, w, h = script.bboxes[a, t]
        body = (xs >= x - 0.25 * w) & (xs <= x + 1.25 * w) & (ys >= y + h) & (ys <= y + 3.0 * h)
        img[:, body] = script.colors[a][:, None]
        cx, cy = x + w / 2, y + h / 2
        face = ((xs - cx) / (w / 2)) ** 2 + ((ys - cy) / (h / 2)) ** 2 <= 1.0
        img[:, face] = np.array([0.95, 0.8, 0.65])[:, None]
    return img
