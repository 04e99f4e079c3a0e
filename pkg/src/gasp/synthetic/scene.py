"""Procedural scene scripts: actors, trajectories, gaze and expression schedules.

Coordinates are image pixels with x = column and y = row. Pixel constants
are defined at the 120 x 120 reference resolution and scaled linearly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .rng import stream

REFERENCE_SIZE = 120


@dataclass(frozen=True)
class Preset:
    name: str
    size: int = 24
    frames: int = 24
    scenes: int = 40
    min_actors: int = 1
    max_actors: int = 3
    moving: bool = True
    two_gazers: bool = False


PRESETS = {
    "tiny": Preset("tiny"),
    "full": Preset("full", size=120, frames=48, scenes=40),
    "single-static": Preset("single-static", min_actors=1, max_actors=1, moving=False),
    "two-gazers": Preset("two-gazers", min_actors=2, max_actors=2, two_gazers=True),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass
class SceneScript:
    """Per-actor schedules, each with a leading (actor, frame) shape.

    ``bboxes`` (A, T, 4) as x, y, w, h; ``gaze`` (A, T, 3) as azimuth,
    pitch, confidence; ``targets`` (A, T, 2) gaze target x, y;
    ``target_actor`` (A, T) index of the actor looked at, or -1;
    ``expression`` (A, T) intensity in [0, 1]; ``colors`` (A, 3).
    """

    seed: int
    preset: str
    size: int
    frames: int
    bboxes: np.ndarray
    gaze: np.ndarray
    targets: np.ndarray
    target_actor: np.ndarray
    expression: np.ndarray
    colors: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_actors(self) -> int:
        return self.bboxes.shape[0]

    def centroids(self, t: int) -> np.ndarray:
        b = self.bboxes[:, t]
        return np.stack([b[:, 0] + b[:, 2] / 2, b[:, 1] + b[:, 3] / 2], axis=1)

    def to_json(self) -> dict:
        out = {"seed": self.seed, "preset": self.preset, "size": self.size, "frames": self.frames, "meta": self.meta}
        for key in ("bboxes", "gaze", "targets", "target_actor", "expression", "colors"):
            out[key] = getattr(self, key).tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SceneScript":
        arrays = {k: np.asarray(obj[k], dtype=np.float64) for k in ("bboxes", "gaze", "targets", "expression", "colors")}
        return cls(
            seed=obj["seed"],
            preset=obj["preset"],
            size=obj["size"],
            frames=obj["frames"],
            target_actor=np.asarray(obj["target_actor"], dtype=np.int64),
            meta=obj.get("meta", {}),
            **arrays,
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "SceneScript":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def gaze_angles(dx: float, dy: float) -> tuple[float, float]:
    """Azimuth and pitch whose image-plane projection points along (dx, dy)."""
    azimuth = 0.0 if dx >= 0 else math.pi
    return azimuth, math.atan2(dy, abs(dx))


def _trajectory(rng: np.random.Generator, frames: int, lo: float, hi: float, moving: bool) -> np.ndarray:
    start = rng.uniform(lo, hi, size=2)
    if not moving:
        return np.tile(start, (frames, 1))
    n_knots = max(2, frames // 8 + 1)
    ts = np.linspace(0, frames - 1, n_knots)
    knots = [start]
    for _ in range(n_knots - 1):
        step = rng.normal(0.0, 0.12 * (hi - lo), size=2)
        knots.append(np.clip(knots[-1] + step, lo, hi))
    path = CubicSpline(ts, np.array(knots), bc_type="natural")(np.arange(frames))
    return np.clip(path, lo, hi)


def _segments(rng: np.random.Generator, frames: int, lo: int, hi: int) -> list[tuple[int, int]]:
    out, t = [], 0
    while t < frames:
        n = int(rng.integers(lo, hi + 1))
        out.append((t, min(frames, t + n)))
        t += n
    return out


def _expression(rng: np.random.Generator, frames: int) -> np.ndarray:
    t = np.arange(frames)
    level = np.full(frames, rng.uniform(0.0, 0.15))
    for _ in range(int(rng.poisson(max(1.0, frames / 16)))):
        centre = rng.uniform(0, frames)
        width = rng.uniform(2.0, 6.0)
        level += rng.uniform(0.5, 1.0) * np.exp(-0.5 * ((t - centre) / width) ** 2)
    return np.clip(level, 0.0, 1.0)


def generate_scene(seed: int, preset: str | Preset = "tiny") -> SceneScript:
    """Deterministic scene script for ``seed`` under the given preset."""
    p = get_preset(preset) if isinstance(preset, str) else preset
    rng = stream(seed, "scene")
    s, frames = p.size, p.frames
    n = int(rng.integers(p.min_actors, p.max_actors + 1))

    face = np.array([max(3.0, rng.uniform(0.17, 0.25) * s) for _ in range(n)])
    bboxes = np.zeros((n, frames, 4))
    for a in range(n):
        lo, hi = face[a] / 2 + 1, s - face[a] / 2 - 1
        centre = _trajectory(rng, frames, lo, hi, p.moving)
        bboxes[a, :, 0] = centre[:, 0] - face[a] / 2
        bboxes[a, :, 1] = centre[:, 1] - face[a] / 2
        bboxes[a, :, 2] = face[a]
        bboxes[a, :, 3] = face[a]
    centres = bboxes[:, :, :2] + bboxes[:, :, 2:] / 2

    target_actor = np.full((n, frames), -1, dtype=np.int64)
    targets = np.zeros((n, frames, 2))
    conf = np.zeros((n, frames))
    margin = 0.1 * s
    for a in range(n):
        for t0, t1 in _segments(rng, frames, 6, 14):
            others = [b for b in range(n) if b != a]
            c = rng.uniform(0.7, 1.0)
            if others and rng.uniform() < 0.6:
                b = others[int(rng.integers(len(others)))]
                target_actor[a, t0:t1] = b
                targets[a, t0:t1] = centres[b, t0:t1]
            else:
                # an off-actor point at least a face width away from the gazer
                for _ in range(20):
                    pt = rng.uniform(margin, s - margin, size=2)
                    if np.linalg.norm(pt - centres[a, t0]) > 1.5 * face[a]:
                        break
                targets[a, t0:t1] = pt
            conf[a, t0:t1] = c

    if p.two_gazers:
        # actor 0 looks at actor 1 during the second and fourth quarters
        for q0, q1 in ((frames // 4, frames // 2), (3 * frames // 4, frames)):
            target_actor[0, q0:q1] = 1
            targets[0, q0:q1] = centres[1, q0:q1]

    gaze = np.zeros((n, frames, 3))
    for a in range(n):
        for t in range(frames):
            d = targets[a, t] - centres[a, t]
            if np.hypot(*d) < 1e-9:
                d = np.array([1.0, 0.0])
            gaze[a, t, :2] = gaze_angles(d[0], d[1])
            gaze[a, t, 2] = conf[a, t]

    expression = np.stack([_expression(rng, frames) for _ in range(n)])
    colors = rng.uniform(0.2, 0.9, size=(n, 3))
    return SceneScript(seed, p.name, s, frames, bboxes, gaze, targets, target_actor, expression, colors)
