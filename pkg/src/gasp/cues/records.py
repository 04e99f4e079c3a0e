"""Per-frame detection records and their JSON-lines form.

One JSON object per line::

    {"frame": 3,
     "faces": [{"bbox": [x, y, w, h],
                "gaze": [azimuth_rad, pitch_rad, confidence],
                "expression_grid": [[...], ...],
                "gaze_target_heatmap": [[...], ...] | null}]}

Floats are written with ``repr`` precision so records round-trip exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np


@dataclass
class FaceDetection:
    bbox: tuple[float, float, float, float]
    gaze: tuple[float, float, float]
    expression_grid: np.ndarray
    gaze_target_heatmap: np.ndarray | None = None

    def __post_init__(self):
        self.bbox = tuple(float(v) for v in self.bbox)
        self.gaze = tuple(float(v) for v in self.gaze)
        self.expression_grid = np.asarray(self.expression_grid, dtype=np.float64)
        if self.gaze_target_heatmap is not None:
            self.gaze_target_heatmap = np.asarray(self.gaze_target_heatmap, dtype=np.float64)

    @property
    def area(self) -> float:
        return self.bbox[2] * self.bbox[3]

    @property
    def centroid(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return x + w / 2.0, y + h / 2.0

    def to_json(self) -> dict:
        return {
            "bbox": list(self.bbox),
            "gaze": list(self.gaze),
            "expression_grid": self.expression_grid.tolist(),
            "gaze_target_heatmap": None if self.gaze_target_heatmap is None else self.gaze_target_heatmap.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FaceDetection":
        hm = obj.get("gaze_target_heatmap")
        return cls(
            bbox=tuple(obj["bbox"]),
            gaze=tuple(obj["gaze"]),
            expression_grid=np.asarray(obj["expression_grid"], dtype=np.float64),
            gaze_target_heatmap=None if hm is None else np.asarray(hm, dtype=np.float64),
        )


@dataclass
class DetectionRecord:
    frame: int
    faces: list[FaceDetection] = field(default_factory=list)

    def validate(self, height: int, width: int) -> list[str]:
        """Return a list of invariant violations (empty when valid)."""
        problems = []
        for i, f in enumerate(self.faces):
            x, y, w, h = f.bbox
            if x < 0 or y < 0 or x + w > width or y + h > height:
                problems.append(f"face {i}: bbox {f.bbox} outside {width}x{height} frame")
            if not 0.0 <= f.gaze[2] <= 1.0:
                problems.append(f"face {i}: confidence {f.gaze[2]} outside [0, 1]")
            if (f.expression_grid < 0).any():
                problems.append(f"face {i}: negative expression activations")
            if f.gaze_target_heatmap is not None and (f.gaze_target_heatmap < 0).any():
                problems.append(f"face {i}: negative gaze-target heatmap")
        return problems

    def to_json(self) -> dict:
        return {"frame": self.frame, "faces": [f.to_json() for f in self.faces]}

    @classmethod
    def from_json(cls, obj: dict) -> "DetectionRecord":
        return cls(frame=int(obj["frame"]), faces=[FaceDetection.from_json(f) for f in obj["faces"]])


def write_jsonl(path: str | Path, records: Iterable[DetectionRecord]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), separators=(",", ":")))
            fh.write("\n")


def read_jsonl(path: str | Path) -> list[DetectionRecord]:
    with open(path) as fh:
        return [DetectionRecord.from_json(json.loads(line)) for line in fh if line.strip()]
