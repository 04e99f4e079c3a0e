"""Assemble scenes into standardised modality stacks and read/write them on disk.

On disk a dataset is a directory with ``manifest.json`` and one folder per
scene holding ``script.json``, ``detections.jsonl``, ``frames.gtf``,
``fdm.gtf``, ``stack.gtf`` and ``fixations.csv`` (frame,row,col,observer).
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..core import gtf
from ..cues import (
    DetectionRecord,
    ModalityClip,
    read_jsonl,
    render_cone_map,
    render_fer_map,
    render_gf_map,
    standardize_clip,
    window_sequence,
    write_jsonl,
)
from .observers import FixationFrame, ObserverModel, emit_detections, emit_sp_clip, render_frame, simulate_fixations
from .rng import stream
from .scene import SceneScript, generate_scene, get_preset

STACK_ORDER = ("IMG", "SP", "GF", "GE", "FER")
SOCIAL = ("GF", "GE", "FER")
TRAIN_FRACTION = 0.8


@dataclass
class SceneData:
    seed: int
    split: str
    script: SceneScript
    records: list[DetectionRecord]
    frames: np.ndarray  # T x 3 x S x S
    fixations: list[FixationFrame]
    stack: np.ndarray  # T x 15 x S x S, standardised per modality clip
    degenerate: tuple[str, ...] = ()

    @property
    def fdm(self) -> np.ndarray:
        return np.stack([f.fdm for f in self.fixations])


def modality_clips(script: SceneScript, records, frames: np.ndarray, fixations, sp_quality: float, windows: bool = True) -> dict[str, ModalityClip]:
    s = script.size
    raw = {
        "IMG": frames,
        "SP": emit_sp_clip(script, fixations, sp_quality).frames,
        "GF": np.stack([render_gf_map(s, s, r.faces) for r in records]),
        "GE": np.stack([render_cone_map(s, s, r.faces) for r in records]),
        "FER": np.stack([render_fer_map(s, s, r.faces) for r in records]),
    }
    clips = {}
    for name, arr in raw.items():
        if windows and name != "IMG":
            arr = arr[window_sequence(name, list(range(len(arr))))]
        clips[name] = ModalityClip(name, arr)
    return clips


def build_scene(seed: int, preset: str, split: str, obs: ObserverModel, sp_quality: float, windows: bool = True) -> SceneData:
    script = generate_scene(seed, preset)
    records = emit_detections(script)
    fixations = simulate_fixations(script, obs)
    frames = np.stack([render_frame(script, t) for t in range(script.frames)])
    clips = {k: standardize_clip(c) for k, c in modality_clips(script, records, frames, fixations, sp_quality, windows).items()}
    stack = np.concatenate([clips[m].frames for m in STACK_ORDER], axis=1)
    degenerate = tuple(m for m in STACK_ORDER if clips[m].degenerate)
    return SceneData(seed, split, script, records, frames, fixations, stack, degenerate)


@dataclass
class Dataset:
    preset: str
    seed: int
    sp_quality: float
    observer: ObserverModel
    scenes: list[SceneData]

    def split(self, name: str) -> list[SceneData]:
        return [s for s in self.scenes if s.split == name]

    @property
    def size(self) -> int:
        return self.scenes[0].script.size

    def manifest(self) -> dict:
        return {
            "preset": self.preset,
            "seed": self.seed,
            "sp_quality": self.sp_quality,
            "observer": asdict(self.observer),
            "scenes": [{"seed": s.seed, "split": s.split, "dir": f"scene_{i:03d}"} for i, s in enumerate(self.scenes)],
        }


def scene_seeds(seed: int, n: int) -> list[int]:
    rng = stream(seed, "scene-seeds")
    return [int(v) for v in rng.integers(0, 2**31 - 1, size=n)]


def build_dataset(
    seed: int = 0,
    preset: str = "tiny",
    sp_quality: float = 0.4,
    observer: ObserverModel = ObserverModel(),
    n_scenes: int | None = None,
    windows: bool = True,
) -> Dataset:
    """Generate every scene of a preset; the first 80% of scenes train, the rest test."""
    p = get_preset(preset)
    n = p.scenes if n_scenes is None else n_scenes
    n_train = max(1, int(round(TRAIN_FRACTION * n))) if n > 1 else 1
    scenes = [
        build_scene(s, preset, "train" if i < n_train else "test", observer, sp_quality, windows)
        for i, s in enumerate(scene_seeds(seed, n))
    ]
    return Dataset(preset, seed, sp_quality, observer, scenes)


def write_fixations_csv(path: Path, fixations: list[FixationFrame]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "row", "col", "observer"])
        for f in fixations:
            for o, (r, c) in enumerate(f.points):
                w.writerow([f.frame, int(r), int(c), o])


def read_fixations_csv(path: Path) -> dict[int, np.ndarray]:
    out: dict[int, list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(int(row["frame"]), []).append((int(row["observer"]), int(row["row"]), int(row["col"])))
    return {t: np.array([(r, c) for _, r, c in sorted(v)], dtype=np.int64) for t, v in out.items()}


def save_dataset(ds: Dataset, out: str | Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = ds.manifest()
    for entry, scene in zip(manifest["scenes"], ds.scenes):
        d = out / entry["dir"]
        d.mkdir(exist_ok=True)
        scene.script.save(d / "script.json")
        write_jsonl(d / "detections.jsonl", scene.records)
        gtf.save(d / "frames.gtf", scene.frames)
        gtf.save(d / "fdm.gtf", scene.fdm)
        gtf.save(d / "stack.gtf", scene.stack)
        write_fixations_csv(d / "fixations.csv", scene.fixations)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return out


def load_dataset(path: str | Path) -> Dataset:
    """Read a dataset written by :func:`save_dataset` (tensors come back from float32)."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    scenes = []
    for entry in manifest["scenes"]:
        d = path / entry["dir"]
        fdm = gtf.load(d / "fdm.gtf")
        points = read_fixations_csv(d / "fixations.csv")
        fixations = [FixationFrame(t, points.get(t, np.zeros((0, 2), dtype=np.int64)), fdm[t]) for t in range(len(fdm))]
        scenes.append(
            SceneData(
                entry["seed"],
                entry["split"],
                SceneScript.load(d / "script.json"),
                read_jsonl(d / "detections.jsonl"),
                gtf.load(d / "frames.gtf"),
                fixations,
                gtf.load(d / "stack.gtf"),
            )
        )
    return Dataset(manifest["preset"], manifest["seed"], manifest["sp_quality"], ObserverModel(**manifest["observer"]), scenes)
