"""Gate statistics and checkpoint I/O for trained networks."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import gtf, no_grad
from .gasp import GASP, model_from_description

MODALITY_NAMES = ("IMG", "SP", "GF", "GE", "FER")


class UnsupportedVariant(ValueError):
    pass


@dataclass
class GateReport:
    names: tuple[str, ...]
    raw: np.ndarray  # mean gate activation per modality (or channel group)
    n_calls: int

    @property
    def shares(self) -> np.ndarray:
        total = self.raw.sum()
        if total == 0:
            return np.full(len(self.raw), 1.0 / len(self.raw))
        return self.raw / total

    def rows(self) -> list[dict]:
        return [
            {"modality": n, "mean_gate": float(r), "share": float(s)}
            for n, r, s in zip(self.names, self.raw, self.shares)
        ]


def gate_report(model: GASP, batches) -> GateReport:
    """Average gate activations over channels, positions, steps and batches.

    Late-gating variants gate channel groups of the fused features, so their
    entries are named by group rather than by modality.
    """
    if not model.gated:
        raise UnsupportedVariant(f"variant {model.variant!r} has no gates to report")
    was_training = model.training
    model.eval()
    model.record_gates(True)
    try:
        with no_grad():
            for batch in batches:
                model(batch)
        log = list(model.gmu.gate_log)
    finally:
        model.record_gates(False)
        model.train(was_training)
    if not log:
        raise ValueError("gate_report needs at least one batch")
    names = MODALITY_NAMES if model.variant not in ("lagmu", "largmu") else tuple(f"group{i + 1}" for i in range(model.gmu.m))
    return GateReport(names, np.mean(log, axis=0), len(log))


MANIFEST = "manifest.json"


def save_checkpoint(model: GASP, directory: str | Path, extra: dict | None = None) -> Path:
    """Write every parameter and buffer as a GTF file plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {}
    for i, (name, arr) in enumerate(sorted(model.state_dict().items())):
        fname = f"{i:04d}_{name}.gtf"
        gtf.save(directory / fname, arr)
        files[name] = fname
    manifest = {"model": model.describe(), "tensors": files, **(extra or {})}
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return directory


def load_checkpoint(directory: str | Path) -> tuple[GASP, dict]:
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST).read_text())
    model = model_from_description(manifest["model"])
    state = {name: gtf.load(directory / fname) for name, fname in manifest["tensors"].items()}
    model.load_state_dict(state)
    return model, manifest
