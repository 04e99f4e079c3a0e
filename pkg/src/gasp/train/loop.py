"""Training, evaluation, ablation and gate-contribution runs."""
from __future__ import annotations

import hashlib
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..core import Adam, NumericError, no_grad, softmax_spatial
from ..model import GASP, GateReport, build_model, gate_report
from ..objectives import METRICS, all_metrics, fixation_counts, loss_dam, loss_total
from ..synthetic import SOCIAL, STACK_ORDER, Dataset, SceneData, build_dataset, load_dataset, stream
from .config import TrainConfig

log = logging.getLogger(__name__)

N_NEGATIVES = 100
EVAL_BATCH = 16


class TrainingAborted(RuntimeError):
    def __init__(self, step: int, component: str, detail: str):
        super().__init__(f"non-finite value at step {step} in {component}: {detail}")
        self.step = step
        self.component = component


def get_dataset(cfg: TrainConfig) -> Dataset:
    if cfg.data:
        return load_dataset(cfg.data)
    return build_dataset(cfg.data_seed, cfg.preset, cfg.sp_quality)


def modality_mask(ablate) -> np.ndarray:
    """Per-channel multiplier over the 15 stacked channels; masked modalities become zeros."""
    keep = np.ones(len(STACK_ORDER) * 3)
    for name in ablate:
        i = STACK_ORDER.index(name)
        keep[3 * i : 3 * i + 3] = 0.0
    return keep


def window(scene: SceneData, end: int, context: int) -> np.ndarray:
    return scene.stack[end - context + 1 : end + 1]


@dataclass
class Batch:
    x: np.ndarray  # B x T x 15 x S x S
    fdm: np.ndarray  # B x S x S, last frame
    counts: np.ndarray  # B x S x S
    fdm_seq: list[np.ndarray]  # T entries of B x S x S


def make_batch(items: list[tuple[SceneData, int]], context: int, mask: np.ndarray) -> Batch:
    size = items[0][0].stack.shape[-1]
    x = np.stack([window(s, t, context) for s, t in items]) * mask[None, None, :, None, None]
    fdm = np.stack([s.fixations[t].fdm for s, t in items])
    counts = fixation_counts([s.fixations[t].points for s, t in items], (size, size))
    seq = [np.stack([s.fixations[t - context + 1 + k].fdm for s, t in items]) for k in range(context)]
    return Batch(x, fdm, counts, seq)


def sample_batch(rng: np.random.Generator, scenes: list[SceneData], cfg: TrainConfig, mask: np.ndarray) -> Batch:
    items = []
    for _ in range(cfg.batch_size):
        s = scenes[int(rng.integers(len(scenes)))]
        items.append((s, int(rng.integers(cfg.context - 1, s.stack.shape[0]))))
    return make_batch(items, cfg.context, mask)


def checksum(arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()


@dataclass
class TrainResult:
    config: TrainConfig
    model: GASP
    losses: list[dict] = field(default_factory=list)
    seconds: float = 0.0


StepHook = Callable[[str, int, GASP], None]


def _overlap_check(step: int, model: GASP, main, dam) -> None:
    """Backpropagate the two objectives separately and confirm they touch disjoint weights."""
    model.zero_grad()
    main.backward()
    from_main = {p.name for p in model.parameters() if p.grad is not None and np.any(p.grad)}
    model.zero_grad()
    dam.backward()
    from_dam = {p.name for p in model.parameters() if p.grad is not None and np.any(p.grad)}
    direct = {p.name for p in model.dam.direct.parameters()}
    if from_main & from_dam or (from_main | from_dam) & direct:
        raise AssertionError(f"step {step}: gradient overlap {sorted((from_main & from_dam) | ((from_main | from_dam) & direct))[:4]}")
    model.zero_grad()


def train(cfg: TrainConfig, dataset: Dataset | None = None, hook: StepHook | None = None) -> TrainResult:
    """Optimise one model; deterministic given the config and dataset.

    ``hook(event, step, model)`` is called with events ``"backward"``,
    ``"update"`` and ``"sync"`` so callers can audit weights per step.
    """
    dataset = dataset or get_dataset(cfg)
    scenes = dataset.split("train")
    model = build_model(cfg.variant, cfg.context, cfg.dam, cfg.model_widths, cfg.seed)
    model.train()
    opt = Adam(model.trainable_parameters(), lr=cfg.lr)
    rng = stream(cfg.seed, "batches")
    mask = modality_mask(cfg.ablate)
    result = TrainResult(cfg, model)
    start = time.perf_counter()
    for step in range(cfg.iterations):
        batch = sample_batch(rng, scenes, cfg, mask)
        opt.zero_grad()
        component = "forward"
        try:
            out = model(batch.x)
            component = "loss_total"
            main, info = loss_total(out.logits, batch.fdm, batch.counts)
            total = main
            if cfg.dam:
                component = "loss_dam"
                dam = loss_dam(out.dam_preds, batch.fdm_seq)
                info["dam"] = dam.item()
                total = main + dam
            component = "backward"
            if cfg.debug and cfg.dam:
                _overlap_check(step, model, main, dam)
            total.backward()
        except NumericError as exc:
            raise TrainingAborted(step, component, str(exc)) from exc
        for p in opt.params:
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                raise TrainingAborted(step, p.name, "non-finite gradient")
        if hook:
            hook("backward", step, model)
        opt.step()
        if hook:
            hook("update", step, model)
        if cfg.dam and (cfg.tie_mode == "step" or (step + 1) % cfg.phase_length == 0 or step + 1 == cfg.iterations):
            model.tie_sync()
            if hook:
                hook("sync", step, model)
        info["step"] = step
        info["total"] = total.item()
        info.pop("nss_skipped", None)
        result.losses.append(info)
        if cfg.log_every and (step % cfg.log_every == 0 or step + 1 == cfg.iterations):
            log.info("%s seed %d step %d loss %.4f", cfg.label, cfg.seed, step, info["total"])
    result.seconds = time.perf_counter() - start
    return result


# -- evaluation ---------------------------------------------------------------------------

def negative_pool(scenes: list[SceneData], exclude: int) -> np.ndarray:
    pts = [f.points for i, s in enumerate(scenes) if i != exclude for f in s.fixations]
    return np.concatenate(pts) if pts else np.zeros((0, 2), dtype=np.int64)


def evaluate_predictor(predict, scenes: list[SceneData], context: int = 1, seed: int = 0) -> list[dict]:
    """Score ``predict(scene, frames) -> (N, S, S)`` maps on every frame with a full context.

    sAUC negatives come from the other scenes' fixations: 100 per frame,
    drawn by a seeded shuffle.
    """
    rows = []
    for si, scene in enumerate(scenes):
        pool = negative_pool(scenes, si)
        if len(pool) == 0:
            pool = np.concatenate([f.points for f in scene.fixations])
        frames = list(range(context - 1, scene.stack.shape[0]))
        for chunk in range(0, len(frames), EVAL_BATCH):
            ts = frames[chunk : chunk + EVAL_BATCH]
            maps = predict(scene, ts)
            for t, pred in zip(ts, maps):
                fx = scene.fixations[t]
                pick = stream(seed, "sauc", si, t).permutation(len(pool))[:N_NEGATIVES]
                m = all_metrics(pred, fx.fdm, fx.points, pool[pick])
                rows.append({"scene": scene.seed, "frame": t, **m})
    return rows


def model_predictor(model: GASP, mask: np.ndarray):
    def predict(scene: SceneData, ts: list[int]) -> np.ndarray:
        x = np.stack([window(scene, t, model.context) for t in ts]) * mask[None, None, :, None, None]
        with no_grad():
            return softmax_spatial(model(x).logits).data[:, 0]

    return predict


def evaluate(model: GASP, dataset: Dataset, split: str = "test", ablate=(), seed: int = 0) -> list[dict]:
    was = model.training
    model.eval()
    try:
        return evaluate_predictor(model_predictor(model, modality_mask(ablate)), dataset.split(split), model.context, seed)
    finally:
        model.train(was)


def summarize(rows: list[dict]) -> dict[str, float]:
    return {m: float(np.mean([r[m] for r in rows])) for m in METRICS}


# -- multi-trial reports ---------------------------------------------------------------------

@dataclass
class RunReport:
    config: TrainConfig
    trials: list[dict]  # per-trial metric means plus seed
    losses: list[list[dict]]
    gates: GateReport | None
    seconds: float

    @property
    def mean(self) -> dict[str, float]:
        return {m: float(np.mean([t[m] for t in self.trials])) for m in METRICS}

    @property
    def std(self) -> dict[str, float] | None:
        if len(self.trials) < 2:
            return None
        return {m: float(np.std([t[m] for t in self.trials], ddof=1)) for m in METRICS}

    def metric_rows(self) -> list[dict]:
        return [{"model": self.config.label, "context": self.config.context, **{m: t[m] for m in METRICS}, "seed": t["seed"]} for t in self.trials]

    def summary(self) -> dict:
        return {
            "model": self.config.label,
            "context": self.config.context,
            "ablate": list(self.config.ablate),
            "trials": len(self.trials),
            "mean": self.mean,
            "std": self.std,
            "seconds": round(self.seconds, 3),
            "gates": None if self.gates is None else self.gates.rows(),
        }


def gate_batches(model: GASP, dataset: Dataset, ablate=(), limit: int = 4) -> list[np.ndarray]:
    mask = modality_mask(ablate)
    out = []
    for scene in dataset.split("test")[:limit]:
        ts = list(range(model.context - 1, scene.stack.shape[0]))[:EVAL_BATCH]
        out.append(np.stack([window(scene, t, model.context) for t in ts]) * mask[None, None, :, None, None])
    return out


def run_trials(cfg: TrainConfig, trials: int = 1, dataset: Dataset | None = None) -> tuple[RunReport, list[TrainResult]]:
    """Train and evaluate ``trials`` models with seeds ``cfg.seed, cfg.seed + 1, ...``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dataset = dataset or get_dataset(cfg)
    results, rows = [], []
    start = time.perf_counter()
    for k in range(trials):
        res = train(cfg.with_overrides(seed=cfg.seed + k), dataset)
        results.append(res)
        rows.append({**summarize(evaluate(res.model, dataset, ablate=cfg.ablate)), "seed": cfg.seed + k})
    gates = None
    if results[0].model.gated:
        gates = gate_report(results[0].model, gate_batches(results[0].model, dataset, cfg.ablate))
    report = RunReport(cfg, rows, [r.losses for r in results], gates, time.perf_counter() - start)
    return report, results


def ablation_masks() -> list[tuple[str, ...]]:
    """All 2**3 subsets of the social modalities, from none masked to all masked."""
    return [tuple(m for m, off in zip(SOCIAL, bits) if off) for bits in itertools.product((0, 1), repeat=len(SOCIAL))]


def ablate(cfg: TrainConfig, trials: int = 1, dataset: Dataset | None = None, masks=None) -> list[dict]:
    """One row per mask: presence flags for GE, GF, FER plus mean (and std) metrics."""
    dataset = dataset or get_dataset(cfg)
    rows = []
    for mask in masks if masks is not None else ablation_masks():
        report, _ = run_trials(cfg.with_overrides(ablate=mask), trials, dataset)
        row = {m: int(m not in mask) for m in ("GE", "GF", "FER")}
        row.update(report.mean)
        if report.std:
            row.update({f"{m}_std": v for m, v in report.std.items()})
        rows.append(row)
    return rows


def contribution(model: GASP, dataset: Dataset, ablate=()) -> GateReport:
    return gate_report(model, gate_batches(model, dataset, ablate))
