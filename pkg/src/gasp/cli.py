"""Command-line entry point: ``gasp <command> [options]``.

Every command writes only below ``--out``. Exit status is 0 on success, 1 on
usage or configuration errors and 2 when training aborts on a non-finite
value (or a gradient check fails).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .cues import encode_ppm, jet_colormap, minmax, read_jsonl
from .model import SEQUENTIAL_VARIANTS, STATIC_VARIANTS, UnsupportedVariant, load_checkpoint, save_checkpoint
from .objectives import METRICS
from .synthetic import (
    PRESETS,
    ObserverModel,
    SceneScript,
    build_dataset,
    emit_detections,
    load_dataset,
    render_frame,
    save_dataset,
    simulate_fixations,
)
from .synthetic.dataset import STACK_ORDER, modality_clips
from .train import (
    ConfigError,
    TrainConfig,
    TrainingAborted,
    ablate,
    contribution,
    evaluate,
    get_dataset,
    load_config,
    run_trials,
    summarize,
)

log = logging.getLogger("gasp")

EXIT_OK, EXIT_USAGE, EXIT_ABORT = 0, 1, 2
METRIC_COLUMNS = ("model", "context", *METRICS, "seed")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def variants_help() -> str:
    return f"static variants: {', '.join(STATIC_VARIANTS)}; sequential variants: {', '.join(SEQUENTIAL_VARIANTS)} (prefix 'dam+' or pass --dam)"


# -- output helpers ------------------------------------------------------------------------

def write_csv(path: Path, rows: list[dict], columns=None) -> Path:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return path


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    return path


def render_overlay(frame: np.ndarray, prediction: np.ndarray, fdm: np.ndarray) -> bytes:
    """Side-by-side PPM panel: frame | jet(prediction) | jet(fixation density)."""
    panel = np.concatenate([np.clip(frame, 0, 1), jet_colormap(minmax(prediction)), jet_colormap(minmax(fdm))], axis=2)
    return encode_ppm(panel)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _figures(args) -> bool:
    return not getattr(args, "no_figures", False)


# -- config ----------------------------------------------------------------------------------

def _config(args) -> TrainConfig:
    variant = args.variant
    dam = args.dam
    if variant and variant.lower().startswith("dam+"):
        variant, dam = variant[4:], True if dam is None else dam
    ablate_ = tuple(p.strip().upper() for p in args.ablate.split(",") if p.strip()) if args.ablate is not None else None
    try:
        return load_config(
            args.config,
            variant=variant.lower() if variant else None,
            context=args.context,
            dam=dam,
            seed=args.seed,
            iterations=args.iterations,
            preset=args.preset,
            data=args.data,
            data_seed=args.data_seed,
            sp_quality=args.sp_quality,
            ablate=ablate_,
        )
    except ConfigError as exc:
        raise UsageError(f"{exc}\n{variants_help()}") from None
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {exc.filename}") from None


def _dataset_from(manifest: dict, args):
    data = args.data or manifest.get("data", "")
    if data:
        return load_dataset(data)
    return build_dataset(
        args.data_seed if args.data_seed is not None else manifest.get("data_seed", 0),
        args.preset or manifest.get("preset", "tiny"),
        args.sp_quality if args.sp_quality is not None else manifest.get("sp_quality", 0.4),
    )


def _data_extra(cfg: TrainConfig) -> dict:
    return {"data": cfg.data, "data_seed": cfg.data_seed, "preset": cfg.preset, "sp_quality": cfg.sp_quality, "ablate": list(cfg.ablate)}


# -- commands ----------------------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
    seed = args.seed if args.seed is not None else 0
    q = args.sp_quality if args.sp_quality is not None else 0.4
    ds = build_dataset(seed, args.preset, q, ObserverModel(), args.scenes)
    save_dataset(ds, args.out)
    print(f"wrote {len(ds.scenes)} scenes to {args.out}")
    return EXIT_OK


def cmd_render(args) -> int:
    path = Path(args.scene)
    if not path.exists():
        raise UsageError(f"scene file not found: {path}")
    script = SceneScript.load(path)
    if not 0 <= args.frame < script.frames:
        raise UsageError(f"--frame must lie in [0, {script.frames})")
    det_path = path.with_name("detections.jsonl")
    records = read_jsonl(det_path) if det_path.exists() else emit_detections(script)
    frames = np.stack([render_frame(script, t) for t in range(script.frames)])
    q = args.sp_quality if args.sp_quality is not None else 0.4
    clips = modality_clips(script, records, frames, simulate_fixations(script), q)
    out = _out(args)
    for name in STACK_ORDER:
        (out / f"{name}_{args.frame:04d}.ppm").write_bytes(encode_ppm(clips[name].frames[args.frame]))
    print(f"wrote {len(STACK_ORDER)} maps for frame {args.frame} to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _out(args)
    (out / "config.txt").write_text(cfg.to_text())
    report, results = run_trials(cfg, args.trials, get_dataset(cfg))
    for res in results:
        save_checkpoint(res.model, out / f"checkpoint_seed{res.config.seed}", _data_extra(cfg))
    loss_rows = [{"seed": r.config.seed, **row} for r in results for row in r.losses]
    write_csv(out / "losses.csv", loss_rows, ["seed", "step", "ce", "cc", "nss", "dam", "total"] if cfg.dam else ["seed", "step", "ce", "cc", "nss", "total"])
    write_csv(out / "metrics.csv", report.metric_rows(), METRIC_COLUMNS)
    summary = report.summary()
    seconds = summary.pop("seconds")  # wall-clock stays out of the artefacts so reruns are byte-identical
    write_json(out / "summary.json", summary)
    if _figures(args):
        from .plotting import plot_losses, plot_metrics

        plot_losses([r.losses for r in results], [f"seed {r.config.seed}" for r in results], out / "losses.png")
        plot_metrics(report.metric_rows(), out / "metrics.png")
    mean = report.mean
    print(f"{cfg.label} context {cfg.context}: " + " ".join(f"{m}={mean[m]:.4f}" for m in METRICS) + f" ({seconds:.1f}s)")
    return EXIT_OK


def cmd_eval(args) -> int:
    ckpt = Path(args.checkpoint)
    if not (ckpt / "manifest.json").exists():
        raise UsageError(f"no checkpoint manifest in {ckpt}")
    model, manifest = load_checkpoint(ckpt)
    dataset = _dataset_from(manifest, args)
    ablate_ = tuple(p.strip().upper() for p in args.ablate.split(",") if p.strip()) if args.ablate is not None else tuple(manifest.get("ablate", ()))
    rows = evaluate(model, dataset, "test", ablate_)
    out = _out(args)
    label = ("DAM+" if model.with_dam else "") + model.variant.upper()
    mean = summarize(rows)
    write_csv(out / "metrics.csv", [{"model": label, "context": model.context, **mean, "seed": model.seed}], METRIC_COLUMNS)
    write_csv(out / "frames.csv", rows, ["scene", "frame", *METRICS])
    write_json(out / "summary.json", {"model": label, "context": model.context, "ablate": list(ablate_), "frames": len(rows), "mean": mean})
    # overlay for the first scored frame of each test scene
    from .train.loop import model_predictor, modality_mask

    predict = model_predictor(model, modality_mask(ablate_))
    model.eval()
    for si, scene in enumerate(dataset.split("test")[: args.overlays]):
        t = model.context - 1
        pred = predict(scene, [t])[0]
        (out / f"overlay_{si:03d}.ppm").write_bytes(render_overlay(scene.frames[t], pred, scene.fdm[t]))
    print(f"{label}: " + " ".join(f"{m}={mean[m]:.4f}" for m in METRICS))
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _config(args)
    out = _out(args)
    rows = ablate(cfg, args.trials, get_dataset(cfg))
    cols = ["GE", "GF", "FER", *METRICS] + ([f"{m}_std" for m in METRICS] if args.trials > 1 else [])
    write_csv(out / "ablation.csv", rows, cols)
    if _figures(args):
        from .plotting import plot_ablation

        plot_ablation(rows, out / "ablation.png")
    for r in rows:
        print(f"GE={r['GE']} GF={r['GF']} FER={r['FER']} CC={r['CC']:.4f}")
    return EXIT_OK


def cmd_contrib(args) -> int:
    ckpt = Path(args.checkpoint)
    if not (ckpt / "manifest.json").exists():
        raise UsageError(f"no checkpoint manifest in {ckpt}")
    model, manifest = load_checkpoint(ckpt)
    dataset = _dataset_from(manifest, args)
    try:
        report = contribution(model, dataset, tuple(manifest.get("ablate", ())))
    except UnsupportedVariant as exc:
        raise UsageError(f"{exc}; gate contributions need a gated variant") from None
    out = _out(args)
    write_csv(out / "contribution.csv", report.rows(), ["modality", "mean_gate", "share"])
    if _figures(args):
        from .plotting import plot_contribution

        label = ("DAM+" if model.with_dam else "") + model.variant.upper()
        plot_contribution(report.names, report.shares, out / "contribution.png", label)
    for row in report.rows():
        print(f"{row['modality']}: share {row['share']:.4f}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .selfcheck import model_checks, op_checks

    checks = []
    if args.all or args.ops:
        checks += op_checks()
    if args.all or args.models:
        checks += model_checks(args.context or 4, args.size)
    if not checks:
        raise UsageError("gradcheck needs --all, --ops or --models")
    rows, failed = [], 0
    start = time.perf_counter()
    for c in checks:
        rep = c.run()
        failed += not rep.passed
        rows.append({"check": c.name, "passed": rep.passed, "max_rel_error": rep.max_rel_error, "tolerance": rep.tolerance, "checked": rep.n_checked, "worst": rep.worst})
        print(f"{c.name}: {rep}")
    if args.out:
        write_csv(_out(args) / "gradcheck.csv", rows)
    print(f"{len(checks) - failed}/{len(checks)} passed in {time.perf_counter() - start:.1f}s")
    return EXIT_OK if failed == 0 else EXIT_ABORT


# -- parser ------------------------------------------------------------------------------------

def _train_flags(p) -> None:
    p.add_argument("--config", help="key = value training config file")
    p.add_argument("--variant", help=variants_help())
    p.add_argument("--context", type=int)
    p.add_argument("--dam", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--ablate", help="comma-separated social modalities to zero, e.g. GE,GF")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    _data_flags(p)


def _data_flags(p) -> None:
    p.add_argument("--data", help="dataset directory written by gen-data")
    p.add_argument("--preset", help=f"synthetic preset when no --data: {', '.join(PRESETS)}")
    p.add_argument("--data-seed", type=int)
    p.add_argument("--sp-quality", type=float)


def build_parser() -> Parser:
    parser = Parser(prog="gasp", description="Social-cue saliency prediction on synthetic group scenes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=Parser)

    p = sub.add_parser("gen-data", help="generate and save a synthetic dataset")
    p.add_argument("--preset", default="tiny")
    p.add_argument("--seed", type=int)
    p.add_argument("--sp-quality", type=float)
    p.add_argument("--scenes", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("render", help="write the five modality maps of one frame as PPM")
    p.add_argument("--scene", required=True, help="scene script JSON")
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--sp-quality", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("train", help="train one or more seeds and evaluate on the test split")
    _train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--ablate")
    p.add_argument("--overlays", type=int, default=1, help="number of overlay panels to write")
    _data_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="train with every subset of GE, GF, FER masked")
    _train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("contrib", help="report mean gate activation per modality")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--no-figures", action="store_true")
    _data_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_contrib)

    p = sub.add_parser("gradcheck", help="finite-difference check of operators and networks")
    p.add_argument("--all", action="store_true")
    p.add_argument("--ops", action="store_true")
    p.add_argument("--models", action="store_true")
    p.add_argument("--context", type=int)
    p.add_argument("--size", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError(parser.format_usage().strip())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "trials", 1) < 1:
            raise UsageError("--trials must be >= 1")
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
