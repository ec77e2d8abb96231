"""Command-line entry point orchestrating the pipeline.

Subcommands compose via files only: synth/ingest produce manifests, train
produces checkpoints, translate writes synthetic right-eye images, score
writes the discrepancy CSV, detect/tune/evaluate consume CSVs. Every run
writes ``run.json`` (the fully resolved config) into its output directory;
re-running with ``--config <run.json>`` and workers=1 reproduces all CSV
outputs byte-identically.

Exit codes: 0 success, 2 config error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import dataset, detector, distance, evaluate, reporting, synth
from .core import Label, ManifestationCategory, Source, TensorImage, ValueRange
from .depth import DepthCache, PretrainedDepthBackend, depth_to_context, estimate_depth, normalize_depth, resolve_cache_dir
from .errors import ConfigError, DataError, StereoidError
from .painter import (
    CriticConfig,
    GeneratorConfig,
    LossWeights,
    StereoPairs,
    TrainConfig,
    build_model,
    generator_forward,
    load_checkpoint,
    save_checkpoint,
    train as train_painter,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            obj = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}")
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must be a mapping")
    # a run.json from a previous run wraps the config under "config"
    if "config" in obj and "command" in obj:
        obj = obj["config"]
    return obj


def _resolve(args: argparse.Namespace, keys: list[str]) -> dict:
    """defaults < config file < explicit flags."""
    cfg: dict = {}
    if args.config:
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(keys)
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_json(command: str, cfg: dict, out: Path) -> None:
    payload = {"command": command, "config": cfg}
    (out / "run.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _parse_mix(text: str) -> dict[ManifestationCategory, int]:
    mix = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, _, count = part.partition("=")
        try:
            mix[ManifestationCategory(name.strip())] = int(count)
        except ValueError as exc:
            raise ConfigError(f"bad fault mix entry {part!r}: {exc}")
    return mix


def _depth_provider(cfg: dict, root: Path):
    """Returns depth_context(frame_id, eye, image) -> signed 3-channel array."""
    mode = cfg.get("depth", "cache")
    cache_dir = resolve_cache_dir(cfg.get("cache"))
    backend = None
    if mode.startswith("model:"):
        backend = PretrainedDepthBackend(mode[len("model:"):],
                                         input_size=int(cfg.get("depth_input_size", 512)))
    elif mode == "cache":
        if cache_dir is None:
            default = root / "depth"
            if default.is_dir():
                cache_dir = default
        if cache_dir is None:
            raise ConfigError(
                "depth=cache needs --cache, STEREOID_CACHE, or a depth/ directory beside the manifest"
            )
    else:
        raise ConfigError(f"unknown depth mode {mode!r} (use 'cache' or 'model:PATH')")
    cache = DepthCache(cache_dir) if cache_dir is not None else None

    def provide(frame_id: str, eye: str, image: TensorImage) -> np.ndarray:
        depth = cache.get(frame_id, eye) if cache else None
        if depth is None:
            if backend is None:
                raise DataError(f"no cached depth for frame {frame_id!r} ({eye})")
            depth = estimate_depth(backend, image)
            if cache:
                cache.put(frame_id, eye, depth)
        return depth_to_context(depth).data * 2.0 - 1.0

    return provide


def _load_pairs(manifest: dataset.DatasetManifest, split: str, root: Path, cfg: dict) -> StereoPairs:
    provide = _depth_provider(cfg, root)
    entries = manifest.split_entries(split)
    if not entries:
        raise DataError(f"manifest has no {split!r} entries")
    left, dl, dr, right = [], [], [], []
    for e in entries:
        frame = dataset.load_frame(e, root)
        left.append(frame.left.data * 2.0 - 1.0)
        right.append(frame.right.data * 2.0 - 1.0)
        dl.append(provide(e.frame_id, "left", frame.left))
        dr.append(provide(e.frame_id, "right", frame.right))
    return StereoPairs(np.stack(left), np.stack(dl), np.stack(dr), np.stack(right))


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(cfg: dict) -> int:
    out = _out_dir(cfg)
    input_dir = Path(cfg.get("input") or ".")
    if not input_dir.is_dir():
        raise DataError(f"input directory not found: {input_dir}")
    layout = cfg.get("layout", "sbs")
    entries = []
    if layout == "sbs":
        for path in sorted(input_dir.glob("*.png")):
            entries.append(dataset.ManifestEntry(frame_id=path.stem, sbs_path=path.name))
    elif layout == "pairs":
        for path in sorted(input_dir.glob("*_left.png")):
            stem = path.name[: -len("_left.png")]
            right = input_dir / f"{stem}_right.png"
            if not right.is_file():
                raise DataError(f"missing right-eye file for {path.name}")
            entries.append(
                dataset.ManifestEntry(frame_id=stem, left_path=path.name, right_path=right.name)
            )
    else:
        raise ConfigError(f"unknown layout {layout!r} (use 'sbs' or 'pairs')")
    if not entries:
        raise DataError(f"no screenshots found in {input_dir} (layout={layout})")
    ratios = tuple(cfg.get("ratios", dataset.DEFAULT_RATIOS))
    seed = int(cfg.get("seed", 0))
    manifest = dataset.DatasetManifest(entries=entries, seed=seed, ratios=ratios)
    manifest = dataset.partition(manifest, ratios=ratios, seed=seed)
    dataset.write_manifest(manifest, out / "manifest.ndjson")
    _write_run_json("ingest", cfg, out)
    print(f"ingested {len(entries)} frames -> {out / 'manifest.ndjson'}")
    return EXIT_OK


def cmd_synth(cfg: dict) -> int:
    out = _out_dir(cfg)
    mix = _parse_mix(cfg["mix"]) if cfg.get("mix") else synth.DEFAULT_FAULT_MIX
    size = int(cfg.get("size", 64))
    seed = int(cfg.get("seed", 0))
    n_normal = int(cfg.get("n_normal", 4000 - sum(synth.DEFAULT_FAULT_MIX.values())))
    manifest = synth.generate_corpus(
        out,
        n_normal=n_normal,
        fault_mix=mix,
        base_spec_sampler=lambda rng: synth.default_scene_sampler(rng, size, size),
        seed=seed,
        write_depth=bool(cfg.get("write_depth", True)),
    )
    _write_run_json("synth", cfg, out)
    n_issue = sum(1 for e in manifest.entries if e.label == -1)
    print(f"synthesized {len(manifest)} frames ({n_issue} issues) -> {out}")
    return EXIT_OK


def cmd_train(cfg: dict) -> int:
    out = _out_dir(cfg)
    manifest_path = Path(cfg.get("manifest") or "manifest.ndjson")
    manifest = dataset.read_manifest(manifest_path)
    root = Path(cfg.get("data_root") or manifest_path.parent)
    gen_cfg = GeneratorConfig(
        ngf=int(cfg.get("ngf", 64)),
        depth_levels=int(cfg.get("depth_levels", 5)),
    )
    critic_cfg = CriticConfig(ndf=int(cfg.get("ndf", 64)))
    weights = LossWeights(
        lambda_gp=float(cfg.get("lambda_gp", 10.0)),
        loss_alpha=float(cfg.get("loss_alpha", 100.0)),
        loss_beta=float(cfg.get("loss_beta", 1.0)),
    )
    train_cfg = TrainConfig(
        batch_size=int(cfg.get("batch_size", 64)),
        learning_rate=float(cfg.get("learning_rate", 0.001)),
        critic_iterations=int(cfg.get("critic_iterations", 5)),
        max_steps=int(cfg.get("max_steps", 2000)),
        early_stop_patience=int(cfg.get("patience", 10)),
        seed=int(cfg.get("seed", 0)),
        checkpoint_dir=str(out),
        log_path=str(out / "train_log.ndjson"),
    )
    train_split = cfg.get("train_split", "train")
    val_split = cfg.get("val_split", "val")
    pairs = _load_pairs(manifest, train_split, root, cfg)
    val_entries = manifest.split_entries(val_split)
    val = _load_pairs(manifest, val_split, root, cfg) if val_entries else pairs
    model = build_model(gen_cfg, critic_cfg, weights, seed=train_cfg.seed)
    if train_cfg.max_steps == 0:
        save_checkpoint(model, out / "best.npz")
        _write_run_json("train", cfg, out)
        print(f"initialized checkpoint (no training) -> {out / 'best.npz'}")
        return EXIT_OK
    result = train_painter(model, pairs, val, train_cfg)
    _write_run_json("train", cfg, out)
    print(
        f"trained {result.model.step} steps, best val L1 {result.best_val_l1:.5f} "
        f"-> {out / 'best.npz'}"
    )
    if (out / "train_log.ndjson").exists():
        reporting.save_loss_curves(out / "train_log.ndjson", out / "losses.svg")
    return EXIT_OK


def cmd_translate(cfg: dict) -> int:
    out = _out_dir(cfg)
    manifest_path = Path(cfg.get("manifest") or "manifest.ndjson")
    manifest = dataset.read_manifest(manifest_path)
    root = Path(cfg.get("data_root") or manifest_path.parent)
    split = cfg.get("split", "all")
    entries = manifest.entries if split == "all" else manifest.split_entries(split)
    if not entries:
        raise DataError(f"no entries in split {split!r}")
    translator = cfg.get("translator", "painter")
    syn_dir = out / "syn"
    syn_dir.mkdir(parents=True, exist_ok=True)
    if translator == "identity":
        for e in entries:
            frame = dataset.load_frame(e, root)
            dataset.save_image(frame.left, syn_dir / f"{e.frame_id}.png")
    elif translator == "painter":
        checkpoint = cfg.get("checkpoint")
        if not checkpoint:
            raise ConfigError("translator=painter needs --checkpoint")
        model, _ = load_checkpoint(checkpoint)
        provide = _depth_provider(cfg, root)
        for e in entries:
            frame = dataset.load_frame(e, root)
            left = TensorImage(frame.left.data * 2.0 - 1.0, ValueRange.SIGNED)
            dl = TensorImage(provide(e.frame_id, "left", frame.left), ValueRange.SIGNED)
            dr = TensorImage(provide(e.frame_id, "right", frame.right), ValueRange.SIGNED)
            syn = generator_forward(model, left, dl, dr)
            unit = TensorImage((syn.data + 1.0) / 2.0, ValueRange.UNIT)
            dataset.save_image(unit, syn_dir / f"{e.frame_id}.png")
    else:
        raise ConfigError(f"unknown translator {translator!r} (use 'painter' or 'identity')")
    _write_run_json("translate", cfg, out)
    print(f"translated {len(entries)} frames -> {syn_dir}")
    return EXIT_OK


def cmd_score(cfg: dict) -> int:
    out = _out_dir(cfg)
    manifest_path = Path(cfg.get("manifest") or "manifest.ndjson")
    manifest = dataset.read_manifest(manifest_path)
    root = Path(cfg.get("data_root") or manifest_path.parent)
    syn_dir = Path(cfg.get("syn_dir") or (out / "syn"))
    if not syn_dir.is_dir():
        raise DataError(f"synthetic image directory not found: {syn_dir}")
    weights = distance.DistanceWeights(
        alpha=float(cfg.get("dist_alpha", 1.0)),
        beta=float(cfg.get("dist_beta", 1.0)),
        gamma=float(cfg.get("dist_gamma", 1.0)),
    )
    records = []
    for e in manifest.entries:
        frame = dataset.load_frame(e, root)
        syn_path = syn_dir / f"{e.frame_id}.png"
        if not syn_path.is_file():
            raise DataError(f"missing synthetic image {syn_path}")
        syn = dataset.load_image(syn_path)
        records.append(distance.compute_record(e.frame_id, syn, frame.right, weights))
    distance.write_discrepancy_csv(records, out / "discrepancy.csv", weights)
    _write_run_json("score", cfg, out)
    print(f"scored {len(records)} frames -> {out / 'discrepancy.csv'}")
    return EXIT_OK


def cmd_detect(cfg: dict) -> int:
    out = _out_dir(cfg)
    csv_path = Path(cfg.get("discrepancies") or "discrepancy.csv")
    records = distance.read_discrepancy_csv(csv_path)
    forest_cfg = detector.ForestConfig(
        n_estimators=int(cfg.get("n_estimators", detector.DEFAULT_N_ESTIMATORS)),
        contamination=float(cfg.get("contamination", detector.DEFAULT_CONTAMINATION)),
        subsample_size=int(cfg.get("subsample", detector.DEFAULT_SUBSAMPLE)),
        seed=int(cfg.get("seed", 0)),
    )
    results = detector.detect(records, forest_cfg, feature_mode=cfg.get("features", "aggregate"))
    threshold = None
    scores = np.array([r.score for r in results])
    labels = np.array([r.label for r in results])
    if (labels == -1).any() and (labels == 1).any():
        threshold = float(scores[labels == -1].min())
    detector.write_detection_report(results, out / "detection.csv", forest_cfg, threshold)
    reporting.save_score_histogram(scores, labels, out / "score_histogram.svg", threshold)
    _write_run_json("detect", cfg, out)
    n_flagged = int((labels == -1).sum())
    print(f"flagged {n_flagged} of {len(results)} frames -> {out / 'detection.csv'}")
    return EXIT_OK


def _grid_from(cfg: dict) -> detector.TuneGrid:
    kwargs = {}
    if cfg.get("grid_contaminations"):
        start, stop, count = (float(x) for x in cfg["grid_contaminations"].split(":"))
        kwargs["contaminations"] = tuple(np.linspace(start, stop, int(count)))
    if cfg.get("grid_estimators"):
        start, stop, step = (int(x) for x in cfg["grid_estimators"].split(":"))
        kwargs["n_estimators"] = tuple(range(start, stop + 1, step))
    if cfg.get("subsample"):
        kwargs["subsample_size"] = int(cfg["subsample"])
    kwargs["seed"] = int(cfg.get("seed", 0))
    return detector.TuneGrid(**kwargs)


def cmd_tune(cfg: dict) -> int:
    out = _out_dir(cfg)
    csv_path = Path(cfg.get("discrepancies") or "discrepancy.csv")
    records = distance.read_discrepancy_csv(csv_path)
    manifest = dataset.read_manifest(Path(cfg.get("manifest") or "manifest.ndjson"))
    labels_by_id = {e.frame_id: e.label for e in manifest.entries}
    missing = [r.frame_id for r in records if labels_by_id.get(r.frame_id) is None]
    if missing:
        raise DataError(f"{len(missing)} records lack ground-truth labels (first: {missing[0]})")
    labels = [labels_by_id[r.frame_id] for r in records]
    grid = _grid_from(cfg)
    best, table = detector.tune(records, labels, grid)
    (out / "best_config.json").write_text(
        json.dumps(dataclasses.asdict(best), indent=2, sort_keys=True) + "\n"
    )
    with open(out / "grid.csv", "w") as fh:
        fh.write("contamination,n_estimators,f1\n")
        for row in table:
            fh.write(f"{row['contamination']!r},{row['n_estimators']},{row['f1']!r}\n")
    reporting.save_grid_heatmap(table, out / "grid_heatmap.svg")
    _write_run_json("tune", cfg, out)
    print(
        f"best: contamination={best.contamination:.4g} n_estimators={best.n_estimators} "
        f"-> {out / 'best_config.json'}"
    )
    return EXIT_OK


def cmd_evaluate(cfg: dict) -> int:
    out = _out_dir(cfg)
    det_path = Path(cfg.get("detections") or "detection.csv")
    results = detector.read_detection_report(det_path)
    manifest = dataset.read_manifest(Path(cfg.get("manifest") or "manifest.ndjson"))
    truth = {e.frame_id: (e.label, e.category) for e in manifest.entries}
    missing = [r.frame_id for r in results if r.frame_id not in truth or truth[r.frame_id][0] is None]
    if missing:
        raise DataError(f"{len(missing)} detections lack ground truth (first: {missing[0]})")
    true_labels = [truth[r.frame_id][0] for r in results]
    pred_labels = [r.label for r in results]
    report = evaluate.classification_report(true_labels, pred_labels)
    evaluate.write_classification_csv(report, out / "classification.csv")
    (out / "classification.txt").write_text(evaluate.classification_text(report))

    detected, categories = [], []
    for r in results:
        label, category = truth[r.frame_id]
        if label == -1:
            if category is None:
                raise DataError(f"issue frame {r.frame_id!r} lacks a category")
            detected.append(r.label == -1)
            categories.append(ManifestationCategory(category))
    if categories:
        table = evaluate.recall_by_category(detected, categories)
        evaluate.write_category_csv(table, out / "category_recall.csv")
        (out / "category_recall.txt").write_text(evaluate.category_table_text(table))

    if cfg.get("discrepancies"):
        records = distance.read_discrepancy_csv(Path(cfg["discrepancies"]))
        agg = {r.frame_id: r.aggregate for r in records}
        issue_d = [agg[r.frame_id] for r in results if truth[r.frame_id][0] == -1 and r.frame_id in agg]
        normal_d = [agg[r.frame_id] for r in results if truth[r.frame_id][0] == 1 and r.frame_id in agg]
        if issue_d and normal_d:
            mwu = evaluate.mann_whitney_u(issue_d, normal_d)
            (out / "significance.json").write_text(
                json.dumps(
                    {"u": mwu.u, "p_value": mwu.p_value, "method": mwu.method,
                     "samples": {"issue": len(issue_d), "normal": len(normal_d)}},
                    indent=2, sort_keys=True,
                ) + "\n"
            )
    _write_run_json("evaluate", cfg, out)
    print(evaluate.classification_text(report))
    return EXIT_OK


def cmd_report(cfg: dict) -> int:
    run_dir = Path(cfg.get("run_dir") or cfg.get("out") or ".")
    if not run_dir.is_dir():
        raise DataError(f"run directory not found: {run_dir}")
    md, html = reporting.bundle_report(run_dir)
    print(f"report -> {md} and {html}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring

_COMMANDS = {
    "ingest": (cmd_ingest, ["input", "layout", "ratios", "seed", "out", "workers"]),
    "synth": (cmd_synth, ["n_normal", "mix", "size", "seed", "write_depth", "out", "workers"]),
    "train": (
        cmd_train,
        ["manifest", "data_root", "depth", "cache", "depth_input_size", "ngf", "depth_levels",
         "ndf", "lambda_gp", "loss_alpha", "loss_beta", "batch_size", "learning_rate",
         "critic_iterations", "max_steps", "patience", "train_split", "val_split", "seed",
         "out", "workers"],
    ),
    "translate": (
        cmd_translate,
        ["manifest", "data_root", "translator", "checkpoint", "depth", "cache",
         "depth_input_size", "split", "seed", "out", "workers"],
    ),
    "score": (
        cmd_score,
        ["manifest", "data_root", "syn_dir", "dist_alpha", "dist_beta", "dist_gamma",
         "seed", "out", "workers"],
    ),
    "detect": (
        cmd_detect,
        ["discrepancies", "n_estimators", "contamination", "subsample", "features",
         "seed", "out", "workers"],
    ),
    "tune": (
        cmd_tune,
        ["discrepancies", "manifest", "grid_contaminations", "grid_estimators", "subsample",
         "seed", "out", "workers"],
    ),
    "evaluate": (
        cmd_evaluate,
        ["detections", "manifest", "discrepancies", "seed", "out", "workers"],
    ),
    "report": (cmd_report, ["run_dir", "out", "workers"]),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereoid",
        description="Detect stereoscopic visual inconsistencies in VR stereo screenshots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML config file (or a previous run.json)")
        p.add_argument("--seed", type=int, help="master random seed")
        p.add_argument("--workers", type=int, help="worker processes (default 1, reproducible)")
        p.add_argument("--out", help="output directory")
        return p

    p = add("ingest", "directory of screenshots -> partitioned manifest")
    p.add_argument("--input", help="directory of PNG screenshots")
    p.add_argument("--layout", choices=["sbs", "pairs"], help="side-by-side files or *_left/*_right pairs")

    p = add("synth", "labeled synthetic stereo corpus with injected faults")
    p.add_argument("--n-normal", dest="n_normal", type=int, help="number of clean frames")
    p.add_argument("--mix", help="fault mix, e.g. 'MonocularBlindness=17,ObjectOmission=44'")
    p.add_argument("--size", type=int, help="square canvas size in pixels")

    p = add("train", "train the stereo translator on a manifest")
    p.add_argument("--manifest", help="manifest path")
    p.add_argument("--data-root", dest="data_root", help="directory image paths are relative to")
    p.add_argument("--depth", help="'cache' or 'model:PATH' (TorchScript)")
    p.add_argument("--cache", help="depth cache directory (or set STEREOID_CACHE)")
    p.add_argument("--ngf", type=int, help="generator base feature count")
    p.add_argument("--depth-levels", dest="depth_levels", type=int, help="U-Net down/up levels")
    p.add_argument("--ndf", type=int, help="critic base feature count")
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--critic-iterations", dest="critic_iterations", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--patience", type=int, help="early-stop patience in epochs")
    p.add_argument("--loss-alpha", dest="loss_alpha", type=float)
    p.add_argument("--loss-beta", dest="loss_beta", type=float)
    p.add_argument("--lambda-gp", dest="lambda_gp", type=float)
    p.add_argument("--train-split", dest="train_split", help="split used for training")
    p.add_argument("--val-split", dest="val_split", help="split used for validation")

    p = add("translate", "write synthetic right-eye images for a manifest")
    p.add_argument("--manifest", help="manifest path")
    p.add_argument("--data-root", dest="data_root")
    p.add_argument("--translator", choices=["painter", "identity"])
    p.add_argument("--checkpoint", help="painter checkpoint (.npz)")
    p.add_argument("--depth", help="'cache' or 'model:PATH'")
    p.add_argument("--cache", help="depth cache directory")
    p.add_argument("--split", help="manifest split to translate (default all)")

    p = add("score", "discrepancy CSV from synthetic vs real right-eye images")
    p.add_argument("--manifest", help="manifest path")
    p.add_argument("--data-root", dest="data_root")
    p.add_argument("--syn-dir", dest="syn_dir", help="directory of synthetic right-eye PNGs")
    p.add_argument("--dist-alpha", dest="dist_alpha", type=float, help="L1 weight")
    p.add_argument("--dist-beta", dest="dist_beta", type=float, help="L2 weight")
    p.add_argument("--dist-gamma", dest="dist_gamma", type=float, help="(1-SSIM) weight")

    p = add("detect", "isolation-forest detection over a discrepancy CSV")
    p.add_argument("--discrepancies", help="discrepancy CSV path")
    p.add_argument("--n-estimators", dest="n_estimators", type=int)
    p.add_argument("--contamination", type=float)
    p.add_argument("--subsample", type=int, help="per-tree subsample size")
    p.add_argument("--features", choices=["aggregate", "components"])

    p = add("tune", "grid-search detector hyperparameters against labels")
    p.add_argument("--discrepancies", help="discrepancy CSV path")
    p.add_argument("--manifest", help="manifest with ground-truth labels")
    p.add_argument("--grid-contaminations", dest="grid_contaminations",
                   help="start:stop:count (default 0.01:0.1:100)")
    p.add_argument("--grid-estimators", dest="grid_estimators",
                   help="start:stop:step (default 50:300:5)")
    p.add_argument("--subsample", type=int)

    p = add("evaluate", "classification report, per-category recall, significance")
    p.add_argument("--detections", help="detection CSV path")
    p.add_argument("--manifest", help="manifest with ground-truth labels")
    p.add_argument("--discrepancies", help="optional discrepancy CSV for the significance test")

    p = add("report", "bundle a run directory into markdown/HTML")
    p.add_argument("--run-dir", dest="run_dir", help="directory holding run outputs")

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler, keys = _COMMANDS[args.command]
    try:
        cfg = _resolve(args, keys)
        return handler(cfg)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (StereoidError, Exception) as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: runtime: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
