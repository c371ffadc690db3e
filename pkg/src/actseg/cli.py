"""Command-line entry points.

Exit codes: 0 success, 1 validation error (single-line message on stderr),
2 internal failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import data as data_mod
from .checkpoint import load_checkpoint, save_checkpoint
from .config import (
    load_experiment_config,
    parse_fusion_config,
    ExperimentConfig,
)
from .data import (
    DatasetMeta,
    SequenceSample,
    SyntheticConfig,
    decimate,
    generate_synthetic,
    load_dataset,
    split_dataset,
    write_dataset,
)
from .errors import ActsegError, ConfigError, FormatError
from .fusion import (
    FusionClassifier,
    FusionClassifierConfig,
    FusedFeatureSet,
    extract_fused_dataset,
    load_fused_dataset,
    predict_fusion,
    save_fused_dataset,
    train_fusion,
)
from .graph import build_skeleton_graph
from .metrics import evaluate
from .models.pomsgcn import PomsgcnModel
from .models.transformer import TransformerModel
from .report import RunRecord, emit_report, load_run_record
from .training import predict_labels, train_model, write_history


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_labels(path: Path, labels) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{int(x)}\n" for x in labels), encoding="ascii")


def _run_id(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True).encode("utf-8")
    return hashlib.sha1(blob).hexdigest()[:12]


def _load_config_doc(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON in {p}: {e}") from e


def cmd_synth_data(args) -> int:
    doc = _load_config_doc(args.config)
    try:
        cfg = SyntheticConfig(**doc)
    except TypeError as e:
        raise ConfigError(f"bad synthetic config: {e}") from e
    samples, meta = generate_synthetic(cfg)
    write_dataset(samples, meta, args.out)
    print(f"wrote {len(samples)} sequences to {args.out}")
    return 0


def _load_experiment_dataset(cfg: ExperimentConfig):
    if cfg.dataset.path is not None:
        path = Path(cfg.dataset.path)
        if not path.exists():
            raise ConfigError(f"dataset path {path} does not exist")
        samples, meta = load_dataset(path)
    else:
        samples, meta = generate_synthetic(cfg.dataset.synthetic)
    if cfg.dataset.decimation_factor > 1:
        samples = [decimate(s, cfg.dataset.decimation_factor) for s in samples]
    return samples, meta


def _default_chain_graph(num_joints: int):
    return build_skeleton_graph(
        num_joints, [(i, i + 1) for i in range(num_joints - 1)]
    )


def _build_model(cfg: ExperimentConfig, meta: DatasetMeta):
    if cfg.model_type == "pomsgcn":
        graph = cfg.graph or _default_chain_graph(meta.num_joints)
        model_cfg = cfg.pomsgcn_config(meta.num_classes, meta.channels)
        return PomsgcnModel(model_cfg, graph, seed=cfg.train.seed)
    model_cfg = cfg.transformer_config(
        meta.num_classes, meta.num_joints * meta.channels
    )
    return TransformerModel(model_cfg, seed=cfg.train.seed)


def cmd_train(args) -> int:
    cfg = load_experiment_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()

    samples, meta = _load_experiment_dataset(cfg)
    train_samples, test_samples = split_dataset(
        samples, cfg.dataset.train_fraction, cfg.dataset.split_seed
    )
    eval_samples = test_samples if test_samples else train_samples

    model = _build_model(cfg, meta)
    history = train_model(model, train_samples, cfg.loss, cfg.train)

    _write_json(out / "config.json", cfg.raw)
    write_history(history, out / "history.csv")
    save_checkpoint(model, out / "checkpoint", epoch=len(history))

    preds = []
    truths = []
    for sample in eval_samples:
        pred = predict_labels(model, sample)
        _write_labels(out / "predictions" / sample.sample_id / "labels.csv", pred)
        preds.append(pred)
        truths.append(sample.labels)
    report = evaluate(
        preds,
        truths,
        thresholds=cfg.eval.thresholds,
        background_class=cfg.eval.background_class,
        averaging=cfg.eval.averaging,
    )
    _write_json(out / "metrics.json", report.to_dict())
    _write_json(
        out / "run_record.json",
        {
            "run_id": _run_id(cfg.raw),
            "dataset": cfg.dataset.name,
            "model": cfg.model_type,
            "metrics": report.to_dict(),
            "wall_time_s": time.monotonic() - started,
            "history": "history.csv",
            "config_echo": cfg.raw,
        },
    )
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def _parse_thresholds(text: str):
    try:
        values = tuple(float(t) for t in text.split(","))
    except ValueError as e:
        raise ConfigError(f"bad thresholds {text!r}") from e
    for v in values:
        if not (0.0 < v <= 1.0):
            raise ConfigError(f"threshold {v} outside (0, 1]")
    return values


def cmd_evaluate(args) -> int:
    gt_dir = Path(args.gt)
    pred_dir = Path(args.pred)
    if not gt_dir.exists():
        raise ConfigError(f"ground-truth directory {gt_dir} does not exist")
    if not pred_dir.exists():
        raise ConfigError(f"prediction directory {pred_dir} does not exist")
    samples, _meta = load_dataset(gt_dir)
    preds = []
    truths = []
    for sample in samples:
        pred_path = pred_dir / sample.sample_id / "labels.csv"
        if not pred_path.exists():
            raise FormatError(f"missing prediction file {pred_path}")
        pred = np.loadtxt(pred_path, dtype=np.int64, ndmin=1)
        preds.append(pred)
        truths.append(sample.labels)
    report = evaluate(
        preds,
        truths,
        thresholds=_parse_thresholds(args.thresholds),
        background_class=args.background_class,
        averaging=args.averaging,
    )
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        _write_json(Path(args.out), report.to_dict())
    return 0


def _parse_channels(text):
    if text is None:
        return None
    return [int(c) for c in text.split(",")]


def cmd_extract_features(args) -> int:
    data_dir = Path(args.data)
    if not data_dir.exists():
        raise ConfigError(f"data directory {data_dir} does not exist")
    samples, meta = load_dataset(data_dir)
    fused = extract_fused_dataset(
        args.pomsgcn,
        args.transformer,
        samples,
        meta,
        pomsgcn_channels=_parse_channels(args.pomsgcn_channels),
        transformer_channels=_parse_channels(args.transformer_channels),
    )
    save_fused_dataset(fused, args.out)
    print(f"wrote fused features (width {fused.width}) for {len(fused.features)} sequences")
    return 0


def cmd_fuse_train(args) -> int:
    cfg = parse_fusion_config(_load_config_doc(args.config))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()

    fused = load_fused_dataset(args.features)
    indices = list(range(len(fused.features)))
    train_idx, test_idx = split_dataset(indices, cfg.train_fraction, cfg.split_seed)
    eval_idx = test_idx if test_idx else train_idx

    subset = lambda idx: FusedFeatureSet(
        features=[fused.features[i] for i in idx],
        labels=[fused.labels[i] for i in idx],
        sample_ids=[fused.sample_ids[i] for i in idx],
        num_classes=fused.num_classes,
        provenance=fused.provenance,
    )
    train_set = subset(train_idx)
    clf = FusionClassifier(
        FusionClassifierConfig(
            input_width=fused.width,
            num_classes=fused.num_classes,
            hidden_width=cfg.hidden_width,
            bn_eps=cfg.bn_eps,
            bn_momentum=cfg.bn_momentum,
        ),
        seed=cfg.train.seed,
    )
    history = train_fusion(clf, train_set, cfg.train)

    _write_json(out / "config.json", cfg.raw)
    with (out / "history.csv").open("w", encoding="ascii") as fh:
        fh.write("epoch,loss,train_accuracy\n")
        for row in history:
            fh.write(
                f"{row['epoch']},{row['loss']:.17g},{row['train_accuracy']:.17g}\n"
            )
    save_checkpoint(clf, out / "checkpoint", epoch=len(history))

    preds = []
    truths = []
    for i in eval_idx:
        pred = predict_fusion(clf, fused.features[i])
        _write_labels(out / "predictions" / fused.sample_ids[i] / "labels.csv", pred)
        preds.append(pred)
        truths.append(fused.labels[i])
    report = evaluate(
        preds,
        truths,
        thresholds=cfg.eval.thresholds,
        background_class=cfg.eval.background_class,
        averaging=cfg.eval.averaging,
    )
    _write_json(out / "metrics.json", report.to_dict())
    _write_json(
        out / "run_record.json",
        {
            "run_id": _run_id(cfg.raw),
            "dataset": cfg.dataset_name,
            "model": "fusion",
            "metrics": report.to_dict(),
            "wall_time_s": time.monotonic() - started,
            "history": "history.csv",
            "config_echo": cfg.raw,
        },
    )
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    records = [load_run_record(run) for run in args.runs]
    text = emit_report(records, args.format)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actseg",
        description="Temporal action segmentation: training, fusion, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="generate a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="train a model from an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate saved predictions against a dataset")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--thresholds", default="0.5")
    p.add_argument("--background-class", type=int, default=None)
    p.add_argument("--averaging", choices=("micro", "macro"), default="micro")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("extract-features", help="extract and fuse last-layer features")
    p.add_argument("--pomsgcn", required=True)
    p.add_argument("--transformer", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pomsgcn-channels", default=None)
    p.add_argument("--transformer-channels", default=None)
    p.set_defaults(func=cmd_extract_features)

    p = sub.add_parser("fuse-train", help="train the fusion classifier on fused features")
    p.add_argument("--features", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse_train)

    p = sub.add_parser("report", help="emit a result table from run directories")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; map to the validation exit code,
        # keep 0 for --help
        return 0 if e.code == 0 else 1
    try:
        return args.func(args)
    except ActsegError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - internal failure boundary
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
