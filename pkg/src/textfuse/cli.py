"""Command-line surface: train, evaluate, predict, stats, split.

Every run is reproducible: ``train`` echoes its effective configuration
to ``manifest.cfg`` in the output directory, and that file can be fed
back through ``--config``.  Configuration precedence is flags > config
file > defaults.  Exit codes: 0 success, 1 operational error, 2 usage
error.

Label pairs are given positive-first (``--labels OFF,NOT``); cost
weights and grids use the same order (``--class-weights 10:1``).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields

from . import __version__
from .corpus import Dataset, LabeledDocument, class_distribution, load_dataset, save_dataset, split_dataset
from .errors import LayoutMismatch, TextfuseError
from .evaluation import EvalReport, baseline_all
from .model import (
    ClassWeights,
    ModelParams,
    TrainConfig,
    evaluate_features,
    forward,
    load_model,
    save_model,
    train,
)
from .pipeline import FeatureArtifacts, FeatureConfig, featurize, fit_features
from .preprocess import PosSource, load_pos_sidecar, stem_sequence, tokenize_tweet
from .stats import document_frequency_pairs, weight_grid_search, wilcoxon_signed_rank
from .vectorize import EmbeddingTable, load_embeddings

PROFILES = {
    # fused-with-real-embeddings defaults vs small-data defaults
    "taskA": {"learning_rate": 5e-6, "epochs": 2},
    "taskB": {"learning_rate": 5e-5, "epochs": 20},
}

MODEL_FILE = "model.bin"
FEATURES_FILE = "features.json"


@dataclass
class RunConfig:
    """Everything a command needs, resolved from flags and config file."""

    data: str = ""
    format: str = "two-column-tsv"
    labels: str = ""
    ratio: str = "4:1"
    split_seed: int = 0
    profile: str = "taskB"
    learning_rate: float | None = None
    batch_size: int = 32
    epochs: int | None = None
    seed: int = 0
    threshold: float = 0.5
    class_weights: str = "1:1"
    tfidf: bool = True
    vocab_cap: int = 6000
    dense: str = "fallback"
    embeddings: str = ""
    dense_dim: int = 64
    dense_seed: int = 0
    noun_counts: bool = False
    pos_sidecar: str = ""
    out: str = ""

    def label_pair(self) -> tuple[str, str]:
        parts = self.labels.split(",")
        if len(parts) != 2 or not all(parts):
            raise ValueError(f"--labels must be POS,NEG, got {self.labels!r}")
        return (parts[0], parts[1])

    def ratio_pair(self) -> tuple[int, int]:
        parts = self.ratio.split(":")
        if len(parts) != 2:
            raise ValueError(f"--ratio must be TRAIN:DEV, got {self.ratio!r}")
        return (int(parts[0]), int(parts[1]))

    def train_config(self) -> TrainConfig:
        profile = PROFILES[self.profile]
        lr = self.learning_rate if self.learning_rate is not None else profile["learning_rate"]
        epochs = self.epochs if self.epochs is not None else profile["epochs"]
        positive, negative = self.label_pair()
        return TrainConfig(
            learning_rate=lr,
            batch_size=self.batch_size,
            epochs=epochs,
            seed=self.seed,
            class_weights=ClassWeights.parse(self.class_weights, (positive, negative)),
            threshold=self.threshold,
        )

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(
            use_tfidf=self.tfidf,
            vocab_cap=self.vocab_cap,
            dense_source=self.dense,
            dense_dim=self.dense_dim,
            dense_seed=self.dense_seed,
            use_noun_counts=self.noun_counts,
        )

    def manifest_lines(self) -> list[str]:
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            out.append(f"{f.name}={value}")
        return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textfuse",
        description="Train and evaluate fused TF-IDF + dense text classifiers.",
    )
    parser.add_argument("--version", action="version", version=f"textfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_labels: bool = True) -> None:
        p.add_argument("--config", help="flat key=value config file; flags win")
        p.add_argument("--data", help="dataset file")
        p.add_argument("--format", choices=["olid-tsv", "two-column-tsv", "text-lines"],
                       help="dataset format")
        if with_labels:
            p.add_argument("--labels", help="label pair, positive first (e.g. OFF,NOT)")

    def add_feature_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--tfidf", action=argparse.BooleanOptionalAction,
                       help="enable the TF-IDF block (default on)")
        p.add_argument("--vocab-cap", type=int, help="vocabulary cap (default 6000)")
        p.add_argument("--dense", choices=["fallback", "file", "none"],
                       help="dense block source (default fallback)")
        p.add_argument("--embeddings", help="EMB1 or TSV embedding file (dense=file)")
        p.add_argument("--dense-dim", type=int, help="fallback encoder width (default 64)")
        p.add_argument("--dense-seed", type=int, help="fallback encoder seed (default 0)")
        p.add_argument("--noun-counts", action=argparse.BooleanOptionalAction,
                       help="append NNS/PRP count features (default off)")
        p.add_argument("--pos-sidecar", help="POS sidecar TSV (doc_id<TAB>token<TAB>tag)")

    def add_train_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--ratio", help="train:dev split ratio (default 4:1)")
        p.add_argument("--split-seed", type=int, help="split seed (default 0)")
        p.add_argument("--profile", choices=sorted(PROFILES),
                       help="hyperparameter profile (default taskB)")
        p.add_argument("--lr", dest="learning_rate", type=float, help="learning rate")
        p.add_argument("--batch-size", type=int, help="batch size (default 32)")
        p.add_argument("--epochs", type=int, help="training epochs")
        p.add_argument("--seed", type=int, help="training seed (default 0)")
        p.add_argument("--threshold", type=float, help="positive threshold (default 0.5)")
        p.add_argument("--class-weights", help="POS:NEG cost weights (default 1:1)")

    p_train = sub.add_parser("train", help="train a model and write it to --out")
    add_common(p_train)
    add_feature_flags(p_train)
    add_train_flags(p_train)
    p_train.add_argument("--out", help="output directory")

    p_eval = sub.add_parser("evaluate", help="evaluate a trained model on a dataset")
    add_common(p_eval, with_labels=False)
    p_eval.add_argument("--model-dir", help="directory holding model.bin + features.json")
    p_eval.add_argument("--model", help="model file (alternative to --model-dir)")
    p_eval.add_argument("--features", help="feature artifacts file")
    p_eval.add_argument("--embeddings", help="embedding file for dense=file models")
    p_eval.add_argument("--pos-sidecar", help="POS sidecar TSV")
    p_eval.add_argument("--threshold", type=float, help="positive threshold (default 0.5)")
    p_eval.add_argument("--out", help="directory for report TSV")

    p_pred = sub.add_parser("predict", help="print id, predicted label, p_positive")
    add_common(p_pred, with_labels=False)
    p_pred.add_argument("--model-dir", help="directory holding model.bin + features.json")
    p_pred.add_argument("--model", help="model file")
    p_pred.add_argument("--features", help="feature artifacts file")
    p_pred.add_argument("--embeddings", help="embedding file for dense=file models")
    p_pred.add_argument("--pos-sidecar", help="POS sidecar TSV")
    p_pred.add_argument("--threshold", type=float, help="positive threshold (default 0.5)")
    p_pred.add_argument("--out", help="write predictions to this file instead of stdout")

    p_stats = sub.add_parser("stats", help="class distribution, Wilcoxon, weight grid")
    add_common(p_stats)
    add_feature_flags(p_stats)
    add_train_flags(p_stats)
    p_stats.add_argument("--wilcoxon", action="store_true",
                         help="signed-rank test on train-vs-dev per-term df rates")
    p_stats.add_argument("--wilcoxon-top", type=int, default=100,
                         help="number of shared top-frequency terms to pair (default 100)")
    p_stats.add_argument("--grid", help="comma-separated POS:NEG weights to search")
    p_stats.add_argument("--out", help="directory for result TSVs")

    p_split = sub.add_parser("split", help="write stratified train/dev files")
    add_common(p_split)
    p_split.add_argument("--ratio", help="train:dev split ratio (default 4:1)")
    p_split.add_argument("--seed", dest="split_seed", type=int, help="split seed (default 0)")
    p_split.add_argument("--out-train", required=False, help="train side output path")
    p_split.add_argument("--out-dev", required=False, help="dev side output path")

    return parser


def _read_config_file(path: str, parser: argparse.ArgumentParser) -> dict:
    valid = {f.name for f in fields(RunConfig)}
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    parser.error(f"{path}:{line_no}: expected key=value")
                key, _, value = line.partition("=")
                key = key.strip()
                if key not in valid:
                    parser.error(f"{path}:{line_no}: unknown key {key!r}")
                out[key] = value.strip()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    return out


_BOOL_VALUES = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _resolve_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    """Apply flags > config file > dataclass defaults."""
    cfg = RunConfig()
    file_values = {}
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config, parser)
    for f in fields(RunConfig):
        if f.name in file_values:
            raw = file_values[f.name]
            try:
                if f.name in ("tfidf", "noun_counts"):
                    setattr(cfg, f.name, _BOOL_VALUES[raw.lower()])
                elif f.name in ("split_seed", "batch_size", "epochs", "seed",
                                "vocab_cap", "dense_dim", "dense_seed"):
                    setattr(cfg, f.name, int(raw))
                elif f.name in ("learning_rate", "threshold"):
                    setattr(cfg, f.name, float(raw))
                else:
                    setattr(cfg, f.name, raw)
            except (ValueError, KeyError):
                parser.error(f"config key {f.name}: bad value {raw!r}")
        flag_value = getattr(args, f.name, None)
        if flag_value is not None:
            setattr(cfg, f.name, flag_value)
    return cfg


def _load_labeled(cfg: RunConfig, parser: argparse.ArgumentParser) -> Dataset:
    if not cfg.data:
        parser.error("--data is required")
    if not os.path.isfile(cfg.data):
        parser.error(f"dataset file does not exist: {cfg.data}")
    try:
        pair = cfg.label_pair()
    except ValueError as exc:
        parser.error(str(exc))
    if cfg.format == "text-lines":
        parser.error("format text-lines is only supported by the predict command")
    return load_dataset(cfg.data, cfg.format, pair)


def _load_side_inputs(cfg: RunConfig, parser: argparse.ArgumentParser):
    embeddings: EmbeddingTable | None = None
    if cfg.dense == "file":
        if not cfg.embeddings:
            parser.error("--dense file requires --embeddings")
        if not os.path.isfile(cfg.embeddings):
            parser.error(f"embedding file does not exist: {cfg.embeddings}")
        embeddings = load_embeddings(cfg.embeddings)
    pos_source = None
    if cfg.pos_sidecar:
        if not os.path.isfile(cfg.pos_sidecar):
            parser.error(f"POS sidecar does not exist: {cfg.pos_sidecar}")
        pos_source = load_pos_sidecar(cfg.pos_sidecar)
    return embeddings, pos_source


def cmd_train(cfg: RunConfig, parser: argparse.ArgumentParser) -> int:
    if not cfg.out:
        parser.error("--out directory is required")
    try:
        feature_config = cfg.feature_config()
        train_config = cfg.train_config()
    except ValueError as exc:
        parser.error(str(exc))
    ds = _load_labeled(cfg, parser)
    embeddings, pos_source = _load_side_inputs(cfg, parser)

    train_ds, dev_ds = split_dataset(ds, cfg.ratio_pair(), cfg.split_seed)
    artifacts = fit_features(train_ds, feature_config, embeddings)
    train_set = featurize(train_ds, artifacts, embeddings, pos_source)
    dev_set = featurize(dev_ds, artifacts, embeddings, pos_source)
    positive, negative = cfg.label_pair()
    params, history = train(train_config, train_set, dev_set, (negative, positive))

    os.makedirs(cfg.out, exist_ok=True)
    save_model(params, os.path.join(cfg.out, MODEL_FILE))
    artifacts.save(os.path.join(cfg.out, FEATURES_FILE))
    with open(os.path.join(cfg.out, "history.tsv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(history.tsv_lines()) + "\n")
    with open(os.path.join(cfg.out, "manifest.cfg"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(cfg.manifest_lines()) + "\n")

    dev_report = evaluate_features(params, dev_set, train_config.threshold)
    with open(os.path.join(cfg.out, "dev_report.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(dev_report.kv_lines()) + "\n")
    with open(os.path.join(cfg.out, "dev_report.tsv"), "w", encoding="utf-8") as fh:
        fh.write(EvalReport.tsv_header() + "\n" + dev_report.tsv_row() + "\n")
    print(f"train: {len(train_ds)} docs, dev: {len(dev_ds)} docs")
    for line in dev_report.kv_lines():
        print(line)
    print(f"model written to {os.path.join(cfg.out, MODEL_FILE)}")
    return 0


def _locate_model(args, parser) -> tuple[str, str]:
    model_dir = getattr(args, "model_dir", None)
    model_path = getattr(args, "model", None)
    features_path = getattr(args, "features", None)
    if model_dir:
        model_path = model_path or os.path.join(model_dir, MODEL_FILE)
        features_path = features_path or os.path.join(model_dir, FEATURES_FILE)
    if not model_path or not features_path:
        parser.error("provide --model-dir or both --model and --features")
    for p in (model_path, features_path):
        if not os.path.isfile(p):
            parser.error(f"file does not exist: {p}")
    return model_path, features_path


def _check_layout(params: ModelParams, artifacts: FeatureArtifacts) -> None:
    if params.layout == artifacts.layout:
        return
    blocks = ("dense", "tfidf", "extra")
    details = []
    for name, got, expected in zip(blocks, artifacts.layout, params.layout):
        if got != expected:
            details.append(f"{name} block is {got}-dimensional here but the model "
                           f"was trained with {expected}")
    raise LayoutMismatch(
        "feature configuration does not match the model: " + "; ".join(details)
    )


def _load_model_and_artifacts(args, parser) -> tuple[ModelParams, FeatureArtifacts]:
    model_path, features_path = _locate_model(args, parser)
    params = load_model(model_path)
    artifacts = FeatureArtifacts.load(features_path)
    return params, artifacts


def _featurize_for_model(args, cfg: RunConfig, parser, ds: Dataset, params, artifacts):
    cfg.dense = artifacts.config.dense_source
    if getattr(args, "embeddings", None):
        cfg.embeddings = args.embeddings
    embeddings, pos_source = _load_side_inputs(cfg, parser)
    _check_layout(params, artifacts)
    threshold = getattr(args, "threshold", None) or 0.5
    return featurize(ds, artifacts, embeddings, pos_source), threshold


def cmd_evaluate(args, cfg: RunConfig, parser) -> int:
    params, artifacts = _load_model_and_artifacts(args, parser)
    negative, positive = params.label_names
    cfg.labels = f"{positive},{negative}"
    ds = _load_labeled(cfg, parser)
    examples, threshold = _featurize_for_model(args, cfg, parser, ds, params, artifacts)

    report = evaluate_features(params, examples, threshold)
    print("# model evaluation")
    for line in report.kv_lines():
        print(line)
    golds = ds.labels()
    for label in (negative, positive):
        base = baseline_all(label, golds, params.label_names)
        print(f"baseline.all_{label}.macro_f1={base.macro_f1:.6f}")
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        path = os.path.join(cfg.out, "eval_report.tsv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(EvalReport.tsv_header() + "\n" + report.tsv_row() + "\n")
        print(f"report written to {path}")
    return 0


def cmd_predict(args, cfg: RunConfig, parser) -> int:
    params, artifacts = _load_model_and_artifacts(args, parser)
    negative, positive = params.label_names
    if not cfg.data or not os.path.isfile(cfg.data):
        parser.error(f"dataset file does not exist: {cfg.data}")
    if cfg.format == "text-lines":
        with open(cfg.data, encoding="utf-8") as fh:
            texts = [line.rstrip("\n") for line in fh if line.strip()]
        ds = Dataset(
            documents=[
                LabeledDocument(id=f"r{i}", text=t, label=negative)
                for i, t in enumerate(texts, start=1)
            ],
            positive_label=positive,
            negative_label=negative,
            source=cfg.data,
        )
    else:
        cfg.labels = f"{positive},{negative}"
        ds = _load_labeled(cfg, parser)
    examples, threshold = _featurize_for_model(args, cfg, parser, ds, params, artifacts)

    lines = []
    for doc, (fv, _) in zip(ds.documents, examples):
        _, p_pos = forward(params, fv)
        label = positive if p_pos >= threshold else negative
        lines.append(f"{doc.id}\t{label}\t{p_pos:.6f}")
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"{len(lines)} predictions written to {cfg.out}")
    else:
        for line in lines:
            print(line)
    return 0


def cmd_stats(args, cfg: RunConfig, parser) -> int:
    ds = _load_labeled(cfg, parser)
    report = class_distribution(ds)
    print("# class distribution")
    for line in report.lines():
        print(line)

    needs_split = args.wilcoxon or args.grid
    if not needs_split:
        return 0
    train_ds, dev_ds = split_dataset(ds, cfg.ratio_pair(), cfg.split_seed)

    if args.wilcoxon:
        train_docs = [stem_sequence(tokenize_tweet(d.text)) for d in train_ds.documents]
        dev_docs = [stem_sequence(tokenize_tweet(d.text)) for d in dev_ds.documents]
        pairs = document_frequency_pairs(train_docs, dev_docs, top_n=args.wilcoxon_top)
        result = wilcoxon_signed_rank(pairs)
        print("# wilcoxon signed-rank on per-term train/dev df rates")
        print(f"w_plus={result.w_plus:g}")
        print(f"w_minus={result.w_minus:g}")
        print(f"n_effective={result.n_effective}")
        print(f"p_two_sided={result.p_two_sided:.6f}")
        print(f"method={result.method}")

    if args.grid:
        positive, negative = cfg.label_pair()
        try:
            grid = [ClassWeights.parse(w, (positive, negative)) for w in args.grid.split(",")]
            feature_config = cfg.feature_config()
            base_config = cfg.train_config()
        except ValueError as exc:
            parser.error(str(exc))
        embeddings, pos_source = _load_side_inputs(cfg, parser)
        artifacts = fit_features(train_ds, feature_config, embeddings)
        train_set = featurize(train_ds, artifacts, embeddings, pos_source)
        dev_set = featurize(dev_ds, artifacts, embeddings, pos_source)
        result = weight_grid_search(train_set, dev_set, grid, base_config, (negative, positive))
        print("# cost-weight grid search")
        for line in result.tsv_lines((positive, negative)):
            print(line)
        best = result.best_row()
        print(f"best={result.best} (weights {best.class_weights.describe((positive, negative))}, "
              f"dev macro_f1 {best.dev_report.macro_f1:.4f})")
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            path = os.path.join(cfg.out, "grid.tsv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("\n".join(result.tsv_lines((positive, negative))) + "\n")
            print(f"grid written to {path}")
    return 0


def cmd_split(args, cfg: RunConfig, parser) -> int:
    out_train = args.out_train or "train_split.tsv"
    out_dev = args.out_dev or "dev_split.tsv"
    ds = _load_labeled(cfg, parser)
    train_ds, dev_ds = split_dataset(ds, cfg.ratio_pair(), cfg.split_seed)
    save_dataset(train_ds, out_train, cfg.format)
    save_dataset(dev_ds, out_dev, cfg.format)
    print(f"train: {len(train_ds)} docs -> {out_train}")
    print(f"dev: {len(dev_ds)} docs -> {out_dev}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    cfg = _resolve_config(args, parser)
    try:
        if args.command == "train":
            return cmd_train(cfg, parser)
        if args.command == "evaluate":
            return cmd_evaluate(args, cfg, parser)
        if args.command == "predict":
            return cmd_predict(args, cfg, parser)
        if args.command == "stats":
            return cmd_stats(args, cfg, parser)
        if args.command == "split":
            return cmd_split(args, cfg, parser)
        parser.error(f"unknown command {args.command!r}")
    except TextfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
