"""Linear softmax classifiers with cost-weighted cross-entropy training.

One affine layer plus softmax covers all three configurations (TF-IDF
only, dense only, fused): the difference is entirely in the feature
layout.  Training is mini-batch Adam; the per-example loss is multiplied
by the gold class's cost weight so minority-class errors can be made to
matter more.

Model file layout, little-endian::

    magic "FDM1" | u32 version | u32 dense_dim | u32 sparse_dim | u32 extra_dim
    | u16 len + UTF-8 negative label | u16 len + UTF-8 positive label
    | weights (2 x total_dim f64, row-major) | bias (2 x f64)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import evaluation
from .errors import (
    BadMagic,
    CorruptPayload,
    DimMismatch,
    EmptyBatch,
    EmptyTrainSet,
    NonFiniteLoss,
    VersionMismatch,
)
from .rng import SplitMix64, fisher_yates
from .vectorize import FeatureVector

_MODEL_MAGIC = b"FDM1"
_MODEL_VERSION = 1

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8

_PROB_FLOOR = 1e-12


@dataclass
class ClassWeights:
    """Per-class positive loss multipliers, keyed by label name.
    Labels not present default to 1."""

    weights: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for label, w in self.weights.items():
            if not w > 0:
                raise ValueError(f"class weight for {label!r} must be > 0, got {w}")

    def of(self, label: str) -> float:
        return self.weights.get(label, 1.0)

    @classmethod
    def identity(cls) -> "ClassWeights":
        return cls()

    @classmethod
    def parse(cls, text: str, label_pair: tuple[str, str]) -> "ClassWeights":
        """Parse ``POS:NEG`` weight text like ``10:1`` for a
        (positive, negative) label pair."""
        parts = text.split(":")
        if len(parts) != 2:
            raise ValueError(f"expected POS:NEG weights, got {text!r}")
        positive, negative = label_pair
        return cls(weights={positive: float(parts[0]), negative: float(parts[1])})

    def describe(self, label_pair: tuple[str, str]) -> str:
        positive, negative = label_pair
        return f"{self.of(positive):g}:{self.of(negative):g}"


@dataclass
class TrainConfig:
    """Hyperparameters. The defaults are the small-data profile
    (lr 5e-5, 20 epochs); the fused-with-real-embeddings profile uses
    lr 5e-6 and 2 epochs."""

    learning_rate: float = 5e-5
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0
    class_weights: ClassWeights = field(default_factory=ClassWeights.identity)
    threshold: float = 0.5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")


@dataclass(eq=False)
class ModelParams:
    """Affine layer over the fused feature layout.  Row 0 scores the
    negative label, row 1 the positive one."""

    weights: np.ndarray
    bias: np.ndarray
    layout: tuple[int, int, int]
    label_names: tuple[str, str]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        total = sum(self.layout)
        if self.weights.shape != (2, total):
            raise ValueError(f"weights shape {self.weights.shape} != (2, {total})")
        if self.bias.shape != (2,):
            raise ValueError("bias must have shape (2,)")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("parameters must be finite")

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=self.weights.copy(),
            bias=self.bias.copy(),
            layout=self.layout,
            label_names=self.label_names,
        )


@dataclass
class EpochStats:
    mean_weighted_loss: float
    train_macro_f1: float
    dev_macro_f1: float | None


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)

    def tsv_lines(self) -> list[str]:
        out = ["epoch\tmean_weighted_loss\ttrain_macro_f1\tdev_macro_f1"]
        for i, ep in enumerate(self.epochs, start=1):
            dev = "" if ep.dev_macro_f1 is None else f"{ep.dev_macro_f1:.6f}"
            out.append(f"{i}\t{ep.mean_weighted_loss:.6f}\t{ep.train_macro_f1:.6f}\t{dev}")
        return out


def init_model(
    layout: tuple[int, int, int],
    n_classes: int = 2,
    seed: int = 0,
    label_names: tuple[str, str] = ("negative", "positive"),
) -> ModelParams:
    """Weights drawn uniformly from [-0.05, 0.05) via a splitmix64 stream
    seeded with ``seed``, filled row-major; bias starts at zero."""
    if n_classes != 2:
        raise ValueError("this toolkit trains binary classifiers only")
    total = sum(layout)
    if total < 1:
        raise ValueError("layout must cover at least one dimension")
    stream = SplitMix64(seed)
    weights = np.empty((2, total), dtype=np.float64)
    for row in range(2):
        for col in range(total):
            weights[row, col] = -0.05 + 0.1 * stream.next_float()
    return ModelParams(
        weights=weights, bias=np.zeros(2), layout=layout, label_names=label_names
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def forward(params: ModelParams, fv: FeatureVector) -> tuple[float, float]:
    """Class probabilities (negative, positive) for one feature vector."""
    if fv.layout != params.layout:
        raise DimMismatch(
            f"feature layout {fv.layout} does not match model layout {params.layout}"
        )
    probs = _softmax(params.weights @ fv.concat() + params.bias)
    return (float(probs[0]), float(probs[1]))


def weighted_loss(
    probs: tuple[float, float],
    gold: str,
    cw: ClassWeights,
    label_names: tuple[str, str],
) -> float:
    """cw[gold] x (-ln p_gold), with p_gold floored at 1e-12."""
    p_gold = probs[_gold_index(gold, label_names)]
    return cw.of(gold) * -float(np.log(max(p_gold, _PROB_FLOOR)))


def _gold_index(label: str, label_names: tuple[str, str]) -> int:
    try:
        return label_names.index(label)
    except ValueError:
        raise ValueError(f"label {label!r} not in {label_names}") from None


def _stack(
    examples: list[tuple[FeatureVector, str]],
    layout: tuple[int, int, int],
    label_names: tuple[str, str],
) -> tuple[np.ndarray, np.ndarray]:
    xs = np.empty((len(examples), sum(layout)), dtype=np.float64)
    ys = np.empty(len(examples), dtype=np.int64)
    for i, (fv, label) in enumerate(examples):
        if fv.layout != layout:
            raise DimMismatch(
                f"example {i}: feature layout {fv.layout} does not match {layout}"
            )
        xs[i] = fv.concat()
        ys[i] = _gold_index(label, label_names)
    return xs, ys


def _batch_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    ex_weights: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Analytic gradient of the mean weighted loss over one batch, plus
    the batch's summed weighted loss."""
    probs = _softmax(xs @ weights.T + bias)
    n = len(ys)
    p_gold = probs[np.arange(n), ys]
    loss_sum = float(np.sum(ex_weights * -np.log(np.maximum(p_gold, _PROB_FLOOR))))
    delta = probs.copy()
    delta[np.arange(n), ys] -= 1.0
    delta *= ex_weights[:, None]
    grad_w = delta.T @ xs / n
    grad_b = delta.sum(axis=0) / n
    return grad_w, grad_b, loss_sum


def gradient(
    params: ModelParams,
    batch: list[tuple[FeatureVector, str]],
    cw: ClassWeights,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the mean weighted loss over ``batch`` with respect to
    (weights, bias): per example, cw[gold] x (p - y) outer x."""
    if not batch:
        raise EmptyBatch("gradient of an empty batch is undefined")
    xs, ys = _stack(batch, params.layout, params.label_names)
    ex_weights = np.array([cw.of(label) for _, label in batch], dtype=np.float64)
    grad_w, grad_b, _ = _batch_grad(params.weights, params.bias, xs, ys, ex_weights)
    return grad_w, grad_b


def _predictions(
    weights: np.ndarray, bias: np.ndarray, xs: np.ndarray, threshold: float
) -> np.ndarray:
    probs = _softmax(xs @ weights.T + bias)
    return (probs[:, 1] >= threshold).astype(np.int64)


def _macro_f1(
    weights: np.ndarray,
    bias: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    label_names: tuple[str, str],
    threshold: float,
) -> float:
    preds = _predictions(weights, bias, xs, threshold)
    golds = [label_names[i] for i in ys]
    predicted = [label_names[i] for i in preds]
    cm = evaluation.confusion(golds, predicted, label_names)
    return evaluation.metrics(cm).macro_f1


def train(
    config: TrainConfig,
    train_set: list[tuple[FeatureVector, str]],
    dev_set: list[tuple[FeatureVector, str]],
    label_names: tuple[str, str],
) -> tuple[ModelParams, TrainHistory]:
    """Mini-batch Adam over seeded shuffles.

    Weight init uses a splitmix64 stream seeded with ``config.seed``;
    epoch shuffles consume a second stream seeded with ``config.seed + 1``.
    Returns the parameters of the epoch with the best dev macro-F1
    (first-best on ties; the last epoch when ``dev_set`` is empty),
    alongside per-epoch history.
    """
    if not train_set:
        raise EmptyTrainSet("training set is empty")
    layout = train_set[0][0].layout
    xs, ys = _stack(train_set, layout, label_names)
    ex_weights = np.array(
        [config.class_weights.of(label) for _, label in train_set], dtype=np.float64
    )
    dev_xs, dev_ys = _stack(dev_set, layout, label_names) if dev_set else (None, None)

    params = init_model(layout, 2, config.seed, label_names)
    weights, bias = params.weights, params.bias
    m_w = np.zeros_like(weights)
    v_w = np.zeros_like(weights)
    m_b = np.zeros_like(bias)
    v_b = np.zeros_like(bias)
    t = 0

    shuffle_stream = SplitMix64(config.seed + 1)
    n = len(train_set)
    history = TrainHistory()
    best_dev = -1.0
    best_params: ModelParams | None = None

    for epoch in range(config.epochs):
        order = list(range(n))
        fisher_yates(order, shuffle_stream)
        loss_total = 0.0
        for step, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            grad_w, grad_b, loss_sum = _batch_grad(
                weights, bias, xs[idx], ys[idx], ex_weights[idx]
            )
            if not np.isfinite(loss_sum):
                raise NonFiniteLoss(epoch + 1, step + 1)
            loss_total += loss_sum
            t += 1
            correction1 = 1.0 - _ADAM_BETA1**t
            correction2 = 1.0 - _ADAM_BETA2**t
            for grad, m_acc, v_acc, target in (
                (grad_w, m_w, v_w, weights),
                (grad_b, m_b, v_b, bias),
            ):
                m_acc *= _ADAM_BETA1
                m_acc += (1.0 - _ADAM_BETA1) * grad
                v_acc *= _ADAM_BETA2
                v_acc += (1.0 - _ADAM_BETA2) * grad * grad
                target -= (
                    config.learning_rate
                    * (m_acc / correction1)
                    / (np.sqrt(v_acc / correction2) + _ADAM_EPS)
                )

        train_f1 = _macro_f1(weights, bias, xs, ys, label_names, config.threshold)
        dev_f1 = None
        if dev_xs is not None:
            dev_f1 = _macro_f1(weights, bias, dev_xs, dev_ys, label_names, config.threshold)
            if dev_f1 > best_dev:
                best_dev = dev_f1
                best_params = ModelParams(
                    weights=weights.copy(), bias=bias.copy(),
                    layout=layout, label_names=label_names,
                )
        history.epochs.append(
            EpochStats(mean_weighted_loss=loss_total / n, train_macro_f1=train_f1,
                       dev_macro_f1=dev_f1)
        )

    final = best_params if best_params is not None else ModelParams(
        weights=weights, bias=bias, layout=layout, label_names=label_names
    )
    return final, history


def predict(params: ModelParams, fv: FeatureVector, threshold: float = 0.5) -> str:
    """Positive label iff p_positive >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    _, p_pos = forward(params, fv)
    return params.label_names[1] if p_pos >= threshold else params.label_names[0]


def evaluate_features(
    params: ModelParams,
    examples: list[tuple[FeatureVector, str]],
    threshold: float = 0.5,
) -> "evaluation.EvalReport":
    """EvalReport of the model's thresholded predictions on ``examples``."""
    xs, ys = _stack(examples, params.layout, params.label_names)
    preds = _predictions(params.weights, params.bias, xs, threshold)
    golds = [params.label_names[i] for i in ys]
    predicted = [params.label_names[i] for i in preds]
    cm = evaluation.confusion(golds, predicted, params.label_names)
    return evaluation.metrics(cm)


# --- persistence -----------------------------------------------------------


def save_model(params: ModelParams, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<I", _MODEL_VERSION))
        fh.write(struct.pack("<III", *params.layout))
        for name in params.label_names:
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"label name too long: {name!r}")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(params.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(params.bias, dtype="<f8").tobytes())


def load_model(path: str) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MODEL_MAGIC:
        raise BadMagic(f"{path}: not a model file (bad magic)")
    try:
        version = struct.unpack_from("<I", blob, 4)[0]
    except struct.error:
        raise CorruptPayload("model file truncated in header") from None
    if version != _MODEL_VERSION:
        raise VersionMismatch(found=version, expected=_MODEL_VERSION)
    try:
        layout = struct.unpack_from("<III", blob, 8)
        offset = 20
        names = []
        for _ in range(2):
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            if offset + name_len > len(blob):
                raise CorruptPayload("model file truncated in label names")
            names.append(blob[offset : offset + name_len].decode("utf-8"))
            offset += name_len
    except struct.error:
        raise CorruptPayload("model file truncated in header") from None
    total = sum(layout)
    need = 2 * total * 8 + 2 * 8
    if len(blob) - offset < need:
        raise CorruptPayload(
            f"model file payload is {len(blob) - offset} bytes, expected {need}"
        )
    if len(blob) - offset > need:
        raise CorruptPayload("model file has trailing bytes")
    weights = np.frombuffer(blob, dtype="<f8", count=2 * total, offset=offset)
    weights = weights.reshape(2, total).astype(np.float64)
    bias = np.frombuffer(blob, dtype="<f8", count=2, offset=offset + 2 * total * 8)
    return ModelParams(
        weights=weights,
        bias=bias.astype(np.float64),
        layout=(int(layout[0]), int(layout[1]), int(layout[2])),
        label_names=(names[0], names[1]),
    )
