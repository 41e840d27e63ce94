import math

import numpy as np
import pytest

from textfuse.errors import (
    BadMagic,
    CorruptPayload,
    DimMismatch,
    EmptyBatch,
    EmptyTrainSet,
    NonFiniteLoss,
    VersionMismatch,
)
from textfuse.model import (
    ClassWeights,
    ModelParams,
    TrainConfig,
    forward,
    gradient,
    init_model,
    load_model,
    predict,
    save_model,
    train,
    weighted_loss,
)
from textfuse.vectorize import DenseVector, SparseVector, Standardizer, fuse

NAMES = ("neg", "pos")


def dense_fv(*values):
    dim = len(values)
    return fuse(
        DenseVector(values=list(values), dim=dim),
        SparseVector([], 0),
        [],
        Standardizer.identity(dim),
    )


# --- init -------------------------------------------------------------------


def test_init_deterministic():
    a = init_model((3, 0, 0), 2, seed=9, label_names=NAMES)
    b = init_model((3, 0, 0), 2, seed=9, label_names=NAMES)
    assert np.array_equal(a.weights, b.weights)


def test_init_bias_zero_and_range():
    params = init_model((7, 0, 0), 2, seed=1, label_names=NAMES)
    assert params.bias.tolist() == [0.0, 0.0]
    assert np.all(np.abs(params.weights) <= 0.05)


def test_init_seed_changes_weights():
    a = init_model((4, 0, 0), 2, seed=0, label_names=NAMES)
    b = init_model((4, 0, 0), 2, seed=1, label_names=NAMES)
    assert not np.array_equal(a.weights, b.weights)


# --- forward ------------------------------------------------------------------


def test_forward_zero_params_symmetric():
    params = ModelParams(np.zeros((2, 2)), np.zeros(2), (2, 0, 0), NAMES)
    assert forward(params, dense_fv(3.0, -1.0)) == (0.5, 0.5)


def test_forward_hand_softmax():
    # logits (0, ln 3) -> probabilities (1/4, 3/4)
    params = ModelParams(np.zeros((2, 1)), np.array([0.0, math.log(3)]), (1, 0, 0), NAMES)
    p_neg, p_pos = forward(params, dense_fv(0.0))
    assert p_neg == pytest.approx(0.25, abs=1e-12)
    assert p_pos == pytest.approx(0.75, abs=1e-12)


def test_forward_probabilities_sum_to_one():
    rng = np.random.default_rng(0)
    params = ModelParams(rng.normal(size=(2, 3)), rng.normal(size=2), (3, 0, 0), NAMES)
    for _ in range(20):
        p = forward(params, dense_fv(*rng.normal(size=3)))
        assert 0.0 < p[0] < 1.0 and 0.0 < p[1] < 1.0
        assert p[0] + p[1] == pytest.approx(1.0, abs=1e-12)


def test_forward_layout_mismatch():
    params = ModelParams(np.zeros((2, 2)), np.zeros(2), (2, 0, 0), NAMES)
    with pytest.raises(DimMismatch):
        forward(params, dense_fv(1.0, 2.0, 3.0))


# --- loss ----------------------------------------------------------------------


def test_weighted_loss_identity_weights_is_plain_xent():
    rng = np.random.default_rng(1)
    for _ in range(25):
        p_pos = rng.uniform(0.01, 0.99)
        probs = (1 - p_pos, p_pos)
        gold = "pos" if rng.random() < 0.5 else "neg"
        plain = -math.log(probs[NAMES.index(gold)])
        assert weighted_loss(probs, gold, ClassWeights.identity(), NAMES) == pytest.approx(
            plain, abs=0
        )


def test_weighted_loss_scales():
    cw = ClassWeights({"pos": 50.0})
    loss = weighted_loss((0.2, 0.8), "pos", cw, NAMES)
    assert loss == pytest.approx(50 * 0.2231435513, abs=1e-8)


def test_weighted_loss_perfect_prediction():
    cw = ClassWeights({"pos": 100.0})
    assert weighted_loss((0.0, 1.0), "pos", cw, NAMES) == 0.0


# --- gradient --------------------------------------------------------------------


def _loss_for_fd(weights, bias, xs, ys, wts):
    """Independent mean weighted loss used only by the finite-difference
    oracle."""
    logits = xs @ weights.T + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
    p_gold = probs[np.arange(len(ys)), ys]
    return float(np.mean(wts * -np.log(p_gold)))


def finite_difference_grad(params, batch, cw, h=1e-6):
    xs = np.stack([fv.concat() for fv, _ in batch])
    ys = np.array([NAMES.index(label) for _, label in batch])
    wts = np.array([cw.of(label) for _, label in batch])
    grad_w = np.zeros_like(params.weights)
    grad_b = np.zeros_like(params.bias)
    for target, grad in ((params.weights, grad_w), (params.bias, grad_b)):
        it = np.nditer(target, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            original = target[idx]
            target[idx] = original + h
            up = _loss_for_fd(params.weights, params.bias, xs, ys, wts)
            target[idx] = original - h
            down = _loss_for_fd(params.weights, params.bias, xs, ys, wts)
            target[idx] = original
            grad[idx] = (up - down) / (2 * h)
            it.iternext()
    return grad_w, grad_b


def random_case(rng, dim=4, batch_size=5):
    params = ModelParams(
        rng.normal(scale=0.8, size=(2, dim)),
        rng.normal(scale=0.5, size=2),
        (dim, 0, 0),
        NAMES,
    )
    batch = [
        (dense_fv(*rng.normal(size=dim)), NAMES[rng.integers(0, 2)])
        for _ in range(batch_size)
    ]
    cw = ClassWeights({"pos": float(rng.uniform(0.5, 20)), "neg": float(rng.uniform(0.5, 20))})
    return params, batch, cw


def max_relative_error(analytic, numeric):
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / scale))


def test_gradient_matches_finite_differences_spot():
    rng = np.random.default_rng(11)
    for _ in range(10):
        params, batch, cw = random_case(rng)
        gw, gb = gradient(params, batch, cw)
        fw, fb = finite_difference_grad(params, batch, cw)
        assert max_relative_error(gw, fw) < 1e-4
        assert max_relative_error(gb, fb) < 1e-4


def test_gradient_near_zero_at_confident_optimum():
    params = ModelParams(
        np.array([[-30.0], [30.0]]), np.zeros(2), (1, 0, 0), NAMES
    )
    batch = [(dense_fv(1.0), "pos"), (dense_fv(-1.0), "neg")]
    gw, gb = gradient(params, batch, ClassWeights.identity())
    assert np.linalg.norm(gw) < 1e-12
    assert np.linalg.norm(gb) < 1e-12


def test_gradient_linear_in_class_weights():
    rng = np.random.default_rng(5)
    params, batch, _ = random_case(rng)
    base = ClassWeights({"pos": 2.0, "neg": 3.0})
    doubled = ClassWeights({"pos": 4.0, "neg": 6.0})
    gw1, gb1 = gradient(params, batch, base)
    gw2, gb2 = gradient(params, batch, doubled)
    assert np.allclose(gw2, 2 * gw1, atol=1e-14)
    assert np.allclose(gb2, 2 * gb1, atol=1e-14)


def test_gradient_empty_batch():
    params = init_model((2, 0, 0), 2, 0, NAMES)
    with pytest.raises(EmptyBatch):
        gradient(params, [], ClassWeights.identity())


# --- training ----------------------------------------------------------------------


def separable_set():
    rng = np.random.default_rng(3)
    examples = []
    for _ in range(10):
        examples.append((dense_fv(*(rng.normal(size=2) + [2.5, 2.5])), "pos"))
        examples.append((dense_fv(*(rng.normal(size=2) - [2.5, 2.5])), "neg"))
    return examples


def test_train_separable_reaches_perfect_train_f1():
    examples = separable_set()
    config = TrainConfig(learning_rate=0.5, batch_size=32, epochs=20, seed=1)
    params, history = train(config, examples, [], NAMES)
    assert history.epochs[-1].train_macro_f1 == 1.0


def test_train_history_length_and_steps():
    examples = separable_set()
    config = TrainConfig(learning_rate=0.1, batch_size=32, epochs=1, seed=0)
    _, history = train(config, examples, [], NAMES)
    assert len(history.epochs) == 1
    assert history.epochs[0].dev_macro_f1 is None


def test_train_deterministic_bit_identical():
    examples = separable_set()
    dev = examples[:6]
    config = TrainConfig(learning_rate=0.2, batch_size=4, epochs=5, seed=42)
    a, _ = train(config, examples, dev, NAMES)
    b, _ = train(config, examples, dev, NAMES)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.bias, b.bias)


def test_train_empty_set():
    with pytest.raises(EmptyTrainSet):
        train(TrainConfig(), [], [], NAMES)


def test_train_divergence_guard():
    # a learning rate at float-overflow scale drives the logits to inf and
    # the next batch's loss to NaN, which must abort the run
    examples = [(dense_fv(1e6, -1e6), "pos"), (dense_fv(-1e6, 1e6), "neg")] * 4
    config = TrainConfig(learning_rate=1e308, batch_size=2, epochs=3, seed=0)
    with np.errstate(all="ignore"), pytest.raises(NonFiniteLoss):
        train(config, examples, [], NAMES)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(threshold=1.0)
    with pytest.raises(ValueError):
        ClassWeights({"pos": 0.0})


def test_train_loss_non_increasing_full_batch():
    """Convex instance, full-batch updates, conservative step size."""
    examples = separable_set()
    config = TrainConfig(learning_rate=0.01, batch_size=64, epochs=30, seed=2)
    _, history = train(config, examples, [], NAMES)
    losses = [ep.mean_weighted_loss for ep in history.epochs]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_train_returns_best_dev_epoch():
    examples = separable_set()
    dev = separable_set()
    config = TrainConfig(learning_rate=0.3, batch_size=8, epochs=6, seed=0)
    params, history = train(config, examples, dev, NAMES)
    best = max(ep.dev_macro_f1 for ep in history.epochs)
    from textfuse.model import evaluate_features

    assert evaluate_features(params, dev, 0.5).macro_f1 == pytest.approx(best, abs=1e-12)


def test_cost_weights_shift_decision_boundary():
    """9:1 imbalance: upweighting the minority admits strictly more
    minority points on the positive side."""
    from textfuse.synthetic import make_imbalanced_features

    train_set, names = make_imbalanced_features(n=600, seed=7, separation=0.9)
    dev_set, _ = make_imbalanced_features(n=200, seed=8, separation=0.9)
    config = TrainConfig(learning_rate=0.05, epochs=15, seed=3)

    def minority_positive_predictions(cw):
        from dataclasses import replace

        params, _ = train(replace(config, class_weights=cw), train_set, dev_set, names)
        return sum(
            1
            for fv, label in dev_set
            if label == "pos" and predict(params, fv, 0.5) == "pos"
        )

    flat = minority_positive_predictions(ClassWeights.identity())
    weighted = minority_positive_predictions(ClassWeights({"pos": 10.0}))
    assert weighted > flat


# --- predict -----------------------------------------------------------------------


def test_predict_threshold_boundary():
    params = ModelParams(np.zeros((2, 1)), np.zeros(2), (1, 0, 0), NAMES)
    # p_positive is exactly 0.5: boundary counts as positive
    assert predict(params, dense_fv(0.0), 0.5) == "pos"


def test_predict_low_threshold():
    params = ModelParams(np.zeros((2, 1)), np.array([math.log(7.0), 0.0]), (1, 0, 0), NAMES)
    # p_positive = 1/8 = 0.125
    assert predict(params, dense_fv(0.0), 0.25) == "neg"
    assert predict(params, dense_fv(0.0), 0.12) == "pos"


def test_predict_monotone_in_threshold():
    rng = np.random.default_rng(8)
    params = ModelParams(rng.normal(size=(2, 2)), rng.normal(size=2), (2, 0, 0), NAMES)
    fv = dense_fv(0.3, -0.7)
    decisions = [predict(params, fv, t) for t in (0.1, 0.3, 0.5, 0.7, 0.9)]
    # once a sweep flips to negative it never flips back
    flipped = False
    for d in decisions:
        if d == "neg":
            flipped = True
        elif flipped:
            pytest.fail("lowered threshold flipped a positive back to negative")


def test_predict_threshold_validation():
    params = ModelParams(np.zeros((2, 1)), np.zeros(2), (1, 0, 0), NAMES)
    with pytest.raises(ValueError):
        predict(params, dense_fv(0.0), 0.0)


# --- persistence ---------------------------------------------------------------------


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    params = ModelParams(
        rng.normal(size=(2, 6)), rng.normal(size=2), (2, 3, 1), ("NOT", "OFF")
    )
    path = str(tmp_path / "m.bin")
    save_model(params, path)
    loaded = load_model(path)
    assert np.array_equal(loaded.weights, params.weights)
    assert np.array_equal(loaded.bias, params.bias)
    assert loaded.layout == params.layout
    assert loaded.label_names == params.label_names


def test_load_truncated(tmp_path):
    params = init_model((2, 0, 0), 2, 0, NAMES)
    path = tmp_path / "m.bin"
    save_model(params, str(path))
    blob = path.read_bytes()
    path.write_bytes(blob[:-5])
    with pytest.raises(CorruptPayload):
        load_model(str(path))
    path.write_bytes(blob + b"\x00")
    with pytest.raises(CorruptPayload):
        load_model(str(path))


def test_load_bad_magic(tmp_path):
    path = tmp_path / "m.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 40)
    with pytest.raises(BadMagic):
        load_model(str(path))


def test_load_version_mismatch(tmp_path):
    params = init_model((2, 0, 0), 2, 0, NAMES)
    path = tmp_path / "m.bin"
    save_model(params, str(path))
    blob = bytearray(path.read_bytes())
    blob[4] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(VersionMismatch) as exc:
        load_model(str(path))
    assert exc.value.found == 99
