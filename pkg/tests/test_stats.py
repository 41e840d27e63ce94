from dataclasses import replace
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textfuse.errors import AllZeroDifferences, DegenerateSplit
from textfuse.model import ClassWeights, TrainConfig, evaluate_features, train
from textfuse.preprocess import TokenSequence
from textfuse.stats import (
    data_scaling_run,
    document_frequency_pairs,
    weight_grid_search,
    wilcoxon_signed_rank,
    _normal_two_sided_p,
)
from textfuse.synthetic import make_imbalanced_features


# --- enumeration oracle -------------------------------------------------------


def oracle_ranks(abs_diffs):
    """Average ranks, written independently of the implementation."""
    n = len(abs_diffs)
    ranks = []
    for i in range(n):
        smaller = sum(1 for v in abs_diffs if v < abs_diffs[i])
        equal = sum(1 for v in abs_diffs if v == abs_diffs[i])
        ranks.append(smaller + (equal + 1) / 2.0)
    return ranks


def oracle_exact_p(diffs):
    """Literal enumeration of all 2^n sign assignments."""
    ranks = oracle_ranks([abs(d) for d in diffs])
    n = len(diffs)
    observed = sum(r for r, d in zip(ranks, diffs) if d > 0)
    mu = sum(ranks) / 2.0
    hits = 0
    for signs in product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if abs(w - mu) >= abs(observed - mu):
            hits += 1
    return hits / 2.0**n


def pairs_from_diffs(diffs):
    return [(d, 0.0) for d in diffs]


# --- wilcoxon ------------------------------------------------------------------


def test_wilcoxon_worked_example():
    result = wilcoxon_signed_rank(pairs_from_diffs([1, -2, 3, -4, 5]))
    assert result.w_plus == 9
    assert result.w_minus == 6
    assert result.n_effective == 5
    assert result.method == "exact"
    assert result.p_two_sided == oracle_exact_p([1, -2, 3, -4, 5]) == 0.8125


def test_wilcoxon_all_zero_differences():
    with pytest.raises(AllZeroDifferences):
        wilcoxon_signed_rank([(1.0, 1.0), (2.0, 2.0)])


def test_wilcoxon_single_pair():
    result = wilcoxon_signed_rank([(3.0, 1.0)])
    assert result.w_plus == 1
    assert result.w_minus == 0
    assert result.p_two_sided == 1.0


def test_wilcoxon_ties_average_ranks():
    result = wilcoxon_signed_rank(pairs_from_diffs([1, -1, 2]))
    assert result.w_plus == pytest.approx(4.5)
    assert result.w_minus == pytest.approx(1.5)
    assert result.p_two_sided == oracle_exact_p([1, -1, 2])


def test_wilcoxon_zero_differences_dropped():
    result = wilcoxon_signed_rank([(5.0, 5.0), (2.0, 1.0), (0.0, 3.0)])
    assert result.n_effective == 2


_DIFF = st.integers(-8, 8).filter(lambda d: d != 0)


@settings(max_examples=150, deadline=None)
@given(st.lists(_DIFF, min_size=1, max_size=10))
def test_wilcoxon_exact_matches_enumeration(diffs):
    result = wilcoxon_signed_rank(pairs_from_diffs(diffs))
    assert result.method == "exact"
    assert result.p_two_sided == pytest.approx(oracle_exact_p(diffs), abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(-100, 100).filter(lambda d: d != 0), min_size=1, max_size=40))
def test_wilcoxon_rank_sum_identity(diffs):
    result = wilcoxon_signed_rank(pairs_from_diffs(diffs))
    n = result.n_effective
    assert result.w_plus + result.w_minus == pytest.approx(n * (n + 1) / 2, abs=1e-9)


def test_wilcoxon_method_crossover():
    assert wilcoxon_signed_rank(pairs_from_diffs(range(1, 26))).method == "exact"
    assert wilcoxon_signed_rank(pairs_from_diffs(range(1, 27))).method == "normal-approx"


def test_wilcoxon_normal_close_to_exact_for_borderline_n():
    """Tie-free random draws with 20..25 effective pairs."""
    rng = np.random.default_rng(123)
    for n in range(20, 26):
        for _ in range(5):
            diffs = list(rng.permutation(np.arange(1, n + 1)) * rng.choice([-1, 1], n))
            exact = wilcoxon_signed_rank(pairs_from_diffs(diffs))
            assert exact.method == "exact"
            ranks = oracle_ranks([abs(d) for d in diffs])
            approx = _normal_two_sided_p(ranks, exact.w_plus)
            assert abs(approx - exact.p_two_sided) < 0.02


def test_document_frequency_pairs_shape():
    docs_a = [TokenSequence(["a", "b"], 2), TokenSequence(["a"], 1)]
    docs_b = [TokenSequence(["b"], 1)]
    pairs = document_frequency_pairs(docs_a, docs_b, top_n=2)
    assert len(pairs) == 2
    rates = dict(zip(("a", "b"), pairs))
    assert rates["a"] == (1.0, 0.0)
    assert rates["b"] == (0.5, 1.0)


# --- grid search ------------------------------------------------------------------


@pytest.fixture(scope="module")
def imbalanced():
    train_set, names = make_imbalanced_features(n=400, seed=7, separation=0.9)
    dev_set, _ = make_imbalanced_features(n=150, seed=8, separation=0.9)
    return train_set, dev_set, names


def test_grid_singleton_equals_direct_train(imbalanced):
    train_set, dev_set, names = imbalanced
    config = TrainConfig(learning_rate=0.05, epochs=8, seed=3)
    result = weight_grid_search(train_set, dev_set, [ClassWeights.identity()], config, names)
    assert result.best == 0
    params, _ = train(config, train_set, dev_set, names)
    direct = evaluate_features(params, dev_set, config.threshold)
    assert result.rows[0].dev_report.macro_f1 == direct.macro_f1
    assert result.rows[0].dev_report.tsv_row() == direct.tsv_row()


def test_grid_duplicate_points_identical(imbalanced):
    train_set, dev_set, names = imbalanced
    config = TrainConfig(learning_rate=0.05, epochs=8, seed=3)
    cw = ClassWeights({"pos": 10.0})
    result = weight_grid_search(train_set, dev_set, [cw, cw], config, names)
    assert result.rows[0].dev_report.tsv_row() == result.rows[1].dev_report.tsv_row()
    assert result.best == 0  # first occurrence wins ties


def test_grid_weighted_beats_flat_on_imbalance(imbalanced):
    train_set, dev_set, names = imbalanced
    config = TrainConfig(learning_rate=0.05, epochs=15, seed=3)
    grid = [ClassWeights.identity(), ClassWeights({"pos": 10.0})]
    result = weight_grid_search(train_set, dev_set, grid, config, names)
    assert result.best == 1
    assert (
        result.rows[1].dev_report.macro_f1 > result.rows[0].dev_report.macro_f1
    )


def test_grid_empty():
    with pytest.raises(ValueError):
        weight_grid_search([], [], [], TrainConfig(), ("neg", "pos"))


def test_grid_tsv_shape(imbalanced):
    train_set, dev_set, names = imbalanced
    config = TrainConfig(learning_rate=0.05, epochs=4, seed=3)
    result = weight_grid_search(train_set, dev_set, [ClassWeights.identity()], config, names)
    lines = result.tsv_lines(("pos", "neg"))
    assert len(lines) == 2
    assert len(lines[0].split("\t")) == len(lines[1].split("\t"))


# --- data scaling -----------------------------------------------------------------


def test_scaling_full_fraction_identical_to_plain_run(imbalanced):
    train_set, dev_set, names = imbalanced
    config = TrainConfig(learning_rate=0.05, epochs=8, seed=3)
    table = data_scaling_run([1.0], train_set, dev_set, config, names)
    params, _ = train(config, train_set, dev_set, names)
    direct = evaluate_features(params, dev_set, config.threshold)
    assert table.rows[0].dev_report.macro_f1 == direct.macro_f1


def test_scaling_fraction_order_validated(imbalanced):
    train_set, dev_set, names = imbalanced
    with pytest.raises(ValueError):
        data_scaling_run([0.8, 0.1], train_set, dev_set, TrainConfig(), names)


def test_scaling_degenerate_fraction(imbalanced):
    train_set, dev_set, names = imbalanced
    with pytest.raises(DegenerateSplit):
        data_scaling_run([0.001], train_set, dev_set, TrainConfig(), names)


def test_scaling_rows_and_nesting(imbalanced):
    train_set, dev_set, names = imbalanced
    config = TrainConfig(learning_rate=0.05, epochs=4, seed=3)
    table = data_scaling_run([0.5, 1.0], train_set, dev_set, config, names)
    assert [row.fraction for row in table.rows] == [0.5, 1.0]
    assert len(table.tsv_lines()) == 3
