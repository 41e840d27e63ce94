"""Rank statistics and the experiment harnesses built on training runs.

``wilcoxon_signed_rank`` is exact (full sign-assignment distribution) up
to 25 effective pairs and switches to a tie- and continuity-corrected
normal approximation above that.  ``weight_grid_search`` trains one model
per candidate cost weighting and picks the best dev macro-F1;
``data_scaling_run`` trains on nested stratified subsamples of growing
size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import AllZeroDifferences, DegenerateSplit, TextfuseError
from .evaluation import EvalReport
from .model import ClassWeights, TrainConfig, evaluate_features, train
from .preprocess import TokenSequence
from .rng import SplitMix64, fisher_yates
from .vectorize import FeatureVector, build_vocabulary

EXACT_LIMIT = 25


@dataclass
class WilcoxonResult:
    w_plus: float
    w_minus: float
    n_effective: int
    p_two_sided: float
    method: str  # "exact" | "normal-approx"


def _average_ranks(abs_diffs: list[float]) -> list[float]:
    """Ranks 1..n of |d| with average ranks for ties."""
    n = len(abs_diffs)
    order = sorted(range(n), key=lambda i: abs_diffs[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and abs_diffs[order[j + 1]] == abs_diffs[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _exact_two_sided_p(ranks: list[float], w_plus: float) -> float:
    """P(|W - mu| >= |w_plus - mu|) over all 2^n sign assignments.

    Computed from the exact distribution of W built by dynamic
    programming over doubled ranks (average ranks are half-integers, so
    doubling makes every sum an integer).  Equivalent to enumerating all
    assignments, which the test suite does independently.
    """
    doubled = [round(2 * r) for r in ranks]
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r2 in doubled:
        for s in range(total - r2, -1, -1):
            if counts[s]:
                counts[s + r2] += counts[s]
    mu2 = total / 2.0
    delta = abs(2 * w_plus - mu2)
    hits = sum(c for s, c in enumerate(counts) if abs(s - mu2) >= delta - 1e-9)
    return hits / float(2 ** len(ranks))


def _normal_two_sided_p(ranks: list[float], w_plus: float) -> float:
    n = len(ranks)
    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: subtract sum(t^3 - t)/48 over tie groups
    groups: dict[float, int] = {}
    for r in ranks:
        groups[r] = groups.get(r, 0) + 1
    for size in groups.values():
        if size > 1:
            var -= (size**3 - size) / 48.0
    sigma = math.sqrt(var)
    centered = w_plus - mu
    # continuity correction pulls the statistic half a step toward the mean
    if centered > 0:
        centered -= 0.5
    elif centered < 0:
        centered += 0.5
    z = centered / sigma
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return min(1.0, p)


def wilcoxon_signed_rank(pairs: list[tuple[float, float]]) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Differences are first-minus-second; zero differences are dropped;
    ties in |d| get average ranks.  Exact p for up to 25 effective
    pairs, normal approximation beyond.
    """
    if not pairs:
        raise ValueError("need at least one pair")
    diffs = [a - b for a, b in pairs if a != b]
    if not diffs:
        raise AllZeroDifferences("all paired differences are zero")
    ranks = _average_ranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    n = len(diffs)
    if n <= EXACT_LIMIT:
        p = _exact_two_sided_p(ranks, w_plus)
        method = "exact"
    else:
        p = _normal_two_sided_p(ranks, w_plus)
        method = "normal-approx"
    return WilcoxonResult(
        w_plus=w_plus, w_minus=w_minus, n_effective=n, p_two_sided=p, method=method
    )


def document_frequency_pairs(
    train_docs: list[TokenSequence],
    dev_docs: list[TokenSequence],
    top_n: int = 100,
) -> list[tuple[float, float]]:
    """Paired per-term document-frequency rates (train vs dev) over the
    top ``top_n`` terms of the combined corpus.  This is the default
    input the CLI feeds to the signed-rank test when judging whether the
    two sides differ enough to justify cost weighting."""
    vocab = build_vocabulary(train_docs + dev_docs, cap=top_n)

    def rates(docs: list[TokenSequence]) -> dict[str, float]:
        df = dict.fromkeys(vocab.terms, 0)
        for doc in docs:
            for term in set(doc.tokens) & set(vocab.terms):
                df[term] += 1
        n = max(1, len(docs))
        return {t: df[t] / n for t in vocab.terms}

    train_rates = rates(train_docs)
    dev_rates = rates(dev_docs)
    return [(train_rates[t], dev_rates[t]) for t in vocab.terms]


# --- cost-weight grid search -------------------------------------------


@dataclass
class GridRow:
    class_weights: ClassWeights
    train_report: EvalReport
    dev_report: EvalReport


@dataclass
class GridSearchResult:
    rows: list[GridRow]
    best: int

    def best_row(self) -> GridRow:
        return self.rows[self.best]

    def tsv_lines(self, label_pair: tuple[str, str]) -> list[str]:
        positive, negative = label_pair
        header = "\t".join(
            [
                f"weight_{positive}", f"weight_{negative}",
                EvalReport.tsv_header("train_"), EvalReport.tsv_header("dev_"),
            ]
        )
        out = [header]
        for row in self.rows:
            out.append(
                "\t".join(
                    [
                        f"{row.class_weights.of(positive):g}",
                        f"{row.class_weights.of(negative):g}",
                        row.train_report.tsv_row(),
                        row.dev_report.tsv_row(),
                    ]
                )
            )
        return out


def weight_grid_search(
    train_set: list[tuple[FeatureVector, str]],
    dev_set: list[tuple[FeatureVector, str]],
    grid: list[ClassWeights],
    base_config: TrainConfig,
    label_names: tuple[str, str],
) -> GridSearchResult:
    """One full training run per grid point (fresh deterministic init
    from the shared seed); best point by dev macro-F1, first occurrence
    winning ties."""
    if not grid:
        raise ValueError("grid must not be empty")
    rows: list[GridRow] = []
    for cw in grid:
        config = replace(base_config, class_weights=cw)
        try:
            params, _ = train(config, train_set, dev_set, label_names)
        except TextfuseError as exc:
            raise TextfuseError(
                f"grid point {cw.describe((label_names[1], label_names[0]))}: {exc}"
            ) from exc
        rows.append(
            GridRow(
                class_weights=cw,
                train_report=evaluate_features(params, train_set, config.threshold),
                dev_report=evaluate_features(params, dev_set, config.threshold),
            )
        )
    best = 0
    for i, row in enumerate(rows):
        if row.dev_report.macro_f1 > rows[best].dev_report.macro_f1:
            best = i
    return GridSearchResult(rows=rows, best=best)


# --- data-size scaling ----------------------------------------------------


@dataclass
class ScalingRow:
    fraction: float
    train_report: EvalReport
    dev_report: EvalReport


@dataclass
class ScalingTable:
    rows: list[ScalingRow] = field(default_factory=list)

    def tsv_lines(self) -> list[str]:
        out = [
            "\t".join(
                ["fraction", EvalReport.tsv_header("train_"), EvalReport.tsv_header("dev_")]
            )
        ]
        for row in self.rows:
            out.append(
                "\t".join(
                    [f"{row.fraction:g}", row.train_report.tsv_row(), row.dev_report.tsv_row()]
                )
            )
        return out


def data_scaling_run(
    fractions: list[float],
    train_set: list[tuple[FeatureVector, str]],
    dev_set: list[tuple[FeatureVector, str]],
    config: TrainConfig,
    label_names: tuple[str, str],
) -> ScalingTable:
    """Train once per fraction on a deterministic stratified subsample.

    Per class, example positions are shuffled once (splitmix64 stream
    seeded with ``config.seed``, classes in sorted label order) and each
    fraction keeps a prefix, so smaller subsamples nest inside larger
    ones.  Kept examples stay in their original order, which makes the
    1.0 fraction bit-identical to a plain training run.
    """
    if list(fractions) != sorted(fractions):
        raise ValueError("fractions must be sorted ascending")
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"fraction {f} outside (0, 1]")

    by_label: dict[str, list[int]] = {}
    for pos, (_, label) in enumerate(train_set):
        by_label.setdefault(label, []).append(pos)
    stream = SplitMix64(config.seed)
    shuffled: dict[str, list[int]] = {}
    for label in sorted(by_label):
        positions = list(by_label[label])
        fisher_yates(positions, stream)
        shuffled[label] = positions

    table = ScalingTable()
    for fraction in fractions:
        keep: list[int] = []
        for label in sorted(shuffled):
            positions = shuffled[label]
            n_keep = int(math.floor(fraction * len(positions) + 0.5))
            if n_keep == 0:
                raise DegenerateSplit(
                    label,
                    len(positions),
                    reason=f"fraction {fraction} leaves class {label!r} empty",
                )
            keep.extend(positions[:n_keep])
        subsample = [train_set[i] for i in sorted(keep)]
        params, _ = train(config, subsample, dev_set, label_names)
        table.rows.append(
            ScalingRow(
                fraction=fraction,
                train_report=evaluate_features(params, subsample, config.threshold),
                dev_report=evaluate_features(params, dev_set, config.threshold),
            )
        )
    return table
