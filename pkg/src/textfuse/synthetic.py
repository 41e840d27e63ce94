"""Synthetic benchmark corpora for the toolkit's experiments.

Two constructions are provided:

* a two-signal corpus whose label depends jointly on a rare marker token
  (crisp in the TF-IDF view because of its high idf, but buried in the
  dense bag projection) and on a topic balance spread over 60 word types
  that a frequency-capped vocabulary excludes (so only the dense view
  sees it).  Neither single view can reach the Bayes rate; the fused
  view can.
* a 1-D Gaussian imbalanced set where an unweighted classifier collapses
  to the majority class, used to exercise cost-weight searches.

All randomness is splitmix64-driven, so corpora are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Dataset, LabeledDocument, split_dataset
from .model import TrainConfig, evaluate_features, train
from .evaluation import EvalReport
from .preprocess import stem_sequence, tokenize_tweet
from .rng import SplitMix64, fisher_yates
from .vectorize import (
    DenseVector,
    SparseVector,
    Standardizer,
    build_vocabulary,
    compute_idf,
    fallback_encode,
    fit_standardizer,
    fuse,
    tfidf_vector,
)

POSITIVE = "pos"
NEGATIVE = "neg"
LABEL_NAMES = (NEGATIVE, POSITIVE)

_FILLERS = [f"fill{i:02d}" for i in range(30)]
_TOPIC_A = [f"topa{i:02d}" for i in range(30)]
_TOPIC_B = [f"topb{i:02d}" for i in range(30)]
_RARE = [f"rare{i}z" for i in range(6)]

FUSION_VOCAB_CAP = 36
FUSION_DENSE_DIM = 64
FUSION_DENSE_SEED = 9999


def make_fusion_corpus(n_docs: int = 2000, seed: int = 1234) -> Dataset:
    """Corpus with a rare-marker signal and a topic-balance signal.

    Each document draws 20 filler tokens (30 types), 8 topic tokens with
    k of them from the B set (k ~ Binomial(8, 1/2)), and, half the time,
    one of 6 rare markers repeated 3 times.  The label is positive iff
    (2k - 8) + 4*[rare present] >= 2.  Token types carry digits so they
    pass through stemming unchanged, keeping frequencies exact: fillers
    (~1333 each) and rare markers (~500 each) occupy the top 36
    frequency ranks, topic types (~266 each) fall outside.
    """
    stream = SplitMix64(seed)
    docs: list[LabeledDocument] = []
    for i in range(n_docs):
        has_rare = stream.next_float() < 0.5
        rare_token = _RARE[stream.next_below(2)]
        k = sum(1 for _ in range(8) if stream.next_float() < 0.5)
        margin = 2 * k - 8
        label = POSITIVE if margin + (4 if has_rare else 0) >= 2 else NEGATIVE
        tokens = [_FILLERS[stream.next_below(30)] for _ in range(20)]
        tokens += [_TOPIC_B[stream.next_below(30)] for _ in range(k)]
        tokens += [_TOPIC_A[stream.next_below(30)] for _ in range(8 - k)]
        if has_rare:
            tokens += [rare_token] * 3
        fisher_yates(tokens, stream)
        docs.append(LabeledDocument(id=f"d{i:05d}", text=" ".join(tokens), label=label))
    return Dataset(
        documents=docs,
        positive_label=POSITIVE,
        negative_label=NEGATIVE,
        source=f"synthetic-fusion(n={n_docs},seed={seed})",
    )


def _gaussian(stream: SplitMix64) -> float:
    u1 = 1.0 - stream.next_float()
    u2 = stream.next_float()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def make_imbalanced_features(
    n: int = 600,
    seed: int = 7,
    minority_fraction: float = 0.1,
    separation: float = 1.0,
):
    """1-D dense features: majority at N(0,1), minority at N(separation,1).

    Returns (examples, label_names) where examples are ready for
    training; the positive label is the minority class.
    """
    stream = SplitMix64(seed)
    std = Standardizer.identity(1)
    examples = []
    for _ in range(n):
        is_minority = stream.next_float() < minority_fraction
        x = _gaussian(stream) + (separation if is_minority else 0.0)
        fv = fuse(
            DenseVector(values=[x], dim=1),
            SparseVector(entries=[], dim=0),
            [],
            std,
        )
        examples.append((fv, POSITIVE if is_minority else NEGATIVE))
    return examples, LABEL_NAMES


@dataclass
class FusionRunReports:
    """Per-variant (train, dev) reports for one seeded benchmark run."""

    tfidf: tuple[EvalReport, EvalReport]
    dense: tuple[EvalReport, EvalReport]
    fused: tuple[EvalReport, EvalReport]

    def dev_macro_f1(self) -> dict[str, float]:
        return {
            "tfidf": self.tfidf[1].macro_f1,
            "dense": self.dense[1].macro_f1,
            "fused": self.fused[1].macro_f1,
        }


def fusion_features(
    corpus: Dataset,
    train_ids: set[str],
    vocab_cap: int = FUSION_VOCAB_CAP,
    dense_dim: int = FUSION_DENSE_DIM,
    dense_seed: int = FUSION_DENSE_SEED,
) -> dict[str, dict[str, list]]:
    """Featurize the corpus once per variant, fitting vocabulary, idf and
    standardizer on the ``train_ids`` side only.

    Returns variant -> {"train": [...], "dev": [...]} feature lists.
    """
    tokenized = [tokenize_tweet(d.text) for d in corpus.documents]
    stemmed = [stem_sequence(t) for t in tokenized]
    in_train = [d.id in train_ids for d in corpus.documents]

    train_stemmed = [s for s, flag in zip(stemmed, in_train) if flag]
    vocab = build_vocabulary(train_stemmed, cap=vocab_cap)
    idf = compute_idf(train_stemmed, vocab)
    sparse_vecs = [tfidf_vector(s, vocab, idf) for s in stemmed]

    dense_vecs = [fallback_encode(t, dense_dim, dense_seed) for t in tokenized]
    standardizer = fit_standardizer([v for v, flag in zip(dense_vecs, in_train) if flag])

    empty_sparse = SparseVector(entries=[], dim=0)
    empty_std = Standardizer.identity(0)
    zero_dense = DenseVector(values=[], dim=0)

    out: dict[str, dict[str, list]] = {v: {"train": [], "dev": []} for v in ("tfidf", "dense", "fused")}
    for doc, sparse, dense, flag in zip(corpus.documents, sparse_vecs, dense_vecs, in_train):
        side = "train" if flag else "dev"
        out["tfidf"][side].append((fuse(zero_dense, sparse, [], empty_std), doc.label))
        out["dense"][side].append((fuse(dense, empty_sparse, [], standardizer), doc.label))
        out["fused"][side].append((fuse(dense, sparse, [], standardizer), doc.label))
    return out


def fusion_benchmark(
    corpus: Dataset,
    seed: int,
    config: TrainConfig | None = None,
    ratio: tuple[int, int] = (4, 1),
) -> FusionRunReports:
    """Split, featurize, and train the three variants for one seed.

    ``seed`` drives both the split and the training run; the dense
    fallback encoder seed stays fixed so dense vectors are a property of
    the corpus, like the text itself.
    """
    if config is None:
        config = TrainConfig(learning_rate=0.05, epochs=20, seed=seed)
    train_ds, dev_ds = split_dataset(corpus, ratio, seed)
    features = fusion_features(corpus, {d.id for d in train_ds.documents})

    label_names = (corpus.negative_label, corpus.positive_label)
    reports = {}
    for variant, sides in features.items():
        params, _ = train(config, sides["train"], sides["dev"], label_names)
        reports[variant] = (
            evaluate_features(params, sides["train"], config.threshold),
            evaluate_features(params, sides["dev"], config.threshold),
        )
    return FusionRunReports(
        tfidf=reports["tfidf"], dense=reports["dense"], fused=reports["fused"]
    )
