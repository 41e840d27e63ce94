"""End-to-end featurization: from a Dataset to fused feature vectors.

``fit_features`` learns everything that must come from the training side
only (vocabulary, idf, dense standardizer); ``featurize`` applies the
frozen artifacts to any dataset.  Artifacts serialize to JSON so a
trained model can be re-applied later by the CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import Dataset
from .errors import MissingEmbedding
from .preprocess import (
    PosSource,
    TokenSequence,
    noun_counts,
    stem_sequence,
    tokenize_tweet,
)
from .vectorize import (
    DEFAULT_VOCAB_CAP,
    DenseVector,
    EmbeddingTable,
    FeatureVector,
    IdfTable,
    SparseVector,
    Standardizer,
    Vocabulary,
    build_vocabulary,
    compute_idf,
    fallback_encode,
    fit_standardizer,
    fuse,
    tfidf_vector,
)

DENSE_SOURCES = ("fallback", "file", "none")


@dataclass
class FeatureConfig:
    """Which feature blocks are enabled and how the dense block is made."""

    use_tfidf: bool = True
    vocab_cap: int = DEFAULT_VOCAB_CAP
    dense_source: str = "fallback"
    dense_dim: int = 64
    dense_seed: int = 0
    use_noun_counts: bool = False

    def __post_init__(self):
        if self.dense_source not in DENSE_SOURCES:
            raise ValueError(f"dense_source must be one of {DENSE_SOURCES}")
        if not (self.use_tfidf or self.dense_source != "none" or self.use_noun_counts):
            raise ValueError("at least one feature source must be enabled")
        if self.vocab_cap < 1:
            raise ValueError("vocab_cap must be >= 1")


@dataclass
class FeatureArtifacts:
    """Frozen training-side state needed to featurize any dataset."""

    config: FeatureConfig
    vocab: Vocabulary | None
    idf: IdfTable | None
    standardizer: Standardizer
    dense_dim: int

    @property
    def layout(self) -> tuple[int, int, int]:
        sparse_dim = len(self.vocab) if self.config.use_tfidf and self.vocab else 0
        extra_dim = 2 if self.config.use_noun_counts else 0
        return (self.dense_dim, sparse_dim, extra_dim)

    def save(self, path: str) -> None:
        payload = {
            "version": 1,
            "config": {
                "use_tfidf": self.config.use_tfidf,
                "vocab_cap": self.config.vocab_cap,
                "dense_source": self.config.dense_source,
                "dense_dim": self.config.dense_dim,
                "dense_seed": self.config.dense_seed,
                "use_noun_counts": self.config.use_noun_counts,
            },
            "vocab": None
            if self.vocab is None
            else {"cap": self.vocab.cap, "terms": list(self.vocab.terms)},
            "idf": None
            if self.idf is None
            else {"n_docs": self.idf.n_docs, "values": [float(v) for v in self.idf.idf]},
            "standardizer": {
                "mean": [float(v) for v in self.standardizer.mean],
                "std": [float(v) for v in self.standardizer.std],
            },
            "dense_dim": self.dense_dim,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "FeatureArtifacts":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        config = FeatureConfig(**payload["config"])
        vocab = None
        if payload["vocab"] is not None:
            vocab = Vocabulary.from_terms(payload["vocab"]["terms"], payload["vocab"]["cap"])
        idf = None
        if payload["idf"] is not None:
            idf = IdfTable(
                idf=np.array(payload["idf"]["values"], dtype=np.float64),
                n_docs=payload["idf"]["n_docs"],
            )
        standardizer = Standardizer(
            mean=np.array(payload["standardizer"]["mean"], dtype=np.float64),
            std=np.array(payload["standardizer"]["std"], dtype=np.float64),
        )
        return cls(
            config=config,
            vocab=vocab,
            idf=idf,
            standardizer=standardizer,
            dense_dim=payload["dense_dim"],
        )


@dataclass
class _DocFeatures:
    tokens: TokenSequence
    stemmed: TokenSequence
    dense: DenseVector


def _tokenize_dataset(ds: Dataset) -> list[TokenSequence]:
    return [tokenize_tweet(doc.text) for doc in ds.documents]


def _dense_for(
    doc_id: str,
    tokens: TokenSequence,
    config: FeatureConfig,
    embeddings: EmbeddingTable | None,
) -> DenseVector:
    if config.dense_source == "fallback":
        return fallback_encode(tokens, config.dense_dim, config.dense_seed)
    if config.dense_source == "file":
        if embeddings is None:
            raise ValueError("dense_source='file' requires an embedding table")
        if doc_id not in embeddings.vectors:
            raise MissingEmbedding(doc_id)
        return embeddings.vectors[doc_id]
    return DenseVector(values=np.zeros(0), dim=0)


def fit_features(
    train_ds: Dataset,
    config: FeatureConfig,
    embeddings: EmbeddingTable | None = None,
) -> FeatureArtifacts:
    """Learn vocabulary, idf, and the dense standardizer from the
    training set only."""
    tokenized = _tokenize_dataset(train_ds)
    vocab = None
    idf = None
    if config.use_tfidf:
        stemmed = [stem_sequence(t) for t in tokenized]
        vocab = build_vocabulary(stemmed, cap=config.vocab_cap)
        idf = compute_idf(stemmed, vocab)

    if config.dense_source == "none":
        dense_dim = 0
        standardizer = Standardizer(mean=np.zeros(0), std=np.ones(0))
    else:
        dense_vectors = [
            _dense_for(doc.id, toks, config, embeddings)
            for doc, toks in zip(train_ds.documents, tokenized)
        ]
        dense_dim = dense_vectors[0].dim if dense_vectors else config.dense_dim
        standardizer = fit_standardizer(dense_vectors)
    return FeatureArtifacts(
        config=config, vocab=vocab, idf=idf, standardizer=standardizer, dense_dim=dense_dim
    )


def featurize(
    ds: Dataset,
    artifacts: FeatureArtifacts,
    embeddings: EmbeddingTable | None = None,
    pos_source: PosSource | None = None,
) -> list[tuple[FeatureVector, str]]:
    """Fused feature vectors for every document, in dataset order."""
    config = artifacts.config
    if pos_source is None:
        pos_source = PosSource.builtin()
    sparse_dim = len(artifacts.vocab) if config.use_tfidf and artifacts.vocab else 0
    out: list[tuple[FeatureVector, str]] = []
    for doc in ds.documents:
        tokens = tokenize_tweet(doc.text)
        if config.use_tfidf:
            sparse = tfidf_vector(stem_sequence(tokens), artifacts.vocab, artifacts.idf)
        else:
            sparse = SparseVector(entries=[], dim=sparse_dim)
        dense = _dense_for(doc.id, tokens, config, embeddings)
        extra: list[float] = []
        if config.use_noun_counts:
            nc = noun_counts(doc.id, tokens, pos_source)
            extra = [float(nc.nns), float(nc.prp)]
        out.append((fuse(dense, sparse, extra, artifacts.standardizer), doc.label))
    return out
