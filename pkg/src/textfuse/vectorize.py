"""Vocabulary construction, TF-IDF, dense embeddings, and feature fusion.

The feature vector fed to the classifier is the concatenation of three
blocks: a standardized dense sentence embedding, a unit-norm TF-IDF
sparse block, and log-scaled scalar extras (noun counts).  Dense vectors
come either from an embedding file (see the EMB1 format below) or from a
deterministic hashed random-projection fallback encoder.

EMB1 binary layout, little-endian throughout::

    magic "EMB1" | u32 dim | u64 count
    per record: u16 id byte-length | id (UTF-8) | dim x f32

A TSV alternative (``id<TAB>v1,v2,...``) is accepted for
interoperability; the first row fixes the dimension.
"""

from __future__ import annotations

import math
import os
import struct
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    DuplicateId,
    EmptyCorpus,
    MalformedRow,
    MissingFile,
    TruncatedFile,
)
from .preprocess import TokenSequence
from .rng import GOLDEN64, MASK64, fnv1a64, splitmix64_mix

DEFAULT_VOCAB_CAP = 6000

_EMB_MAGIC = b"EMB1"


# --- vocabulary and TF-IDF ----------------------------------------------


@dataclass
class Vocabulary:
    terms: tuple[str, ...]
    index: dict[str, int]
    cap: int

    @classmethod
    def from_terms(cls, terms, cap: int) -> "Vocabulary":
        terms = tuple(terms)
        return cls(terms=terms, index={t: i for i, t in enumerate(terms)}, cap=cap)

    def __post_init__(self):
        if len(self.terms) > self.cap:
            raise ValueError("vocabulary exceeds its cap")
        if len(self.index) != len(self.terms):
            raise ValueError("index is not the inverse of terms")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


@dataclass
class IdfTable:
    idf: np.ndarray
    n_docs: int

    def __post_init__(self):
        self.idf = np.asarray(self.idf, dtype=np.float64)


def build_vocabulary(corpus: list[TokenSequence], cap: int = DEFAULT_VOCAB_CAP) -> Vocabulary:
    """The ``cap`` terms with highest total term frequency, ties broken
    lexicographically ascending; final term order is lexicographic."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if len(corpus) == 0:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")
    freq: Counter[str] = Counter()
    for doc in corpus:
        freq.update(doc)
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = sorted(term for term, _ in ranked[:cap])
    return Vocabulary.from_terms(kept, cap)


def compute_idf(corpus: list[TokenSequence], vocab: Vocabulary) -> IdfTable:
    """Smoothed idf: ln((1 + N) / (1 + df)) + 1, so every value is >= 1."""
    n_docs = len(corpus)
    if n_docs < 1:
        raise EmptyCorpus("idf needs at least one document")
    df = np.zeros(len(vocab), dtype=np.float64)
    for doc in corpus:
        for idx in {vocab.index[t] for t in doc if t in vocab.index}:
            df[idx] += 1
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return IdfTable(idf=idf, n_docs=n_docs)


@dataclass
class SparseVector:
    """Sorted (index, value) entries over a fixed dimension; unit L2 norm
    whenever non-empty."""

    entries: list[tuple[int, float]]
    dim: int

    def __post_init__(self):
        prev = -1
        norm_sq = 0.0
        for idx, value in self.entries:
            if idx <= prev or idx >= self.dim:
                raise ValueError("entry indices must be strictly increasing and < dim")
            if value == 0.0:
                raise ValueError("zero-valued entries are not stored")
            prev = idx
            norm_sq += value * value
        if self.entries and abs(math.sqrt(norm_sq) - 1.0) > 1e-9:
            raise ValueError("non-empty sparse vectors must have unit L2 norm")

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        for idx, value in self.entries:
            out[idx] = value
        return out


def tfidf_vector(doc: TokenSequence, vocab: Vocabulary, idf: IdfTable) -> SparseVector:
    """Raw term count x idf per in-vocabulary term, L2-normalized.
    Out-of-vocabulary tokens are ignored; an all-OOV document yields an
    empty vector."""
    if len(idf.idf) != len(vocab):
        raise DimMismatch(
            f"idf table has {len(idf.idf)} values for a vocabulary of {len(vocab)} terms"
        )
    counts: Counter[int] = Counter()
    for token in doc:
        idx = vocab.index.get(token)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return SparseVector(entries=[], dim=len(vocab))
    weights = [(idx, counts[idx] * float(idf.idf[idx])) for idx in sorted(counts)]
    norm = math.sqrt(sum(w * w for _, w in weights))
    return SparseVector(entries=[(i, w / norm) for i, w in weights], dim=len(vocab))


# --- dense embeddings ----------------------------------------------------


@dataclass
class DenseVector:
    values: np.ndarray
    dim: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("dense vectors must be finite")


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, DenseVector] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path: str) -> EmbeddingTable:
    """Read an EMB1 binary file, or the TSV alternative when the magic
    bytes are absent."""
    if not os.path.isfile(path):
        raise MissingFile(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] == _EMB_MAGIC:
        return _parse_emb1(blob)
    return _parse_embedding_tsv(blob, path)


def _parse_emb1(blob: bytes) -> EmbeddingTable:
    if len(blob) < 16:
        raise TruncatedFile("EMB1 header needs 16 bytes")
    dim = struct.unpack_from("<I", blob, 4)[0]
    count = struct.unpack_from("<Q", blob, 8)[0]
    table = EmbeddingTable(dim=dim)
    offset = 16
    for row in range(count):
        if offset + 2 > len(blob):
            raise TruncatedFile(f"record {row}: missing id length")
        (id_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if offset + id_len + 4 * dim > len(blob):
            raise TruncatedFile(f"record {row}: truncated payload")
        doc_id = blob[offset : offset + id_len].decode("utf-8")
        offset += id_len
        values = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += 4 * dim
        if doc_id in table.vectors:
            raise DuplicateId(doc_id)
        table.vectors[doc_id] = DenseVector(values=values, dim=dim)
    if offset != len(blob):
        raise TruncatedFile(f"{len(blob) - offset} trailing bytes after declared records")
    return table


def _parse_embedding_tsv(blob: bytes, path: str) -> EmbeddingTable:
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        raise BadMagic(f"{path}: not an EMB1 file and not UTF-8 text") from None
    table: EmbeddingTable | None = None
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise MalformedRow(line_no, "expected id<TAB>v1,v2,...")
        doc_id, payload = cols
        try:
            values = np.array([float(v) for v in payload.split(",")], dtype=np.float64)
        except ValueError:
            raise MalformedRow(line_no, "unparseable vector component") from None
        if table is None:
            table = EmbeddingTable(dim=len(values))
        elif len(values) != table.dim:
            raise DimMismatch(
                f"row {line_no}: vector of length {len(values)} under dim={table.dim}",
                row=line_no,
            )
        if doc_id in table.vectors:
            raise DuplicateId(doc_id)
        table.vectors[doc_id] = DenseVector(values=values, dim=table.dim)
    return table if table is not None else EmbeddingTable(dim=0)


def write_embeddings(table: EmbeddingTable, path: str, format: str = "emb1") -> None:
    if format == "emb1":
        with open(path, "wb") as fh:
            fh.write(_EMB_MAGIC)
            fh.write(struct.pack("<I", table.dim))
            fh.write(struct.pack("<Q", len(table.vectors)))
            for doc_id, vec in table.vectors.items():
                id_bytes = doc_id.encode("utf-8")
                if len(id_bytes) > 0xFFFF:
                    raise ValueError(f"id too long for EMB1: {doc_id!r}")
                fh.write(struct.pack("<H", len(id_bytes)))
                fh.write(id_bytes)
                fh.write(np.asarray(vec.values, dtype="<f4").tobytes())
    elif format == "tsv":
        with open(path, "w", encoding="utf-8") as fh:
            for doc_id, vec in table.vectors.items():
                fh.write(doc_id + "\t" + ",".join(repr(float(v)) for v in vec.values) + "\n")
    else:
        raise ValueError(f"unknown embedding format {format!r}")


# --- fallback encoder -----------------------------------------------------


@lru_cache(maxsize=1 << 18)
def _token_pattern(token: str, dim: int, seed: int) -> np.ndarray:
    """Signed projection pattern for one token.

    For dimension j the sign is bit 0 of
    ``splitmix64_mix((fnv1a64(token) + j * GOLDEN64) ^ seed)`` (all mod
    2^64): +1 when the bit is set, -1 otherwise.  This recipe is part of
    the reproducibility contract and must not change.
    """
    h = fnv1a64(token.encode("utf-8"))
    seed_u = seed & MASK64
    out = np.empty(dim, dtype=np.float64)
    for j in range(dim):
        mixed = splitmix64_mix(((h + j * GOLDEN64) & MASK64) ^ seed_u)
        out[j] = 1.0 if mixed & 1 else -1.0
    out.flags.writeable = False
    return out


def fallback_encode(tokens: TokenSequence, dim: int, seed: int) -> DenseVector:
    """Deterministic bag encoding: sum of per-token signed projection
    patterns, L2-normalized.  An empty token list gives the zero vector."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    total = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        total += _token_pattern(token, dim, seed)
    norm = float(np.linalg.norm(total))
    if norm > 0.0:
        total /= norm
    return DenseVector(values=total, dim=dim)


# --- fusion ----------------------------------------------------------------


@dataclass
class Standardizer:
    """Per-dimension (mean, std) of the training-set dense vectors.
    Dev and test vectors reuse these statistics."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != self.std.shape:
            raise ValueError("mean and std must have the same shape")

    @property
    def dim(self) -> int:
        return len(self.mean)

    @classmethod
    def identity(cls, dim: int) -> "Standardizer":
        return cls(mean=np.zeros(dim), std=np.ones(dim))


def fit_standardizer(vectors: list[DenseVector]) -> Standardizer:
    if not vectors:
        return Standardizer(mean=np.zeros(0), std=np.ones(0))
    stacked = np.stack([v.values for v in vectors])
    return Standardizer(mean=stacked.mean(axis=0), std=stacked.std(axis=0))


@dataclass
class FeatureVector:
    """Fused input: standardized dense block, unit-norm sparse block,
    log-scaled extras, with the block sizes recorded in ``layout``."""

    dense: DenseVector
    sparse: SparseVector
    extra: list[float]
    layout: tuple[int, int, int]

    def __post_init__(self):
        if self.layout != (self.dense.dim, self.sparse.dim, len(self.extra)):
            raise ValueError(f"layout {self.layout} does not match component dims")

    @property
    def total_dim(self) -> int:
        return sum(self.layout)

    def concat(self) -> np.ndarray:
        return np.concatenate(
            [self.dense.values, self.sparse.to_dense(), np.asarray(self.extra, dtype=np.float64)]
        )


def fuse(
    dense: DenseVector,
    sparse: SparseVector,
    extra: list[float],
    standardizer: Standardizer,
) -> FeatureVector:
    """Concatenate the feature blocks.

    The dense block is standardized as (x - mean) / std, except that
    dimensions with std < 1e-12 pass through uncentered.  Extras are
    non-negative counts scaled as ln(1 + count) so they do not dominate
    the unit-norm TF-IDF block.
    """
    if standardizer.dim != dense.dim:
        raise DimMismatch(
            f"standardizer covers {standardizer.dim} dims, dense vector has {dense.dim}"
        )
    for value in extra:
        if value < 0:
            raise ValueError("extra features must be non-negative counts")
    degenerate = standardizer.std < 1e-12
    standardized = np.where(
        degenerate,
        dense.values,
        (dense.values - standardizer.mean) / np.where(degenerate, 1.0, standardizer.std),
    )
    return FeatureVector(
        dense=DenseVector(values=standardized, dim=dense.dim),
        sparse=sparse,
        extra=[math.log1p(v) for v in extra],
        layout=(dense.dim, sparse.dim, len(extra)),
    )
