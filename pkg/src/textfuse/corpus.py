"""Labeled dataset loading, deterministic stratified splits, class stats.

Two on-disk formats are supported:

* ``olid-tsv`` -- UTF-8, tab-separated, header row, columns
  ``id<TAB>tweet<TAB>subtask_a[<TAB>subtask_b]``.  The label column is
  ``subtask_a`` unless ``label_column="subtask_b"`` is requested.
* ``two-column-tsv`` -- ``text<TAB>label``, no header, ids auto-assigned
  ``r<row_no>`` (1-based).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import (
    DegenerateSplit,
    DuplicateId,
    EmptyDataset,
    MalformedRow,
    MissingFile,
    UnknownLabel,
)
from .rng import SplitMix64, fisher_yates

FORMATS = ("olid-tsv", "two-column-tsv")


@dataclass(frozen=True)
class LabeledDocument:
    id: str
    text: str
    label: str


@dataclass
class Dataset:
    """An ordered, immutable-by-convention collection of labeled documents.

    ``positive_label`` names the class of interest (the minority class in
    the abuse-detection tasks, e.g. OFF or UNT); ``negative_label`` the
    other one.  Document order is load order and is stable.
    """

    documents: list[LabeledDocument]
    positive_label: str
    negative_label: str
    source: str = ""

    def __post_init__(self):
        if self.positive_label == self.negative_label:
            raise ValueError("label names must be distinct")
        for doc in self.documents:
            if doc.label not in (self.positive_label, self.negative_label):
                raise ValueError(f"document {doc.id!r} has undeclared label {doc.label!r}")

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def label_pair(self) -> tuple[str, str]:
        return (self.positive_label, self.negative_label)

    def labels(self) -> list[str]:
        return [d.label for d in self.documents]


@dataclass
class ImbalanceReport:
    total: int
    per_class: dict[str, tuple[int, float]] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [f"total\t{self.total}"]
        for label, (count, frac) in self.per_class.items():
            out.append(f"{label}\t{count}\t{frac:.4f}")
        return out


def load_dataset(
    path: str,
    format: str,
    label_pair: tuple[str, str],
    label_column: str = "subtask_a",
    source: str | None = None,
) -> Dataset:
    """Load a labeled dataset, rejecting rows whose label is not in
    ``label_pair`` (positive, negative)."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if not os.path.isfile(path):
        raise MissingFile(path)
    positive, negative = label_pair
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    docs: list[LabeledDocument] = []
    seen: set[str] = set()

    def add(doc_id: str, text: str, label: str, line_no: int) -> None:
        if label != positive and label != negative:
            raise UnknownLabel(line_no, label)
        if doc_id in seen:
            raise DuplicateId(doc_id)
        if not doc_id:
            raise MalformedRow(line_no, "empty id")
        seen.add(doc_id)
        docs.append(LabeledDocument(id=doc_id, text=text, label=label))

    if format == "olid-tsv":
        if not lines:
            raise MalformedRow(1, "missing header row")
        header = lines[0].split("\t")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise MalformedRow(1, f"header has no {label_column!r} column") from None
        for line_no, line in enumerate(lines[1:], start=2):
            cols = line.split("\t")
            if len(cols) <= max(2, label_idx):
                raise MalformedRow(line_no, f"expected at least {max(3, label_idx + 1)} columns")
            add(cols[0], cols[1], cols[label_idx], line_no)
    else:
        for line_no, line in enumerate(lines, start=1):
            cols = line.split("\t")
            if len(cols) != 2:
                raise MalformedRow(line_no, "expected text<TAB>label")
            add(f"r{line_no}", cols[0], cols[1], line_no)

    return Dataset(
        documents=docs,
        positive_label=positive,
        negative_label=negative,
        source=source if source is not None else path,
    )


def save_dataset(ds: Dataset, path: str, format: str) -> None:
    """Serialize back to disk. olid-tsv keeps ids; two-column-tsv ids are
    re-derived from row position on the next load."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    with open(path, "w", encoding="utf-8") as fh:
        if format == "olid-tsv":
            fh.write("id\ttweet\tsubtask_a\n")
            for doc in ds.documents:
                fh.write(f"{doc.id}\t{doc.text}\t{doc.label}\n")
        else:
            for doc in ds.documents:
                fh.write(f"{doc.text}\t{doc.label}\n")


def split_dataset(
    ds: Dataset, ratio: tuple[int, int], seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic stratified train/dev split.

    Within each class, document ids are sorted lexicographically and
    shuffled by Fisher-Yates driven by a splitmix64 stream seeded with
    ``seed``; classes are processed in sorted label order on the same
    stream.  The dev side of a class of size n gets
    ``max(1, floor(n * dev_part / (train_part + dev_part)))`` documents,
    so each class puts at least one document on each side.  Selected
    documents keep their original dataset order within each side.
    """
    train_part, dev_part = ratio
    if train_part <= 0 or dev_part <= 0:
        raise ValueError("ratio components must be positive")
    if len(ds) == 0:
        raise EmptyDataset("cannot split an empty dataset")

    by_label: dict[str, list[int]] = {}
    for pos, doc in enumerate(ds.documents):
        by_label.setdefault(doc.label, []).append(pos)

    for label, positions in by_label.items():
        if len(positions) < 2:
            raise DegenerateSplit(label, len(positions))

    stream = SplitMix64(seed)
    train_pos: list[int] = []
    dev_pos: list[int] = []
    for label in sorted(by_label):
        positions = sorted(by_label[label], key=lambda p: ds.documents[p].id)
        fisher_yates(positions, stream)
        n = len(positions)
        n_dev = max(1, (n * dev_part) // (train_part + dev_part))
        if n - n_dev < 1:
            raise DegenerateSplit(label, n)
        train_pos.extend(positions[: n - n_dev])
        dev_pos.extend(positions[n - n_dev :])

    def subset(positions: list[int], tag: str) -> Dataset:
        positions = sorted(positions)
        return Dataset(
            documents=[ds.documents[p] for p in positions],
            positive_label=ds.positive_label,
            negative_label=ds.negative_label,
            source=f"{ds.source}#{tag}",
        )

    return subset(train_pos, "train"), subset(dev_pos, "dev")


def class_distribution(ds: Dataset) -> ImbalanceReport:
    """Exact counts and fractions per declared class. An empty dataset
    reports total 0 with all fractions 0."""
    counts = {ds.negative_label: 0, ds.positive_label: 0}
    for doc in ds.documents:
        counts[doc.label] += 1
    total = len(ds.documents)
    per_class = {
        label: (count, count / total if total else 0.0)
        for label, count in counts.items()
    }
    return ImbalanceReport(total=total, per_class=per_class)
