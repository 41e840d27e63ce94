"""Exception types shared across the toolkit.

Each carries the fields named in its constructor so callers (and the CLI)
can render precise diagnostics.
"""

from __future__ import annotations


class TextfuseError(Exception):
    """Base class for all toolkit errors."""


# --- dataset loading / splitting ---------------------------------------


class MissingFile(TextfuseError):
    def __init__(self, path):
        super().__init__(f"file not found: {path}")
        self.path = path


class MalformedRow(TextfuseError):
    def __init__(self, line_no: int, detail: str = ""):
        msg = f"malformed row at line {line_no}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line_no = line_no


class UnknownLabel(TextfuseError):
    def __init__(self, line_no: int, value: str):
        super().__init__(f"unknown label {value!r} at line {line_no}")
        self.line_no = line_no
        self.value = value


class DuplicateId(TextfuseError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate document id {doc_id!r}")
        self.doc_id = doc_id


class EmptyDataset(TextfuseError):
    pass


class DegenerateSplit(TextfuseError):
    def __init__(self, label: str, count: int, reason: str | None = None):
        super().__init__(
            reason
            or f"class {label!r} has only {count} document(s); "
            "cannot place at least one on each side of the split"
        )
        self.label = label
        self.count = count


# --- preprocessing ------------------------------------------------------


class MissingSidecarEntry(TextfuseError):
    def __init__(self, doc_id: str):
        super().__init__(f"no part-of-speech sidecar entry for document {doc_id!r}")
        self.doc_id = doc_id


# --- vectorization ------------------------------------------------------


class EmptyCorpus(TextfuseError):
    pass


class BadMagic(TextfuseError):
    def __init__(self, detail: str):
        super().__init__(detail)


class DimMismatch(TextfuseError):
    def __init__(self, detail: str, row: int | None = None):
        super().__init__(detail)
        self.row = row


class TruncatedFile(TextfuseError):
    def __init__(self, detail: str):
        super().__init__(detail)


class MissingEmbedding(TextfuseError):
    def __init__(self, doc_id: str):
        super().__init__(f"embedding table has no vector for document {doc_id!r}")
        self.doc_id = doc_id


# --- model --------------------------------------------------------------


class EmptyBatch(TextfuseError):
    pass


class EmptyTrainSet(TextfuseError):
    pass


class NonFiniteLoss(TextfuseError):
    def __init__(self, epoch: int, step: int):
        super().__init__(
            f"non-finite loss at epoch {epoch}, step {step}; "
            "lower the learning rate or the class weights"
        )
        self.epoch = epoch
        self.step = step


class VersionMismatch(TextfuseError):
    def __init__(self, found: int, expected: int):
        super().__init__(f"model file version {found}, expected {expected}")
        self.found = found
        self.expected = expected


class CorruptPayload(TextfuseError):
    def __init__(self, detail: str):
        super().__init__(detail)


# --- evaluation ---------------------------------------------------------


class LengthMismatch(TextfuseError):
    def __init__(self, n_golds: int, n_preds: int):
        super().__init__(f"{n_golds} gold labels vs {n_preds} predictions")
        self.n_golds = n_golds
        self.n_preds = n_preds


class EmptyGolds(TextfuseError):
    pass


# --- statistics ---------------------------------------------------------


class AllZeroDifferences(TextfuseError):
    pass


# --- CLI ----------------------------------------------------------------


class LayoutMismatch(TextfuseError):
    def __init__(self, detail: str):
        super().__init__(detail)
