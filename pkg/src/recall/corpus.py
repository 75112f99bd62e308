"""Candidate pools: loading, validation, and the simulation oracle.

A corpus is an ordered, immutable pool of text documents. When every
document carries a ground-truth label the corpus can drive simulated
reviews; otherwise it is a live pool awaiting human labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

RELEVANT = "relevant"
IRRELEVANT = "irrelevant"

LABEL_VALUES = (RELEVANT, IRRELEVANT)

# CSV label tokens, case-insensitive.
_TOKEN_TO_LABEL = {"yes": RELEVANT, "no": IRRELEVANT}
_LABEL_TO_TOKEN = {RELEVANT: "yes", IRRELEVANT: "no", None: ""}

_HEADER = ["id", "title", "abstract", "label"]
_HEADER_NO_LABEL = ["id", "title", "abstract"]


class CorpusError(ValueError):
    """Raised when a corpus file violates the CSV schema or invariants."""


@dataclass(frozen=True)
class Document:
    """One candidate example in the pool.

    ``true_label`` is only present for fully labeled corpora and is read
    exclusively by the simulation oracle; live reviews never see it.
    """

    id: str
    title: str
    body: str
    true_label: str | None = None


@dataclass
class Label:
    """One human (or simulated) judgment of a document.

    ``sequence`` is the global inspection order; first-pass labels get
    unique, contiguous sequence numbers. ``rechecked`` marks labels that
    went through a second-opinion pass.
    """

    value: str
    reviewer_id: str
    sequence: int
    rechecked: bool = False


@dataclass(frozen=True)
class Corpus:
    """Ordered document pool. Immutable after load; iteration is load order."""

    documents: tuple[Document, ...]
    source_path: str = ""
    _by_id: dict[str, Document] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.documents:
            raise CorpusError("corpus must contain at least one document")
        by_id: dict[str, Document] = {}
        positions: dict[str, int] = {}
        for i, doc in enumerate(self.documents):
            if doc.id in by_id:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            by_id[doc.id] = doc
            positions[doc.id] = i
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_positions", positions)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(doc.id for doc in self.documents)

    def position(self, doc_id: str) -> int:
        """Load-order index of a document; the global tie-breaker."""
        return self._positions[doc_id]

    def is_fully_labeled(self) -> bool:
        return all(doc.true_label is not None for doc in self.documents)

    def relevant_count(self) -> int:
        """Number of ground-truth positives; requires a fully labeled pool."""
        if not self.is_fully_labeled():
            raise CorpusError("corpus not fully labeled; simulation unavailable")
        return sum(1 for doc in self.documents if doc.true_label == RELEVANT)


def load_corpus(path: str | Path, format: str = "csv") -> Corpus:
    """Load a document pool from disk.

    The CSV schema is ``id,title,abstract,label`` (header required,
    UTF-8, RFC-4180 quoting). The ``label`` column may be omitted
    entirely for live-review pools; when present its values must be
    ``yes``, ``no``, or empty. Row numbers in error messages count the
    header as row 1.
    """
    if format != "csv":
        raise CorpusError(f"unsupported corpus format {format!r}")
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusError(f"{path}: empty corpus file") from None
        if header == _HEADER:
            has_label = True
        elif header == _HEADER_NO_LABEL:
            has_label = False
        else:
            raise CorpusError(
                f"{path}: bad header {header!r}; expected {_HEADER!r} "
                f"or {_HEADER_NO_LABEL!r}"
            )

        documents: list[Document] = []
        seen: dict[str, int] = {}
        row_no = 1
        for row in reader:
            row_no += 1
            if len(row) != len(header):
                raise CorpusError(
                    f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}"
                )
            doc_id, title, body = row[0], row[1], row[2]
            if not doc_id:
                raise CorpusError(f"{path}: row {row_no} has an empty id")
            if doc_id in seen:
                raise CorpusError(
                    f"{path}: duplicate id {doc_id!r} at rows {seen[doc_id]} and {row_no}"
                )
            if not title and not body:
                raise CorpusError(
                    f"{path}: row {row_no} ({doc_id!r}) has neither title nor abstract"
                )
            true_label: str | None = None
            if has_label and row[3] != "":
                token = row[3].strip().lower()
                if token not in _TOKEN_TO_LABEL:
                    raise CorpusError(
                        f"{path}: row {row_no} has unknown label token {row[3]!r}; "
                        "expected yes, no, or empty"
                    )
                true_label = _TOKEN_TO_LABEL[token]
            seen[doc_id] = row_no
            documents.append(Document(doc_id, title, body, true_label))

    if not documents:
        raise CorpusError(f"{path}: corpus file has no data rows")
    return Corpus(tuple(documents), source_path=str(path))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to the CSV schema; inverse of :func:`load_corpus`."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_HEADER)
        for doc in corpus.documents:
            writer.writerow([doc.id, doc.title, doc.body, _LABEL_TO_TOKEN[doc.true_label]])


def oracle_label(corpus: Corpus, doc_id: str) -> str:
    """Ground-truth label of one document; the perfect-reviewer stand-in.

    Only usable on fully labeled corpora; never mutates anything.
    """
    if doc_id not in corpus:
        raise KeyError(f"unknown document id {doc_id!r}")
    label = corpus[doc_id].true_label
    if label is None:
        raise CorpusError("corpus not fully labeled; simulation unavailable")
    return label
