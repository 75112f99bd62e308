"""Deterministic bag-of-words features: tokenization, vocabulary, tf-idf.

The weighting is smoothed tf-idf over title+body tokens:

    weight(t, d) = tf(t, d) * (ln((1 + N) / (1 + df(t))) + 1)

with raw term counts for tf, followed by L2 normalization of each
nonzero row. The +1 smoothing keeps terms that occur in every document
at nonzero weight, which matters on small pools. No stemming, no
stop-word list, no pruning: every term that survives tokenization is a
feature, indexed in first-appearance order so that identical corpus
bytes always produce identical matrices.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .corpus import Corpus

_TOKEN_RE = re.compile(r"[^\W_]+")
_MIN_TOKEN_LEN = 2


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of letters/digits, dropping 1-char tokens."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= _MIN_TOKEN_LEN]


@dataclass(frozen=True)
class Vocabulary:
    """Term-to-column mapping with document frequencies."""

    index: dict[str, int]
    document_frequency: dict[str, int]
    corpus_size: int

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def idf(self, term: str) -> float:
        df = self.document_frequency[term]
        return math.log((1 + self.corpus_size) / (1 + df)) + 1.0


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-per-document sparse tf-idf matrix, row-aligned with the corpus."""

    matrix: sparse.csr_matrix
    vocabulary: Vocabulary
    doc_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_row_of", {doc_id: i for i, doc_id in enumerate(self.doc_ids)}
        )

    @property
    def n_docs(self) -> int:
        return self.matrix.shape[0]

    def row_of(self, doc_id: str) -> int:
        return self._row_of[doc_id]

    def row_pairs(self, row: int) -> list[tuple[int, float]]:
        """(column, weight) pairs of one row, sorted by column index."""
        start, end = self.matrix.indptr[row], self.matrix.indptr[row + 1]
        return list(zip(self.matrix.indices[start:end], self.matrix.data[start:end]))


def _document_tokens(doc) -> list[str]:
    # Title and body carry equal weight: one concatenated token stream.
    return tokenize(doc.title + " " + doc.body)


def build_vocabulary(corpus: Corpus) -> Vocabulary:
    """Vocabulary over all documents, terms in first-appearance order."""
    index: dict[str, int] = {}
    df: dict[str, int] = {}
    for doc in corpus:
        tokens = _document_tokens(doc)
        for term in tokens:
            if term not in index:
                index[term] = len(index)
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    if not index:
        raise ValueError("empty vocabulary: corpus has no usable tokens")
    return Vocabulary(index=index, document_frequency=df, corpus_size=len(corpus))


def vectorize(corpus: Corpus, vocab: Vocabulary) -> FeatureMatrix:
    """Sparse L2-normalized tf-idf matrix; out-of-vocabulary tokens ignored."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    idf = {term: vocab.idf(term) for term in vocab.index}
    for doc in corpus:
        counts: dict[str, int] = {}
        for term in _document_tokens(doc):
            if term in vocab.index:
                counts[term] = counts.get(term, 0) + 1
        cols = sorted(vocab.index[t] for t in counts)
        weights = np.empty(len(cols))
        col_to_term = {vocab.index[t]: t for t in counts}
        for k, col in enumerate(cols):
            term = col_to_term[col]
            weights[k] = counts[term] * idf[term]
        norm = float(np.sqrt(np.sum(weights * weights)))
        if norm > 0.0:
            weights /= norm
        indices.extend(cols)
        data.extend(weights)
        indptr.append(len(indices))
    matrix = sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int32)),
        shape=(len(corpus), len(vocab)),
    )
    return FeatureMatrix(matrix=matrix, vocabulary=vocab, doc_ids=corpus.ids)


def build_features(corpus: Corpus) -> FeatureMatrix:
    """Convenience wrapper: vocabulary plus matrix in one call."""
    return vectorize(corpus, build_vocabulary(corpus))
