from __future__ import annotations

import numpy as np
import pytest
from scipy import sparse

from recall.corpus import Corpus, Document, load_corpus
from recall.features import FeatureMatrix, Vocabulary

TOY8_CSV = """id,title,abstract,label
d1,svm study,support vector machines for triage,yes
d2,random forest,tree ensembles on tabular data,no
d3,deep nets,convolutional networks for vision,no
d4,svm refresher,margin maximization and kernels for triage,yes
d5,database tuning,index selection for query speed,no
d6,ui design,usability heuristics and layout,no
d7,network protocols,tcp congestion control,no
d8,compilers,register allocation strategies,no
"""


@pytest.fixture(scope="session")
def toy8_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpora") / "toy8.csv"
    path.write_text(TOY8_CSV, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def toy8(toy8_path) -> Corpus:
    return load_corpus(toy8_path)


def make_corpus(texts: list[str], labels: list[str | None] | None = None) -> Corpus:
    labels = labels or [None] * len(texts)
    docs = tuple(
        Document(id=f"d{i}", title="", body=text, true_label=lab)
        for i, (text, lab) in enumerate(zip(texts, labels))
    )
    return Corpus(docs, source_path="inline")


def matrix_from_dense(dense, doc_ids: list[str]) -> FeatureMatrix:
    """Wrap a dense array as a FeatureMatrix with a synthetic vocabulary."""
    dense = np.asarray(dense, dtype=float)
    n_features = dense.shape[1]
    vocab = Vocabulary(
        index={f"f{j}": j for j in range(n_features)},
        document_frequency={f"f{j}": 1 for j in range(n_features)},
        corpus_size=dense.shape[0],
    )
    return FeatureMatrix(
        matrix=sparse.csr_matrix(dense),
        vocabulary=vocab,
        doc_ids=tuple(doc_ids),
    )
