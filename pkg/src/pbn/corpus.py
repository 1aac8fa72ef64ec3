"""
Bag-of-words document relevance.

Documents are treated as P-kets over a keyword basis: ``P(k|Q_μ)`` is the
normalized count of keyword ``k`` in document ``μ``.  The conditional
probability of document ``μ`` given ``ν`` sums ``P(k|Q_ν)`` over the keywords
present in ``μ``, and the relevance ``R_μν`` is the symmetrized average of
the two directions.  Everything is computed with sparse products, so cost
scales with the number of shared-keyword pairs.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import CorpusParseError, EmptyDocumentError, PBNError, UnknownIdError

__all__ = [
    "SparseCorpus",
    "ingest",
    "parse_corpus",
    "term_given_doc",
    "doc_given_doc",
    "conditional_matrix",
    "relevance",
    "row_stochastic",
    "cluster",
    "write_matrix_csv",
    "clusters_json",
]


@dataclass(frozen=True, eq=False)
class SparseCorpus:
    """Document × term count matrix in CSR form."""

    docs: tuple
    vocab: tuple
    counts: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        docs, vocab = tuple(self.docs), tuple(self.vocab)
        if len(set(vocab)) != len(vocab):
            raise PBNError("vocabulary ids must be unique")
        if len(set(docs)) != len(docs):
            raise PBNError("document ids must be unique")
        counts = sp.csr_matrix(self.counts, dtype=np.int64)
        counts.eliminate_zeros()
        counts.sort_indices()
        if counts.shape != (len(docs), len(vocab)):
            raise PBNError(f"count matrix shape {counts.shape} != ({len(docs)}, {len(vocab)})")
        if counts.nnz and counts.data.min() < 0:
            raise PBNError("counts must be nonnegative")
        empty = np.flatnonzero(np.diff(counts.indptr) == 0)
        if empty.size:
            raise EmptyDocumentError(f"document {docs[empty[0]]!r} has no positive counts")
        object.__setattr__(self, "docs", docs)
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "_doc_index", {d: i for i, d in enumerate(docs)})
        object.__setattr__(self, "_term_index", {k: i for i, k in enumerate(vocab)})

    @classmethod
    def from_dense(cls, counts, docs=None, vocab=None):
        counts = np.asarray(counts)
        docs = docs if docs is not None else [f"d{i}" for i in range(counts.shape[0])]
        vocab = vocab if vocab is not None else [f"t{k}" for k in range(counts.shape[1])]
        return cls(docs, vocab, sp.csr_matrix(counts))

    @property
    def n_docs(self):
        return len(self.docs)

    @property
    def nnz(self):
        return self.counts.nnz

    def doc_index(self, doc):
        try:
            return self._doc_index[doc]
        except KeyError:
            raise UnknownIdError(f"unknown document {doc!r}") from None

    def term_index(self, term):
        try:
            return self._term_index[term]
        except KeyError:
            raise UnknownIdError(f"unknown term {term!r}") from None

    def frequencies(self):
        """Row-normalized counts ``P(k|Q_μ)`` as a CSR matrix."""
        totals = np.asarray(self.counts.sum(axis=1)).reshape(-1)
        return sp.diags(1.0 / totals) @ self.counts.astype(float)

    def indicator(self):
        """``1[q_μk > 0]`` as a CSR matrix."""
        ind = self.counts.copy().astype(float)
        ind.data[:] = 1.0
        return ind


def parse_corpus(lines):
    """Parse ``doc<TAB>term<TAB>count`` lines; ``#`` lines and blanks are skipped.

    Repeated (doc, term) pairs are summed.  Document and term order follow
    first appearance.
    """
    docs, vocab = {}, {}
    rows, cols, vals = [], [], []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusParseError(f"expected 3 tab-separated fields, got {len(parts)}", lineno)
        doc, term, count = parts
        if not doc or not term:
            raise CorpusParseError("empty document or term id", lineno)
        try:
            c = int(count)
        except ValueError:
            raise CorpusParseError(f"count {count!r} is not an integer", lineno) from None
        if c < 0:
            raise CorpusParseError(f"negative count {c}", lineno)
        rows.append(docs.setdefault(doc, len(docs)))
        cols.append(vocab.setdefault(term, len(vocab)))
        vals.append(c)
    counts = sp.coo_matrix(
        (np.array(vals, dtype=np.int64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(len(docs), len(vocab)),
    ).tocsr()
    return SparseCorpus(list(docs), list(vocab), counts)


def ingest(path):
    """Load a UTF-8 TSV corpus file."""
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def term_given_doc(corpus, term, doc):
    """``P(k|Q_μ) = q_μk / Σ_k q_μk``."""
    i = corpus.doc_index(doc)
    k = corpus.term_index(term)
    row = corpus.counts.getrow(i)
    return float(row[0, k]) / float(row.sum())


def doc_given_doc(corpus, mu, nu):
    """``P(Q_μ|Q_ν)``: the mass of ``Q_ν``'s keyword distribution on ``μ``'s keywords."""
    i, j = corpus.doc_index(mu), corpus.doc_index(nu)
    c = corpus.counts
    present = set(c.indices[c.indptr[i]:c.indptr[i + 1]])
    lo, hi = c.indptr[j], c.indptr[j + 1]
    total = float(c.data[lo:hi].sum())
    hit = sum(int(v) for k, v in zip(c.indices[lo:hi], c.data[lo:hi]) if k in present)
    return hit / total


def conditional_matrix(corpus):
    """Sparse ``C`` with ``C[μ, ν] = P(Q_μ|Q_ν)``."""
    return (corpus.indicator() @ corpus.frequencies().T).tocsr()


def relevance(corpus):
    """Sparse symmetric relevance ``R_μν = ½[P(Q_μ|Q_ν) + P(Q_ν|Q_μ)]``.

    Only pairs sharing at least one keyword are stored.
    """
    C = conditional_matrix(corpus)
    R = (0.5 * (C + C.T)).tocsr()
    R.sort_indices()
    return R


def row_stochastic(corpus):
    """Similarity ``S = Q Qᵀ`` and its row-normalized Markov matrix.

    Returns ``(S, R)`` as CSR matrices with ``R_ij = S_ij / Σ_k S_ik``.
    """
    Q = corpus.counts.astype(float)
    S = (Q @ Q.T).tocsr()
    rows = np.asarray(S.sum(axis=1)).reshape(-1)
    R = (sp.diags(1.0 / rows) @ S).tocsr()
    return S, R


def cluster(R, threshold, docs=None):
    """Connected components of the graph ``R_μν ≥ threshold``.

    Clusters are lists of document indices (or ids when ``docs`` is given),
    each sorted, and ordered by their smallest member.
    """
    if not 0.0 < threshold < 1.0:
        raise PBNError(f"threshold must lie in (0, 1), got {threshold!r}")
    R = sp.csr_matrix(R)
    A = R.copy()
    A.data = (A.data >= threshold).astype(np.int8)
    A.eliminate_zeros()
    _, labels = connected_components(A, directed=False)
    groups = {}
    for idx, lab in enumerate(labels):
        groups.setdefault(lab, []).append(idx)
    out = sorted(groups.values(), key=lambda g: g[0])
    if docs is not None:
        out = [[docs[i] for i in g] for g in out]
    return out


def write_matrix_csv(R, docs, fh):
    """Dense CSV with a header row and column of document ids."""
    dense = sp.csr_matrix(R).toarray()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([""] + list(docs))
    for d, row in zip(docs, dense):
        w.writerow([d] + [repr(float(v)) for v in row])


def clusters_json(clusters, threshold):
    return json.dumps({"clusters": clusters, "threshold": threshold}, sort_keys=True)
