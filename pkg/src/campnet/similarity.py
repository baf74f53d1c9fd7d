"""Feature-side regularizer matrices: cosine similarity and co-occurrence."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from campnet.corpus import Corpus

DENSE_MAX_FEATURES = 15000
SPARSE_CUTOFF = 1e-3


@dataclass
class SimilarityMatrix:
    m: int
    values: sp.csr_matrix  # symmetric, nonnegative, zero diagonal
    kind: str  # cosine | cooccurrence


def cosine_similarity(x: sp.spmatrix | np.ndarray) -> SimilarityMatrix:
    """Pairwise cosine of the columns of a nonnegative user-by-feature matrix.

    All-zero columns get zero similarity with everything; the diagonal is
    zeroed so the downstream Laplacian has no self-loop terms.
    """
    x = sp.csr_matrix(x, dtype=np.float64)
    m = x.shape[1]
    norms = np.sqrt(np.asarray(x.multiply(x).sum(axis=0)).ravel())
    inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    xn = x @ sp.diags(inv)
    if m <= DENSE_MAX_FEATURES:
        sim = (xn.T @ xn).toarray()
        np.fill_diagonal(sim, 0.0)
        values = sp.csr_matrix(sim)
    else:
        values = (xn.T @ xn).tocsr()
        values.setdiag(0)
        values.data[values.data < SPARSE_CUTOFF] = 0.0
    values.eliminate_zeros()
    return SimilarityMatrix(m=m, values=values, kind="cosine")


def hashtag_cooccurrence(c: Corpus, binarize: bool = False) -> SimilarityMatrix:
    """Number of tweets in which each hashtag pair occurs together.

    With binarize=True any co-occurring pair gets weight 1.
    """
    ix = {h: j for j, h in enumerate(c.hashtag_vocab)}
    m = len(ix)
    rows, cols = [], []
    for t_no, t in enumerate(c.tweets):
        present = sorted({ix[h] for h in t.hashtags if h in ix})
        for j in present:
            rows.append(t_no)
            cols.append(j)
    incidence = sp.coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(c.tweets), m)
    ).tocsr()
    values = (incidence.T @ incidence).tocsr()
    values.setdiag(0)
    values.eliminate_zeros()
    if binarize:
        values.data = np.ones_like(values.data)
    return SimilarityMatrix(m=m, values=values, kind="cooccurrence")


def save_similarity(s: SimilarityMatrix, path: str, feature_names: list[str] | None = None) -> None:
    """Same edge-list format as user graphs, with feature names in the header."""
    header = {"kind": s.kind, "m": s.m, "feature_names": feature_names}
    coo = s.values.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            i, j, w = int(coo.row[k]), int(coo.col[k]), float(coo.data[k])
            if i < j:
                fh.write(f"{i} {j} {w:.12g}\n")
