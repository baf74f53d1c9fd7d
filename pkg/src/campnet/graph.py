"""User interaction graphs, triad-balance filtering, and Laplacian splits.

Unedited retweets are treated as unambiguous endorsements (graph R).
Mentions and edited retweets (graph M) are ambiguous; the triad balance
rule keeps an M edge only when it runs parallel to an R edge or closes a
triangle whose other two sides are R edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from campnet.corpus import Corpus

DENSE_FALLBACK_MAX_N = 2000


@dataclass
class UserGraph:
    n: int
    weights: sp.csr_matrix  # symmetric, zero diagonal, nonnegative
    role: str  # R | M | DeltaM | DeltaMw | Combined


@dataclass
class LaplacianSplit:
    """Elementwise nonnegative split of L = D - A: l_plus = D, l_minus = A."""

    l_plus: sp.csr_matrix
    l_minus: sp.csr_matrix


def _symmetric_from_pairs(n: int, pairs: list[tuple[int, int, float]]) -> sp.csr_matrix:
    if not pairs:
        return sp.csr_matrix((n, n))
    rows, cols, data = [], [], []
    for i, j, w in pairs:
        rows += [i, j]
        cols += [j, i]
        data += [w, w]
    mat = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def build_retweet_graph(c: Corpus) -> UserGraph:
    """Symmetrized counts of unedited retweets (endorsement edges)."""
    ix = {u: i for i, u in enumerate(c.users)}
    pairs = []
    for t in c.tweets:
        if t.retweet_of is None or t.retweet_edited:
            continue
        u = ix.get(t.author)
        v = ix.get(t.retweet_of)
        if u is None or v is None or u == v:
            continue
        pairs.append((u, v, 1.0))
    return UserGraph(len(c.users), _symmetric_from_pairs(len(c.users), pairs), "R")


def build_mention_graph(c: Corpus) -> UserGraph:
    """Symmetrized counts of mentions plus edited retweets."""
    ix = {u: i for i, u in enumerate(c.users)}
    pairs = []
    for t in c.tweets:
        u = ix.get(t.author)
        if u is None:
            continue
        targets = list(t.mentions)
        if t.retweet_of is not None and t.retweet_edited:
            targets.append(t.retweet_of)
        for tgt in targets:
            v = ix.get(tgt)
            if v is None or v == u:
                continue
            pairs.append((u, v, 1.0))
    return UserGraph(len(c.users), _symmetric_from_pairs(len(c.users), pairs), "M")


def _check_same_size(a: UserGraph, b: UserGraph) -> None:
    if a.n != b.n:
        raise ValueError(f"graph size mismatch: {a.n} != {b.n}")


def _triad_support(r: sp.csr_matrix) -> sp.csr_matrix:
    """R_ij + sum_k R_ik R_kj, with the diagonal zeroed."""
    support = (r + r @ r).tocsr()
    support.setdiag(0)
    support.eliminate_zeros()
    return support


def tsb_filter(r_graph: UserGraph, m_graph: UserGraph) -> UserGraph:
    """Keep M edges parallel to an R edge or closing an R-R triangle."""
    _check_same_size(r_graph, m_graph)
    support = _triad_support(r_graph.weights)
    mask = support.copy()
    mask.data = np.ones_like(mask.data)
    filtered = m_graph.weights.multiply(mask).tocsr()
    filtered.eliminate_zeros()
    return UserGraph(r_graph.n, filtered, "DeltaM")


def tsb_filter_weighted(r_graph: UserGraph, m_graph: UserGraph) -> UserGraph:
    """As tsb_filter, but each kept edge is reweighted by its R support."""
    _check_same_size(r_graph, m_graph)
    support = _triad_support(r_graph.weights)
    filtered = m_graph.weights.multiply(support).tocsr()
    filtered.eliminate_zeros()
    return UserGraph(r_graph.n, filtered, "DeltaMw")


def combine(r_graph: UserGraph, m_variant: UserGraph) -> UserGraph:
    """Elementwise sum; the connectivity regularizer fed to the solvers."""
    _check_same_size(r_graph, m_variant)
    return UserGraph(r_graph.n, (r_graph.weights + m_variant.weights).tocsr(), "Combined")


def _adjacency(obj) -> sp.csr_matrix:
    if isinstance(obj, UserGraph):
        return obj.weights
    if hasattr(obj, "values") and hasattr(obj, "kind"):  # SimilarityMatrix
        return obj.values
    return sp.csr_matrix(obj)


def laplacian_split(obj) -> LaplacianSplit:
    """Split L = D - A of a symmetric nonnegative zero-diagonal matrix.

    For this sign structure the elementwise-positive part of L is exactly
    the degree diagonal and the negative part is A itself.
    """
    adj = _adjacency(obj)
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    l_plus = sp.diags(degrees, format="csr", shape=adj.shape)
    return LaplacianSplit(l_plus=l_plus, l_minus=adj.tocsr())


def endorsement_stats(
    r_graph: UserGraph,
    m_variant: UserGraph,
    labels: list,
    weighted: bool = True,
) -> tuple[float, float]:
    """Inner- vs inter-group totals for the combined graph R + Mvariant.

    `labels` gives one group label per user index; weighted sums edge
    weights, otherwise edges are counted.
    """
    combined = combine(r_graph, m_variant).weights
    if len(labels) != combined.shape[0]:
        raise ValueError("labels must cover all users")
    coo = combined.tocoo()
    inner = inter = 0.0
    for i, j, w in zip(coo.row, coo.col, coo.data):
        if i >= j:  # each undirected edge once
            continue
        val = w if weighted else 1.0
        if labels[i] == labels[j]:
            inner += val
        else:
            inter += val
    return inner, inter


def save_graph(g: UserGraph, path: str, node_ids: list[str] | None = None) -> None:
    """Edge-list text: JSON header line, then `i j weight` per edge (i < j)."""
    header = {"role": g.role, "n": g.n, "node_ids": node_ids}
    coo = g.weights.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            i, j, w = int(coo.row[k]), int(coo.col[k]), float(coo.data[k])
            if i < j:
                fh.write(f"{i} {j} {w:.12g}\n")


def load_graph(path: str) -> tuple[UserGraph, list[str] | None]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("missing graph header line")
        header = json.loads(first[2:])
        pairs = []
        for line in fh:
            if not line.strip():
                continue
            i, j, w = line.split()
            pairs.append((int(i), int(j), float(w)))
    g = UserGraph(header["n"], _symmetric_from_pairs(header["n"], pairs), header["role"])
    return g, header.get("node_ids")
