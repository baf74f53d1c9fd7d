"""Clustering quality metrics: purity, ARI, NMI, and modularity."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from campnet.factorize import Partition
from campnet.graph import UserGraph


@dataclass
class LabeledPartition:
    predicted: Partition
    truth: list  # ground-truth class label per user index

    def __post_init__(self):
        self.predicted = _as_partition(self.predicted)
        if len(self.truth) != len(self.predicted.assignment):
            raise ValueError("predicted and truth must cover the same users")


@dataclass
class EvalReport:
    purity: float
    ari: float
    nmi: float
    k_found: int
    modularity: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "purity": self.purity,
                "ari": self.ari,
                "nmi": self.nmi,
                "modularity": self.modularity,
                "k_found": self.k_found,
            },
            sort_keys=True,
        )


def _as_partition(p) -> Partition:
    if isinstance(p, Partition):
        return p
    labels = np.asarray(p)
    return Partition(labels, k=len(np.unique(labels)))


def _contingency(lp: LabeledPartition) -> dict[tuple, int]:
    return Counter(zip(lp.predicted.assignment.tolist(), lp.truth))


def purity(lp: LabeledPartition) -> float:
    """Fraction of users in their cluster's majority class."""
    n = len(lp.truth)
    if n == 0:
        raise ValueError("empty partition")
    table = _contingency(lp)
    best: dict = {}
    for (ci, _), cnt in table.items():
        best[ci] = max(best.get(ci, 0), cnt)
    return sum(best.values()) / n


def adjusted_rand_index(lp: LabeledPartition) -> float:
    """Hubert-Arabie adjusted Rand index via the contingency-table closed form.

    Pair counts stay exact integers until the final division.
    """
    n = len(lp.truth)
    if n < 2:
        raise ValueError("ARI needs at least 2 users")
    table = _contingency(lp)
    pred_sizes = Counter(lp.predicted.assignment.tolist())
    true_sizes = Counter(lp.truth)
    sum_nij = sum(math.comb(cnt, 2) for cnt in table.values())
    sum_a = sum(math.comb(cnt, 2) for cnt in pred_sizes.values())
    sum_b = sum(math.comb(cnt, 2) for cnt in true_sizes.values())
    total = math.comb(n, 2)
    # ARI = (sum_nij - sum_a*sum_b/total) / ((sum_a+sum_b)/2 - sum_a*sum_b/total)
    numer = total * sum_nij - sum_a * sum_b
    denom = total * (sum_a + sum_b) - 2 * sum_a * sum_b
    if denom == 0:  # both partitions trivial; identical by construction
        return 1.0
    return 2.0 * numer / denom


def nmi(lp: LabeledPartition) -> float:
    """Mutual information normalized by sqrt(H(classes) * H(clusters)).

    Returns 0 when either side carries no information (single class or
    single cluster).
    """
    n = len(lp.truth)
    if n == 0:
        raise ValueError("empty partition")
    table = _contingency(lp)
    pred_sizes = Counter(lp.predicted.assignment.tolist())
    true_sizes = Counter(lp.truth)
    h_pred = -sum((c / n) * math.log(c / n) for c in pred_sizes.values())
    h_true = -sum((c / n) * math.log(c / n) for c in true_sizes.values())
    if h_pred == 0.0 or h_true == 0.0:
        return 0.0
    mi = 0.0
    for (ci, lj), cnt in table.items():
        p_joint = cnt / n
        mi += p_joint * math.log(p_joint * n * n / (pred_sizes[ci] * true_sizes[lj]))
    return mi / math.sqrt(h_pred * h_true)


def modularity(c: UserGraph, p) -> float:
    """Newman modularity of a weighted undirected graph under a partition."""
    p = _as_partition(p)
    adj = c.weights
    if len(p.assignment) != adj.shape[0]:
        raise ValueError("partition must cover all users")
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    two_m = degrees.sum()
    if two_m <= 0:
        raise ValueError("graph has no edge weight")
    labels = np.asarray(p.assignment)
    q = 0.0
    for community in np.unique(labels):
        members = np.flatnonzero(labels == community)
        sub = adj[members][:, members]
        q += sub.sum() / two_m - (degrees[members].sum() / two_m) ** 2
    return float(q)


def evaluate(lp: LabeledPartition, graph: UserGraph | None = None) -> EvalReport:
    """Bundle all metrics for one predicted partition."""
    mod = None
    if graph is not None and graph.weights.sum() > 0:
        mod = modularity(graph, lp.predicted)
    return EvalReport(
        purity=purity(lp),
        ari=adjusted_rand_index(lp),
        nmi=nmi(lp),
        k_found=len(set(lp.predicted.assignment.tolist())),
        modularity=mod,
    )
