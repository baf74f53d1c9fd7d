import numpy as np
import pytest
import scipy.sparse as sp

from campnet.corpus import Corpus, Tweet
from campnet.graph import (
    UserGraph,
    build_mention_graph,
    build_retweet_graph,
    combine,
    endorsement_stats,
    laplacian_split,
    load_graph,
    save_graph,
    tsb_filter,
    tsb_filter_weighted,
)
from conftest import random_symmetric


def graph_from_dense(dense, role="R"):
    dense = np.asarray(dense, dtype=float)
    return UserGraph(dense.shape[0], sp.csr_matrix(dense), role)


def make_corpus(tweets, users):
    return Corpus(users=users, tweets=tweets)


def brute_force_tsb(r, m, weighted):
    """Triple-enumeration oracle for the triad balance filters."""
    n = r.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j or m[i, j] == 0:
                continue
            path = sum(r[i, k] * r[k, j] for k in range(n))
            if weighted:
                out[i, j] = m[i, j] * (r[i, j] + path)
            elif r[i, j] > 0 or path > 0:
                out[i, j] = m[i, j]
    return out


# -- retweet / mention graph construction


def test_retweet_graph_empty():
    c = make_corpus([Tweet(author="u1", tokens=("hi",))], ["u1"])
    assert build_retweet_graph(c).weights.nnz == 0


def test_retweet_graph_counts_unedited():
    tweets = [
        Tweet(author="u1", retweet_of="u2"),
        Tweet(author="u1", retweet_of="u2"),
        Tweet(author="u1", retweet_of="u2", retweet_edited=True),
        Tweet(author="u2", retweet_of="u2"),  # self-retweet ignored
    ]
    g = build_retweet_graph(make_corpus(tweets, ["u1", "u2"]))
    assert g.weights[0, 1] == 2
    assert g.weights[1, 0] == 2
    assert g.weights[1, 1] == 0


def test_retweet_graph_fixture_hand_tabulated():
    # 3 unedited retweets among 4 users: u1->u2, u2->u1, u3->u4
    tweets = [
        Tweet(author="u1", retweet_of="u2"),
        Tweet(author="u2", retweet_of="u1"),
        Tweet(author="u3", retweet_of="u4"),
    ]
    g = build_retweet_graph(make_corpus(tweets, ["u1", "u2", "u3", "u4"]))
    expected = np.array(
        [[0, 2, 0, 0], [2, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float
    )
    assert np.array_equal(g.weights.toarray(), expected)


def test_mention_graph_empty():
    c = make_corpus([Tweet(author="u1", retweet_of="u2")], ["u1", "u2"])
    assert build_mention_graph(c).weights.nnz == 0


def test_mention_graph_counts():
    tweets = [Tweet(author="u1", mentions=("u2",)) for _ in range(3)]
    g = build_mention_graph(make_corpus(tweets, ["u1", "u2"]))
    assert g.weights[0, 1] == 3


def test_mention_graph_edited_retweet_and_mention_in_one_tweet():
    tweets = [Tweet(author="u1", mentions=("u2",), retweet_of="u2", retweet_edited=True)]
    g = build_mention_graph(make_corpus(tweets, ["u1", "u2"]))
    assert g.weights[0, 1] == 2


def test_mention_graph_fixture_hand_tabulated():
    tweets = [
        Tweet(author="u1", mentions=("u2", "u3")),
        Tweet(author="u2", retweet_of="u3", retweet_edited=True),
        Tweet(author="u3", mentions=("u1",)),
    ]
    g = build_mention_graph(make_corpus(tweets, ["u1", "u2", "u3"]))
    expected = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)
    assert np.array_equal(g.weights.toarray(), expected)


# -- triad balance filtering


def test_tsb_filter_empty_m():
    r = graph_from_dense([[0, 1], [1, 0]])
    m = graph_from_dense(np.zeros((2, 2)), "M")
    assert tsb_filter(r, m).weights.nnz == 0


def test_tsb_filter_spec_example():
    # R edges (0,1,w=1),(0,2,w=2); M edges (1,2,w=5),(1,3,w=1)
    r = np.zeros((4, 4))
    r[0, 1] = r[1, 0] = 1
    r[0, 2] = r[2, 0] = 2
    m = np.zeros((4, 4))
    m[1, 2] = m[2, 1] = 5
    m[1, 3] = m[3, 1] = 1
    dm = tsb_filter(graph_from_dense(r), graph_from_dense(m, "M"))
    expected = np.zeros((4, 4))
    expected[1, 2] = expected[2, 1] = 5  # nodes 1,2 share neighbor 0
    assert np.array_equal(dm.weights.toarray(), expected)


def test_tsb_filter_parallel_edge_kept_as_is():
    r = graph_from_dense([[0, 3], [3, 0]])
    m = graph_from_dense([[0, 7], [7, 0]], "M")
    assert tsb_filter(r, m).weights[0, 1] == 7


def test_tsb_filter_weighted_spec_examples():
    r = np.zeros((4, 4))
    r[0, 1] = r[1, 0] = 1
    r[0, 2] = r[2, 0] = 2
    m = np.zeros((4, 4))
    m[1, 2] = m[2, 1] = 5
    dmw = tsb_filter_weighted(graph_from_dense(r), graph_from_dense(m, "M"))
    assert dmw.weights[1, 2] == 5 * (0 + 1 * 2)

    r2 = graph_from_dense([[0, 3], [3, 0]])
    m2 = graph_from_dense([[0, 2], [2, 0]], "M")
    assert tsb_filter_weighted(r2, m2).weights[0, 1] == 6


def test_tsb_size_mismatch():
    with pytest.raises(ValueError):
        tsb_filter(graph_from_dense(np.zeros((2, 2))), graph_from_dense(np.zeros((3, 3)), "M"))


@pytest.mark.parametrize("seed", range(20))
def test_tsb_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 51))
    r = random_symmetric(rng, n, density=0.2, scale=3.0)
    m = random_symmetric(rng, n, density=0.2, scale=3.0)
    rg, mg = UserGraph(n, r, "R"), UserGraph(n, m, "M")
    rd, md = r.toarray(), m.toarray()
    assert np.allclose(tsb_filter(rg, mg).weights.toarray(), brute_force_tsb(rd, md, False))
    assert np.allclose(
        tsb_filter_weighted(rg, mg).weights.toarray(), brute_force_tsb(rd, md, True)
    )


def test_delta_m_subset_of_m_and_same_support():
    rng = np.random.default_rng(7)
    r = random_symmetric(rng, 30, density=0.15)
    m = random_symmetric(rng, 30, density=0.15)
    rg, mg = UserGraph(30, r, "R"), UserGraph(30, m, "M")
    dm = tsb_filter(rg, mg).weights.toarray()
    dmw = tsb_filter_weighted(rg, mg).weights.toarray()
    md = m.toarray()
    assert np.all((dm == 0) | (dm == md))
    assert np.array_equal(dm != 0, dmw != 0)


# -- combine and Laplacian split


def test_combine_identity_and_sum():
    r = graph_from_dense([[0, 2], [2, 0]])
    zero = graph_from_dense(np.zeros((2, 2)), "M")
    assert np.array_equal(combine(r, zero).weights.toarray(), r.weights.toarray())
    m = graph_from_dense([[0, 5], [5, 0]], "M")
    assert combine(r, m).weights[0, 1] == 7


def test_laplacian_split_hand_example():
    c = graph_from_dense([[0, 2], [2, 0]], "Combined")
    split = laplacian_split(c)
    assert np.array_equal(split.l_plus.toarray(), np.diag([2.0, 2.0]))
    assert np.array_equal(split.l_minus.toarray(), np.array([[0.0, 2.0], [2.0, 0.0]]))


def test_laplacian_split_zero_graph():
    c = graph_from_dense(np.zeros((3, 3)), "Combined")
    split = laplacian_split(c)
    assert split.l_plus.nnz == 0 and split.l_minus.nnz == 0


@pytest.mark.parametrize("seed", range(5))
def test_laplacian_split_properties(seed):
    rng = np.random.default_rng(seed)
    c = random_symmetric(rng, 15)
    split = laplacian_split(UserGraph(15, c, "Combined"))
    lap = split.l_plus.toarray() - split.l_minus.toarray()
    degrees = np.asarray(c.sum(axis=1)).ravel()
    assert np.allclose(lap, np.diag(degrees) - c.toarray())
    assert np.allclose(lap.sum(axis=1), 0.0)
    for _ in range(10):
        x = rng.standard_normal(15)
        assert x @ lap @ x >= -1e-9


# -- endorsement statistics


def test_endorsement_stats_single_label():
    r = graph_from_dense([[0, 1], [1, 0]])
    zero = graph_from_dense(np.zeros((2, 2)), "M")
    inner, inter = endorsement_stats(r, zero, ["x", "x"])
    assert inter == 0


def test_endorsement_stats_two_camps():
    # three inner edges weight 1, one cross edge weight 1
    dense = np.zeros((4, 4))
    dense[0, 1] = dense[1, 0] = 1  # inner camp A
    dense[2, 3] = dense[3, 2] = 1  # inner camp B
    dense[0, 2] = dense[2, 0] = 1  # cross
    r = graph_from_dense(dense)
    m = np.zeros((4, 4))
    m[1, 0] = m[0, 1] = 1  # doubles an inner edge
    inner, inter = endorsement_stats(r, graph_from_dense(m, "M"), ["a", "a", "b", "b"])
    assert (inner, inter) == (3, 1)
    inner_c, inter_c = endorsement_stats(
        r, graph_from_dense(m, "M"), ["a", "a", "b", "b"], weighted=False
    )
    assert (inner_c, inter_c) == (2, 1)


def test_endorsement_stats_missing_labels():
    r = graph_from_dense([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        endorsement_stats(r, r, ["x"])


# -- serialization


def test_graph_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    g = UserGraph(10, random_symmetric(rng, 10), "DeltaMw")
    path = tmp_path / "g.edges"
    save_graph(g, str(path), node_ids=[f"u{i}" for i in range(10)])
    loaded, ids = load_graph(str(path))
    assert loaded.role == "DeltaMw"
    assert ids == [f"u{i}" for i in range(10)]
    assert np.allclose(loaded.weights.toarray(), g.weights.toarray())
