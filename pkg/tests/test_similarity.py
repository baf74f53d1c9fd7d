import numpy as np
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from campnet.corpus import Corpus, Tweet
from campnet.graph import laplacian_split
from campnet.similarity import cosine_similarity, hashtag_cooccurrence


def test_cosine_identical_columns():
    x = np.array([[1, 1], [2, 2], [0, 0]], dtype=float)
    s = cosine_similarity(x)
    assert abs(s.values[0, 1] - 1.0) < 1e-12
    assert s.values[0, 0] == 0  # diagonal zeroed


def test_cosine_orthogonal_columns():
    x = np.array([[1, 0], [0, 2]], dtype=float)
    s = cosine_similarity(x)
    assert s.values[0, 1] == 0


def test_cosine_hand_value():
    x = np.array([[1, 1], [1, 0], [0, 1]], dtype=float)
    s = cosine_similarity(x)
    assert abs(s.values[0, 1] - 0.5) < 1e-12


def test_cosine_zero_column():
    x = np.array([[1, 0], [1, 0]], dtype=float)
    s = cosine_similarity(x)
    assert s.values[0, 1] == 0


def test_cosine_symmetric_bounded():
    rng = np.random.default_rng(0)
    x = sp.csr_matrix(rng.random((20, 12)) * (rng.random((20, 12)) < 0.4))
    s = cosine_similarity(x).values.toarray()
    assert np.allclose(s, s.T)
    assert s.min() >= 0
    assert s.max() <= 1 + 1e-12


@settings(max_examples=30, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**16),
    st.floats(min_value=0.1, max_value=100.0, allow_nan=False),
)
def test_cosine_invariant_to_column_scaling(seed, scale):
    rng = np.random.default_rng(seed)
    x = rng.random((8, 5))
    scales = np.ones(5)
    scales[seed % 5] = scale
    s1 = cosine_similarity(x).values.toarray()
    s2 = cosine_similarity(x * scales).values.toarray()
    assert np.allclose(s1, s2, atol=1e-10)


def test_cooccurrence_never_together():
    tweets = [
        Tweet(author="u1", hashtags=("a",)),
        Tweet(author="u1", hashtags=("b",)),
    ]
    c = Corpus(users=["u1"], tweets=tweets, hashtag_vocab=["a", "b"])
    assert hashtag_cooccurrence(c).values.nnz == 0


def test_cooccurrence_single_tweet_triple():
    tweets = [Tweet(author="u1", hashtags=("a", "b", "c"))]
    c = Corpus(users=["u1"], tweets=tweets, hashtag_vocab=["a", "b", "c"])
    s = hashtag_cooccurrence(c).values.toarray()
    assert s[0, 1] == s[0, 2] == s[1, 2] == 1
    assert np.all(np.diag(s) == 0)


def test_cooccurrence_counts_tweets():
    tweets = [
        Tweet(author="u1", hashtags=("a", "b")),
        Tweet(author="u2", hashtags=("a", "b", "c")),
        Tweet(author="u1", hashtags=("c",)),
    ]
    c = Corpus(users=["u1", "u2"], tweets=tweets, hashtag_vocab=["a", "b", "c"])
    s = hashtag_cooccurrence(c).values.toarray()
    assert s[0, 1] == 2
    assert s[0, 2] == 1


def test_cooccurrence_binarize():
    tweets = [Tweet(author="u1", hashtags=("a", "b"))] * 3
    c = Corpus(users=["u1"], tweets=tweets, hashtag_vocab=["a", "b"])
    assert hashtag_cooccurrence(c, binarize=True).values[0, 1] == 1


def test_similarity_laplacian_psd():
    rng = np.random.default_rng(4)
    x = rng.random((15, 8)) * (rng.random((15, 8)) < 0.5)
    split = laplacian_split(cosine_similarity(x))
    lap = split.l_plus.toarray() - split.l_minus.toarray()
    for _ in range(10):
        v = rng.standard_normal(8)
        assert v @ lap @ v >= -1e-9
