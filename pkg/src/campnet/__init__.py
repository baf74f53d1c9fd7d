"""Community detection for endorsement-style social networks.

Pipeline: parse and preprocess a tweet-like corpus, build retweet/mention
graphs, filter mentions through triad structural balance to keep only
endorsement-supported edges, then cluster users with graph- and
similarity-regularized nonnegative matrix factorization.
"""

from campnet.corpus import Corpus, PreprocessConfig, Tweet, build_feature_matrices, parse_corpus, preprocess
from campnet.factorize import (
    FactorSet,
    Partition,
    SolverConfig,
    assign,
    dual_nmf,
    multi_nmf,
    tri_nmf,
)
from campnet.graph import (
    LaplacianSplit,
    UserGraph,
    build_mention_graph,
    build_retweet_graph,
    combine,
    laplacian_split,
    tsb_filter,
    tsb_filter_weighted,
)
from campnet.metrics import EvalReport, LabeledPartition, adjusted_rand_index, modularity, nmi, purity
from campnet.similarity import SimilarityMatrix, cosine_similarity, hashtag_cooccurrence
from campnet.synth import SynthConfig, generate

__version__ = "0.1.0"
