"""Caption similarity from the mean of word embeddings, with baseline metrics
and the statistics used to evaluate caption metrics against human judgments."""

__version__ = "0.1.0"

from .core import (
    BatchFailure,
    CombiningRule,
    DegenerateVectorError,
    OOVTokenError,
    Score,
    SentenceVector,
    batch_score,
    cosine,
    mowe,
    wembsim_score,
)
from .embeddings import (
    CoverageStats,
    EmbeddingFormatError,
    EmbeddingTable,
    coverage,
    load_embeddings,
    load_text_vectors,
    load_word2vec_binary,
    lookup,
)
from .preprocess import Caption, StopwordList, filter_tokens, make_caption, tokenize
