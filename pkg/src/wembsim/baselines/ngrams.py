from collections import Counter
from typing import Sequence, Tuple

NGram = Tuple[str, ...]


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Counts of every contiguous ``n``-gram in ``tokens``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
