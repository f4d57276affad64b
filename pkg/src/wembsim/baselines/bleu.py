"""Sentence-level BLEU-4 with epsilon smoothing."""

import math
from typing import Sequence

from .ngrams import ngram_counts

SMOOTHING_EPS = 1e-9
MAX_ORDER = 4


def closest_ref_length(cand_len: int, ref_lens: Sequence[int]) -> int:
    # ties go to the shorter reference
    return min(ref_lens, key=lambda r: (abs(r - cand_len), r))


def brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len == 0:
        return 0.0
    if cand_len > ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def modified_precision(candidate: Sequence[str], references: Sequence[Sequence[str]], n: int) -> float:
    cand = ngram_counts(candidate, n)
    total = sum(cand.values())
    if total == 0:
        return 0.0
    max_ref = {}
    for ref in references:
        for g, c in ngram_counts(ref, n).items():
            if c > max_ref.get(g, 0):
                max_ref[g] = c
    clipped = sum(min(c, max_ref.get(g, 0)) for g, c in cand.items())
    return clipped / total


def bleu4(candidate: Sequence[str], references: Sequence[Sequence[str]], max_order: int = MAX_ORDER) -> float:
    """BLEU of one tokenized candidate against tokenized references.

    Zero n-gram precisions are replaced by ``SMOOTHING_EPS`` before the
    geometric mean; the brevity penalty uses the closest reference length.
    Returns 0.0 for an empty candidate.
    """
    if not references:
        raise ValueError("bleu4 needs at least one reference")
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_order + 1):
        p = modified_precision(candidate, references, n)
        log_sum += math.log(p if p > 0 else SMOOTHING_EPS)
    ref_len = closest_ref_length(len(candidate), [len(r) for r in references])
    return brevity_penalty(len(candidate), ref_len) * math.exp(log_sum / max_order)
