"""Mean-of-word-embeddings caption similarity.

A caption is embedded as the arithmetic mean of its word vectors; a candidate
is scored against each reference with the absolute cosine and the
per-reference similarities are reduced by a combining rule.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .embeddings import EmbeddingTable, lookup
from .preprocess import Caption


class OOVTokenError(KeyError):
    """A caption token has no row in the embedding table."""

    def __init__(self, token: str):
        super().__init__(token)
        self.token = token

    def __str__(self):
        return f"token {self.token!r} is not in the embedding vocabulary (filter captions first)"


class DegenerateVectorError(ValueError):
    """Cosine requested for a sentence vector built from zero tokens."""


class CombiningRule(enum.Enum):
    MAX = "max"
    MEAN = "mean"
    MIN = "min"

    @classmethod
    def parse(cls, value: Union[str, "CombiningRule"]) -> "CombiningRule":
        if isinstance(value, cls):
            return value
        return cls(value.lower())

    def combine(self, sims: Sequence[float]) -> float:
        if self is CombiningRule.MAX:
            return float(max(sims))
        if self is CombiningRule.MIN:
            return float(min(sims))
        return float(sum(sims) / len(sims))


DEFAULT_RULE = CombiningRule.MEAN


@dataclass(frozen=True)
class SentenceVector:
    values: np.ndarray
    source_token_count: int

    @property
    def degenerate(self) -> bool:
        return self.source_token_count == 0


@dataclass(frozen=True)
class Score:
    value: float
    degenerate: bool = False

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class BatchFailure:
    """Stands in for a Score when one batch item could not be scored."""

    index: int
    error: str


def mowe(caption: Union[Caption, Sequence[str]], table: EmbeddingTable) -> SentenceVector:
    tokens = caption.tokens if isinstance(caption, Caption) else list(caption)
    if not tokens:
        return SentenceVector(np.zeros(table.dim), 0)
    rows = []
    # summing in sorted order makes the result exactly invariant to word order
    for tok in sorted(tokens):
        vec = lookup(table, tok)
        if vec is None:
            raise OOVTokenError(tok)
        rows.append(vec)
    return SentenceVector(np.mean(rows, axis=0), len(tokens))


def cosine(a: SentenceVector, b: SentenceVector, signed: bool = False) -> float:
    """``|a.b| / (|a||b|)``; with ``signed=True`` the numerator keeps its sign."""
    if a.degenerate or b.degenerate:
        raise DegenerateVectorError("cosine is undefined for an empty caption")
    norm = np.linalg.norm(a.values) * np.linalg.norm(b.values)
    if norm == 0.0:
        # non-empty caption whose mean embedding is exactly zero
        raise DegenerateVectorError("cosine is undefined for a zero sentence vector")
    dot = float(np.dot(a.values, b.values))
    if not signed:
        dot = abs(dot)
    # rounding can push |cos| a hair past 1
    return float(np.clip(dot / norm, -1.0, 1.0))


def _similarities(candidate, references, table, signed):
    cand = mowe(candidate, table)
    if cand.degenerate:
        return None
    sims = []
    for ref in references:
        rv = mowe(ref, table)
        if rv.degenerate:
            continue
        try:
            sims.append(cosine(cand, rv, signed=signed))
        except DegenerateVectorError:
            continue
    return sims


def reference_similarities(
    candidate: Caption,
    references: Sequence[Caption],
    table: EmbeddingTable,
    signed: bool = False,
) -> List[float]:
    """Per-reference cosines, skipping degenerate references."""
    return _similarities(candidate, references, table, signed) or []


def wembsim_score(
    candidate: Caption,
    references: Sequence[Caption],
    table: EmbeddingTable,
    rule: Union[str, CombiningRule] = DEFAULT_RULE,
    signed: bool = False,
) -> Score:
    """Score ``candidate`` against ``references``.

    Degenerate references (no in-vocabulary tokens) are left out of the
    combination; if nothing is left, or the candidate itself is degenerate,
    the result is ``Score(0.0, degenerate=True)``.
    """
    if not references:
        raise ValueError("at least one reference caption is required")
    rule = CombiningRule.parse(rule)
    sims = _similarities(candidate, references, table, signed)
    if not sims:
        return Score(0.0, True)
    return Score(rule.combine(sims), False)


def batch_score(
    items: Sequence[Tuple[Caption, Sequence[Caption]]],
    table: EmbeddingTable,
    rule: Union[str, CombiningRule] = DEFAULT_RULE,
    signed: bool = False,
    workers: Optional[int] = None,
) -> List[Union[Score, BatchFailure]]:
    """Score many items; a failing item yields a ``BatchFailure`` in its slot."""
    rule = CombiningRule.parse(rule)

    def one(indexed):
        i, (cand, refs) = indexed
        try:
            return wembsim_score(cand, refs, table, rule, signed)
        except (ValueError, KeyError) as exc:
            return BatchFailure(i, str(exc))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, enumerate(items)))
    return [one(x) for x in enumerate(items)]
