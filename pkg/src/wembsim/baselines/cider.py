"""Plain CIDEr (tf-idf n-gram cosine, no length penalty)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence

from ..core import Score
from .ngrams import NGram, ngram_counts

MAX_ORDER = 4
SCALE = 10.0


@dataclass(frozen=True)
class IdfTable:
    order: int
    doc_count: int
    df: Dict[NGram, int] = field(default_factory=dict)

    def idf(self, gram: NGram) -> float:
        # unseen n-grams behave as if df were 1
        return math.log(self.doc_count / self.df.get(gram, 1))


def cider_build_idf(corpus: Sequence[Sequence[Sequence[str]]], max_order: int = MAX_ORDER) -> Dict[int, IdfTable]:
    """Document frequencies over images; each corpus item is one image's reference set."""
    if len(corpus) < 2:
        raise ValueError("CIDEr idf needs a corpus of at least 2 images")
    tables = {}
    for n in range(1, max_order + 1):
        df: Dict[NGram, int] = {}
        for refs in corpus:
            grams = set()
            for ref in refs:
                grams.update(ngram_counts(ref, n))
            for g in grams:
                df[g] = df.get(g, 0) + 1
        tables[n] = IdfTable(order=n, doc_count=len(corpus), df=df)
    return tables


def _tfidf_norm(counts, total, table):
    return math.sqrt(sum((c / total * table.idf(g)) ** 2 for g, c in counts.items()))


def cider(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    idf: Dict[int, IdfTable],
) -> Score:
    """CIDEr of one candidate, scaled by 10.

    Candidate n-gram counts are clipped to the reference counts in the dot
    product. ``degenerate`` is set when every tf-idf vector pairing has zero
    norm (e.g. every idf weight is zero or the candidate is empty).
    """
    if not references:
        raise ValueError("cider needs at least one reference")
    max_order = max(idf)
    any_defined = False
    per_order = []
    for n in range(1, max_order + 1):
        table = idf[n]
        cand = ngram_counts(candidate, n)
        cand_total = sum(cand.values())
        cand_norm = _tfidf_norm(cand, cand_total, table) if cand_total else 0.0
        sims = []
        for ref in references:
            rc = ngram_counts(ref, n)
            ref_total = sum(rc.values())
            ref_norm = _tfidf_norm(rc, ref_total, table) if ref_total else 0.0
            if cand_norm == 0.0 or ref_norm == 0.0:
                sims.append(0.0)
                continue
            any_defined = True
            dot = 0.0
            for g, c in cand.items():
                r = rc.get(g)
                if r:
                    w = table.idf(g) ** 2
                    dot += (min(c, r) / cand_total) * (r / ref_total) * w
            sims.append(dot / (cand_norm * ref_norm))
        per_order.append(sum(sims) / len(sims))
    if not any_defined:
        return Score(0.0, True)
    return Score(SCALE * sum(per_order) / len(per_order), False)
