"""Uniform text-in, score-out access to every metric for the harness.

All metrics are higher-is-better. Distance metrics (``wmd``, ``wcd``) are
mapped through ``exp(-d)`` and reduced with max over references, i.e. the
closest reference counts.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence

from .baselines.bleu import bleu4
from .baselines.cider import IdfTable, cider, cider_build_idf
from .baselines.rouge import rouge_l
from .baselines.transport import SinkhornParams, build_problem, solve, wcd
from .core import DEFAULT_RULE, CombiningRule, Score, wembsim_score
from .embeddings import EmbeddingTable
from .preprocess import Caption, StopwordList, filter_tokens, make_caption, tokenize

METRIC_ORDER = ("wembsim", "bleu4", "rouge_l", "cider", "wmd", "wcd")
EMBEDDING_METRICS = frozenset({"wembsim", "wmd", "wcd"})


class MetricConfigError(ValueError):
    pass


def parse_metric_list(spec: str | Iterable[str]) -> List[str]:
    """Split a comma list, drop duplicates and put names in canonical order."""
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    names = [n.strip().lower() for n in names if n.strip()]
    unknown = [n for n in names if n not in METRIC_ORDER]
    if unknown:
        raise MetricConfigError(f"unknown metric(s) {unknown}; choose from {list(METRIC_ORDER)}")
    if not names:
        raise MetricConfigError("no metrics requested")
    return [m for m in METRIC_ORDER if m in names]


class MetricSuite:
    def __init__(
        self,
        metrics: Sequence[str],
        table: Optional[EmbeddingTable] = None,
        stops: Optional[StopwordList] = None,
        rule: CombiningRule | str = DEFAULT_RULE,
        signed_cosine: bool = False,
        sinkhorn: SinkhornParams = SinkhornParams(),
    ):
        self.metrics = parse_metric_list(metrics)
        needs = EMBEDDING_METRICS.intersection(self.metrics)
        if needs and table is None:
            raise MetricConfigError(f"metric(s) {sorted(needs)} need an embedding table")
        self.table = table
        self.stops = stops if stops is not None else StopwordList.english()
        self.rule = CombiningRule.parse(rule)
        self.signed_cosine = signed_cosine
        self.sinkhorn = sinkhorn
        self.idf: Optional[Dict[int, IdfTable]] = None
        self._tokens = lru_cache(maxsize=None)(tokenize)

    def prepare(self, reference_sets: Sequence[Sequence[str]]) -> None:
        """Build corpus statistics (CIDEr idf) from per-image reference texts."""
        if "cider" in self.metrics:
            corpus = [[self._tokens(r) for r in refs] for refs in reference_sets]
            if len(corpus) < 2:
                raise MetricConfigError("cider needs a corpus of at least 2 images (reference sets)")
            self.idf = cider_build_idf(corpus)

    def _wembsim_caption(self, text: str) -> Caption:
        return make_caption(text, self.stops, self.table)

    def _vocab_tokens(self, text: str) -> List[str]:
        return filter_tokens(self._tokens(text), None, self.table)

    def score(self, metric: str, candidate: str, references: Sequence[str]) -> Score:
        if not references:
            raise ValueError("at least one reference is required")
        if metric == "wembsim":
            return wembsim_score(
                self._wembsim_caption(candidate),
                [self._wembsim_caption(r) for r in references],
                self.table,
                self.rule,
                self.signed_cosine,
            )
        if metric in ("bleu4", "rouge_l", "cider"):
            cand = self._tokens(candidate)
            refs = [self._tokens(r) for r in references]
            if metric == "cider":
                if self.idf is None:
                    raise MetricConfigError("cider requested before prepare() built the idf table")
                return cider(cand, refs, self.idf)
            if not cand:
                return Score(0.0, True)
            fn = bleu4 if metric == "bleu4" else rouge_l
            return Score(fn(cand, refs), False)
        if metric in ("wmd", "wcd"):
            cand = self._vocab_tokens(candidate)
            refs = [t for t in (self._vocab_tokens(r) for r in references) if t]
            if not cand or not refs:
                return Score(0.0, True)
            if metric == "wcd":
                dist = min(wcd(cand, r, self.table) for r in refs)
            else:
                dist = min(solve(build_problem(cand, r, self.table), self.sinkhorn).cost for r in refs)
            return Score(math.exp(-dist), False)
        raise MetricConfigError(f"unknown metric {metric!r}")

    def score_all(self, candidate: str, references: Sequence[str]) -> Dict[str, Score]:
        return {m: self.score(m, candidate, references) for m in self.metrics}
