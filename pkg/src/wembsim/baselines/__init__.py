"""Unsupervised comparison metrics: BLEU-4, ROUGE-L, CIDEr, WCD and Sinkhorn WMD."""

from .bleu import bleu4
from .cider import IdfTable, cider, cider_build_idf
from .rouge import rouge_l
from .transport import (
    SinkhornNumericalError,
    SinkhornParams,
    SinkhornResult,
    TransportProblem,
    build_problem,
    wcd,
    wmd_distance,
    wmd_similarity,
    wmd_sinkhorn,
)
