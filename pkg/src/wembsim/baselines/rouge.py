"""ROUGE-L (longest common subsequence F-measure)."""

from typing import Sequence

BETA = 1.2


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], references: Sequence[Sequence[str]], beta: float = BETA) -> float:
    """Max over references of the LCS-based F_beta score."""
    if not references:
        raise ValueError("rouge_l needs at least one reference")
    best = 0.0
    for ref in references:
        if not candidate or not ref:
            continue
        lcs = lcs_length(candidate, ref)
        if lcs == 0:
            continue
        rec = lcs / len(ref)
        prec = lcs / len(candidate)
        f = (1 + beta ** 2) * rec * prec / (rec + beta ** 2 * prec)
        best = max(best, f)
    return best
