"""Word centroid distance and entropic (Sinkhorn) word mover's distance."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numba
import numpy as np

from ..core import DegenerateVectorError, mowe
from ..embeddings import EmbeddingTable, lookup
from ..preprocess import Caption


class SinkhornNumericalError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TransportProblem:
    source_weights: np.ndarray
    target_weights: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        a, b, c = self.source_weights, self.target_weights, self.cost
        if c.shape != (a.size, b.size):
            raise ValueError(f"cost shape {c.shape} does not match weights ({a.size}, {b.size})")
        for w in (a, b):
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError("weights must be nonnegative and sum to 1")
        if np.any(c < 0):
            raise ValueError("cost entries must be nonnegative")

    def transposed(self) -> "TransportProblem":
        return TransportProblem(self.target_weights, self.source_weights, self.cost.T)


class SinkhornResult(NamedTuple):
    cost: float
    converged: bool
    plan: np.ndarray
    iterations: int


@dataclass(frozen=True)
class SinkhornParams:
    """``epsilon`` overrides ``epsilon_scale * mean(cost)`` when set."""

    epsilon_scale: float = 0.05
    epsilon: Optional[float] = None
    max_iter: int = 1000
    tol: float = 1e-6

    def resolve_epsilon(self, cost: np.ndarray) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return self.epsilon_scale * float(cost.mean())


def _tokens(caption):
    return caption.tokens if isinstance(caption, Caption) else list(caption)


def nbow(tokens: Sequence[str]):
    """Unique words (first-seen order) and their normalized frequencies."""
    counts = Counter(tokens)
    words = list(counts)
    weights = np.array([counts[w] for w in words], dtype=np.float64)
    return words, weights / weights.sum()


def euclidean_cost(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    sq = (x * x).sum(axis=1)[:, None] + (y * y).sum(axis=1)[None, :] - 2.0 * (x @ y.T)
    return np.sqrt(np.maximum(sq, 0.0))


def build_problem(
    candidate: Union[Caption, Sequence[str]],
    reference: Union[Caption, Sequence[str]],
    table: EmbeddingTable,
) -> TransportProblem:
    """nBOW transport problem over the in-vocabulary tokens of both captions."""
    sides = []
    for cap in (candidate, reference):
        toks = [t for t in _tokens(cap) if lookup(table, t) is not None]
        if not toks:
            raise DegenerateVectorError("caption has no in-vocabulary tokens")
        words, weights = nbow(toks)
        vecs = np.array([lookup(table, w) for w in words])
        sides.append((weights, vecs))
    (a, xa), (b, xb) = sides
    return TransportProblem(a, b, euclidean_cost(xa, xb))


def wcd(candidate, reference, table: EmbeddingTable) -> float:
    """Euclidean distance between the two mean embeddings."""
    c, r = mowe(candidate, table), mowe(reference, table)
    if c.degenerate or r.degenerate:
        raise DegenerateVectorError("word centroid distance needs non-empty captions")
    return float(np.linalg.norm(c.values - r.values))


@numba.njit(cache=True)
def _sinkhorn_log(kernel, a, log_a, log_b, f, max_iter, tol):
    # kernel = -cost / epsilon; potentials f, g are likewise scaled by 1/epsilon
    n, m = kernel.shape
    g = np.empty(m)
    row = np.empty(n)
    for j in range(m):
        top = -np.inf
        for i in range(n):
            top = max(top, kernel[i, j] + f[i])
        s = 0.0
        for i in range(n):
            s += math.exp(kernel[i, j] + f[i] - top)
        g[j] = log_b[j] - (math.log(s) + top)
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        # row log-sums; exp(f + row) are the current plan's row marginals
        err = 0.0
        for i in range(n):
            top = -np.inf
            for j in range(m):
                top = max(top, kernel[i, j] + g[j])
            s = 0.0
            for j in range(m):
                s += math.exp(kernel[i, j] + g[j] - top)
            row[i] = math.log(s) + top
            err += abs(math.exp(f[i] + row[i]) - a[i])
        if err < tol:
            converged = True
            break
        for i in range(n):
            f[i] = log_a[i] - row[i]
        for j in range(m):
            top = -np.inf
            for i in range(n):
                top = max(top, kernel[i, j] + f[i])
            s = 0.0
            for i in range(n):
                s += math.exp(kernel[i, j] + f[i] - top)
            g[j] = log_b[j] - (math.log(s) + top)
    return f, g, it, converged


def wmd_sinkhorn(
    problem: TransportProblem,
    epsilon: float,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> SinkhornResult:
    """Entropic OT between the nBOW marginals, solved in the log domain.

    Alternates the two dual potential updates; after each sweep the column
    marginals hold exactly and convergence is declared once the L1 violation
    of the row marginals drops below ``tol``. The returned cost is the
    transport cost of the final plan, without the entropy term.

    Near-degenerate problems can contract very slowly once
    ``max(cost) / epsilon`` is large; the plan is then returned with
    ``converged=False`` after ``max_iter`` sweeps.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    a, b, C = problem.source_weights, problem.target_weights, problem.cost
    ia, ib = a > 0, b > 0
    if not (ia.all() and ib.all()):
        a, b, Cs = a[ia], b[ib], C[np.ix_(ia, ib)]
    else:
        Cs = C
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        kernel = np.ascontiguousarray(-Cs / epsilon, dtype=np.float64)
        f, g, it, converged = _sinkhorn_log(
            kernel, a, np.log(a), np.log(b), np.zeros(a.size), max_iter, tol
        )
        P = np.exp(kernel + f[:, None] + g[None, :])
    if not (np.isfinite(P).all() and np.isfinite(f).all() and np.isfinite(g).all()):
        raise SinkhornNumericalError(
            f"Sinkhorn produced non-finite values at epsilon={epsilon:g}; use a larger epsilon"
        )
    if Cs is not C:
        plan = np.zeros_like(C)
        plan[np.ix_(ia, ib)] = P
    else:
        plan = P
    return SinkhornResult(float((P * Cs).sum()), bool(converged), plan, int(it))


def solve(problem: TransportProblem, params: SinkhornParams = SinkhornParams()) -> SinkhornResult:
    """``wmd_sinkhorn`` with epsilon resolved from ``params``."""
    eps = params.resolve_epsilon(problem.cost)
    if eps == 0.0:
        # all-zero cost: every coupling is free
        plan = np.outer(problem.source_weights, problem.target_weights)
        return SinkhornResult(0.0, True, plan, 0)
    return wmd_sinkhorn(problem, eps, params.max_iter, params.tol)


def wmd_distance(candidate, reference, table: EmbeddingTable, params: SinkhornParams = SinkhornParams()) -> float:
    return solve(build_problem(candidate, reference, table), params).cost


def wmd_similarity(candidate, reference, table: EmbeddingTable, params: SinkhornParams = SinkhornParams()) -> float:
    """``exp(-distance)``: maps the Sinkhorn WMD into (0, 1], higher is closer."""
    return math.exp(-wmd_distance(candidate, reference, table, params))
