"""Approximation oracles for probabilistic maximum coverage.

``greedy_oracle`` is the (1 - 1/e, 1)-approximation used by the learners;
``exact_oracle`` and ``gap_profile`` enumerate every size-k seed set and are
meant for small instances (tests, optimal reward, gap structure).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Action, ExpectationVector
from .env import BipartiteInfluenceGraph, DimensionMismatch, TriggeringModel

GREEDY_ALPHA = 1.0 - 1.0 / math.e
MAX_ENUMERATION = 1_000_000
# relative slack under which two rewards count as tied
TIE_RTOL = 1e-12


class OracleError(ValueError):
    pass


class BudgetTooLarge(OracleError):
    pass


class TooLarge(OracleError):
    pass


def _as_array(graph: BipartiteInfluenceGraph, estimates) -> np.ndarray:
    p = estimates.values if isinstance(estimates, ExpectationVector) else np.asarray(estimates, dtype=float)
    if p.size != graph.m:
        raise DimensionMismatch(f"expected {graph.m} estimates, got {p.size}")
    return p


def _factor_matrices(graph, trig, p):
    """Per (movie, user) 'not covered' factors when the movie is in / out of S."""
    dense = graph.dense(p)
    return 1.0 - dense, 1.0 - trig.p_star * dense


def _first_max(values: np.ndarray) -> int:
    best = values.max()
    return int(np.flatnonzero(values >= best - TIE_RTOL * max(1.0, abs(best)))[0])


def greedy_oracle(
    graph: BipartiteInfluenceGraph,
    trig: TriggeringModel,
    estimates: ExpectationVector | np.ndarray,
    k: int,
) -> Action:
    """Add the movie with the largest marginal gain, k times.

    Ties go to the smallest movie id. Always returns exactly k movies.
    """
    if k > graph.n_left:
        raise BudgetTooLarge(f"k={k} exceeds the {graph.n_left} available movies")
    if k < 1:
        raise OracleError("k must be at least 1")
    a_in, a_out = _factor_matrices(graph, trig, _as_array(graph, estimates))

    chosen = np.zeros(graph.n_left, dtype=bool)
    covered_in = np.ones(graph.n_right)  # product of in-seed factors per user
    for _ in range(k):
        rest = np.flatnonzero(~chosen)
        rows = a_out[rest]
        # product over the other out-of-seed movies, excluding each candidate
        before = np.ones_like(rows)
        after = np.ones_like(rows)
        if rest.size > 1:
            before[1:] = np.cumprod(rows[:-1], axis=0)
            after[:-1] = np.cumprod(rows[:0:-1], axis=0)[::-1]
        uncovered = covered_in * a_in[rest] * before * after
        value = graph.n_right - uncovered.sum(axis=1)
        pick = rest[_first_max(value)]
        chosen[pick] = True
        covered_in *= a_in[pick]
    return Action(graph.left_nodes[i] for i in np.flatnonzero(chosen))


def _subset_values(a_in, a_out, combos: np.ndarray) -> np.ndarray:
    """Expected reward of each row of ``combos`` (movie positions)."""
    n_left = a_in.shape[0]
    mask = np.zeros((combos.shape[0], n_left), dtype=bool)
    np.put_along_axis(mask, combos, True, axis=1)
    factors = np.where(mask[:, :, None], a_in[None], a_out[None])
    return (1.0 - factors.prod(axis=1)).sum(axis=1)


def _enumerate(graph, trig, p, k, chunk=None):
    n = graph.n_left
    if k < 1 or k > n:
        raise BudgetTooLarge(f"k={k} must be in [1, {n}]")
    total = math.comb(n, k)
    if total > MAX_ENUMERATION:
        raise TooLarge(f"C({n}, {k}) = {total} actions exceeds the enumeration guard")
    a_in, a_out = _factor_matrices(graph, trig, p)
    if chunk is None:
        chunk = max(1, 4_000_000 // max(1, n * graph.n_right))
    it = itertools.combinations(range(n), k)
    combos, values = [], []
    while True:
        block = np.array(list(itertools.islice(it, chunk)), dtype=np.intp).reshape(-1, k)
        if block.shape[0] == 0:
            break
        combos.append(block)
        values.append(_subset_values(a_in, a_out, block))
    return np.concatenate(combos), np.concatenate(values)


def exact_oracle(
    graph: BipartiteInfluenceGraph,
    trig: TriggeringModel,
    mu: ExpectationVector | np.ndarray,
    k: int,
) -> tuple[Action, float]:
    """Best size-k seed set by full enumeration; lexicographic tie-break."""
    combos, values = _enumerate(graph, trig, _as_array(graph, mu), k)
    best = _first_max(values)
    return Action(graph.left_nodes[i] for i in combos[best]), float(values[best])


@dataclass(frozen=True)
class GapProfile:
    """Optimal reward and the bad actions below alpha * r_star.

    ``bad_actions`` is sorted by ascending reward so ``gaps`` is
    non-increasing: ``gaps[0]`` is the largest shortfall.
    """

    r_star: float
    alpha: float
    bad_actions: list = field(default_factory=list)
    gaps: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_bad(self) -> int:
        return len(self.bad_actions)

    @property
    def nabla_max(self) -> float:
        return float(self.gaps[0]) if self.n_bad else 0.0

    @property
    def nabla_min(self) -> float:
        return float(self.gaps[-1]) if self.n_bad else 0.0


def gap_profile(
    graph: BipartiteInfluenceGraph,
    trig: TriggeringModel,
    mu: ExpectationVector | np.ndarray,
    k: int,
    alpha: float,
) -> GapProfile:
    combos, values = _enumerate(graph, trig, _as_array(graph, mu), k)
    r_star = float(values.max())
    threshold = alpha * r_star
    bad = np.flatnonzero(values < threshold)
    # stable sort keeps lexicographic order among equal rewards
    bad = bad[np.argsort(values[bad], kind="stable")]
    actions = [
        (Action(graph.left_nodes[i] for i in combos[b]), float(values[b])) for b in bad
    ]
    return GapProfile(r_star, alpha, actions, threshold - values[bad])
