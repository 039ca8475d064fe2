"""Bipartite probabilistic-maximum-coverage environment with triggered arms.

Each edge (movie, user) is an arm with a Bernoulli state of mean p_{i,j}.
Playing a seed set S triggers every outgoing edge of a movie in S, and each
remaining edge independently with probability p*. A user is attracted when
at least one of its edges is both triggered and in state 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Action, EpochFeedback, ExpectationVector, OutOfRange


class EnvError(ValueError):
    pass


class InvalidAction(EnvError):
    pass


class DimensionMismatch(EnvError):
    pass


class InvalidRange(EnvError):
    pass


class GraphFormatError(EnvError):
    pass


class BipartiteInfluenceGraph:
    """Movies (left), users (right) and weighted edges between them.

    Edges are stored in the order given; an edge's position is its arm id.
    Left and right node lists are kept sorted so that positional order
    matches id order.
    """

    def __init__(
        self,
        left_nodes: Iterable[int],
        right_nodes: Iterable[int],
        edges: Sequence[tuple[int, int]],
        influence_probs: Sequence[float] | np.ndarray,
    ):
        self.left_nodes = sorted(set(left_nodes))
        self.right_nodes = sorted(set(right_nodes))
        self.edges = [(int(i), int(j)) for i, j in edges]
        probs = np.array(influence_probs, dtype=np.float64, copy=True).reshape(-1)

        if len(self.edges) != probs.size:
            raise DimensionMismatch(
                f"{len(self.edges)} edges but {probs.size} influence probabilities"
            )
        if len(set(self.edges)) != len(self.edges):
            raise EnvError("duplicate edges")
        if probs.size and not ((probs >= 0) & (probs <= 1)).all():
            raise OutOfRange("influence probabilities must lie in [0, 1]")

        self.movie_index = {mv: n for n, mv in enumerate(self.left_nodes)}
        self.user_index = {u: n for n, u in enumerate(self.right_nodes)}
        try:
            self.edge_left = np.array([self.movie_index[i] for i, _ in self.edges], dtype=np.intp)
            self.edge_right = np.array([self.user_index[j] for _, j in self.edges], dtype=np.intp)
        except KeyError as exc:
            raise EnvError(f"edge endpoint {exc.args[0]!r} is not a graph node") from None
        probs.flags.writeable = False
        self.influence_probs = probs

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def n_left(self) -> int:
        return len(self.left_nodes)

    @property
    def n_right(self) -> int:
        return len(self.right_nodes)

    def mu(self) -> ExpectationVector:
        """True expectation vector (one entry per edge)."""
        return ExpectationVector(self.influence_probs)

    def seed_mask(self, action: Action) -> np.ndarray:
        """Boolean mask over left-node positions for the movies in ``action``."""
        mask = np.zeros(self.n_left, dtype=bool)
        for movie in action.seed_set:
            pos = self.movie_index.get(movie)
            if pos is None:
                raise InvalidAction(f"movie {movie!r} is not in the graph")
            mask[pos] = True
        return mask

    def dense(self, values: np.ndarray) -> np.ndarray:
        """Scatter per-edge values into a (movies x users) matrix, zero elsewhere."""
        out = np.zeros((self.n_left, self.n_right))
        out[self.edge_left, self.edge_right] = values
        return out

    def __eq__(self, other):
        if not isinstance(other, BipartiteInfluenceGraph):
            return NotImplemented
        return (
            self.left_nodes == other.left_nodes
            and self.right_nodes == other.right_nodes
            and self.edges == other.edges
            and np.array_equal(self.influence_probs, other.influence_probs)
        )

    def __repr__(self):
        return f"BipartiteInfluenceGraph(|L|={self.n_left}, |R|={self.n_right}, |E|={self.m})"


@dataclass(frozen=True)
class TriggeringModel:
    """Out-of-seed edges are triggered with probability ``p_star``."""

    p_star: float

    def __post_init__(self):
        # p_star = 0 is tolerated for plain max-coverage instances (oracle tests);
        # the bandit harness requires p_star > 0 through ProblemParams.
        if not 0.0 <= self.p_star <= 1.0:
            raise OutOfRange(f"p_star must be in [0, 1], got {self.p_star}")

    def edge_probs(self, graph: BipartiteInfluenceGraph, action: Action) -> np.ndarray:
        """Per-edge triggering probability p_S^{i,j} under ``action``."""
        in_seed = graph.seed_mask(action)[graph.edge_left]
        return np.where(in_seed, 1.0, self.p_star)


def step(
    graph: BipartiteInfluenceGraph,
    trig: TriggeringModel,
    action: Action,
    rng: np.random.Generator,
) -> EpochFeedback:
    """Play ``action`` for one epoch and reveal the triggered arms' states."""
    ps = trig.edge_probs(graph, action)
    triggered = rng.random(graph.m) < ps
    states = rng.random(graph.m) < graph.influence_probs
    hit = triggered & states
    attracted = np.unique(graph.edge_right[hit]).size
    idx = np.flatnonzero(triggered)
    return EpochFeedback(
        triggered=idx,
        states=states[idx].astype(np.int8),
        realized_reward=float(attracted),
    )


def expected_reward(
    graph: BipartiteInfluenceGraph,
    trig: TriggeringModel,
    action: Action,
    probs: ExpectationVector | np.ndarray,
) -> float:
    """Expected number of attracted users, one pass over the edge list."""
    p = probs.values if isinstance(probs, ExpectationVector) else np.asarray(probs, dtype=float)
    if p.size != graph.m:
        raise DimensionMismatch(f"expected {graph.m} probabilities, got {p.size}")
    factors = 1.0 - trig.edge_probs(graph, action) * p
    not_covered = np.ones(graph.n_right)
    np.multiply.at(not_covered, graph.edge_right, factors)
    return float(np.sum(1.0 - not_covered))


def generate_synthetic(
    num_movies: int,
    num_users: int,
    edge_density: float,
    prob_range: tuple[float, float],
    rng: np.random.Generator,
    max_tries: int = 10_000,
) -> BipartiteInfluenceGraph:
    """Random bipartite graph where every node has at least one edge."""
    lo, hi = prob_range
    if not 0.0 <= lo <= hi <= 1.0:
        raise InvalidRange(f"prob_range must satisfy 0 <= lo <= hi <= 1, got {prob_range}")
    if not 0.0 < edge_density <= 1.0:
        raise InvalidRange(f"edge_density must be in (0, 1], got {edge_density}")
    if num_movies < 1 or num_users < 1:
        raise InvalidRange("need at least one movie and one user")

    for _ in range(max_tries):
        adj = rng.random((num_movies, num_users)) < edge_density
        if adj.any(axis=1).all() and adj.any(axis=0).all():
            break
    else:
        raise InvalidRange("could not draw a graph without isolated nodes; raise edge_density")

    rows, cols = np.nonzero(adj)
    probs = rng.uniform(lo, hi, size=rows.size)
    edges = list(zip(rows.tolist(), cols.tolist()))
    return BipartiteInfluenceGraph(range(num_movies), range(num_users), edges, probs)


def write_graph(graph: BipartiteInfluenceGraph, path: str | Path) -> None:
    """Edge-list text format: ``movies,users,edges`` counts, then ``movie,user,prob`` rows."""
    lines = [f"{graph.n_left},{graph.n_right},{graph.m}"]
    lines += [f"{i},{j},{p:.17g}" for (i, j), p in zip(graph.edges, graph.influence_probs)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph(path: str | Path) -> BipartiteInfluenceGraph:
    text = Path(path).read_text(encoding="utf-8")
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise GraphFormatError(f"{path}: empty graph file")
    try:
        n_left, n_right, n_edges = (int(x) for x in rows[0].split(","))
    except ValueError:
        raise GraphFormatError(f"{path}:1: header must be 'movies,users,edges' counts") from None

    edges, probs = [], []
    for line_no, row in enumerate(rows[1:], start=2):
        parts = row.split(",")
        if len(parts) != 3:
            raise GraphFormatError(f"{path}:{line_no}: expected movie_id,user_id,prob")
        try:
            edges.append((int(parts[0]), int(parts[1])))
            probs.append(float(parts[2]))
        except ValueError:
            raise GraphFormatError(f"{path}:{line_no}: could not parse {row!r}") from None
    if len(edges) != n_edges:
        raise GraphFormatError(f"{path}: header announces {n_edges} edges, found {len(edges)}")

    graph = BipartiteInfluenceGraph(
        {i for i, _ in edges}, {j for _, j in edges}, edges, probs
    )
    if graph.n_left != n_left or graph.n_right != n_right:
        raise GraphFormatError(
            f"{path}: header announces {n_left} movies and {n_right} users, "
            f"edges cover {graph.n_left} and {graph.n_right}"
        )
    return graph
