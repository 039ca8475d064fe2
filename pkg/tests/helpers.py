"""Instance generators shared by the test modules."""
from ptabandit.core import Action
from ptabandit.env import generate_synthetic


def random_graph(rng, n_left=None, n_right=None, density=None):
    n_left = n_left or int(rng.integers(2, 9))
    n_right = n_right or int(rng.integers(2, 9))
    density = density or float(rng.uniform(0.3, 1.0))
    return generate_synthetic(n_left, n_right, density, (0.0, 1.0), rng)


def random_action(rng, graph, k=None):
    k = k or int(rng.integers(1, graph.n_left + 1))
    picks = rng.choice(graph.n_left, size=k, replace=False)
    return Action(graph.left_nodes[i] for i in picks)
