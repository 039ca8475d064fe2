import numpy as np
import pytest

from ptabandit.env import BipartiteInfluenceGraph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def three_movie_graph():
    """Users a,b,c = 0,1,2; movie1 -> {a,b}, movie2 -> {b,c}, movie3 -> {a}; all p = 1."""
    edges = [(1, 0), (1, 1), (2, 1), (2, 2), (3, 0)]
    return BipartiteInfluenceGraph([1, 2, 3], [0, 1, 2], edges, [1.0] * 5)
