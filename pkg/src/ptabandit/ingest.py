"""Build a movie/user influence graph from a ratings corpus.

Input files follow the public MovieLens CSV layout::

    ratings: userId,movieId,rating,timestamp
    movies:  movieId,title,genres        (genres pipe-separated)
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .env import BipartiteInfluenceGraph

GENRES = (
    "Action", "Adventure", "Animation", "Children", "Comedy", "Crime",
    "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "IMAX",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
    "(no genres listed)",
)
GENRE_INDEX = {g: n for n, g in enumerate(GENRES)}
N_GENRES = len(GENRES)

RATINGS_HEADER = ["userId", "movieId", "rating", "timestamp"]
MOVIES_HEADER = ["movieId", "title", "genres"]


class IngestError(ValueError):
    pass


class MalformedRow(IngestError):
    def __init__(self, path, line_no: int, detail: str):
        super().__init__(f"{path}:{line_no}: {detail}")
        self.line_no = line_no


class UnknownMovie(IngestError):
    pass


class UnknownGenre(IngestError):
    pass


class InsufficientMovies(IngestError):
    pass


class GenrelessMovie(IngestError):
    pass


@dataclass
class RatingsCorpus:
    users: np.ndarray
    movies_rated: np.ndarray
    ratings: np.ndarray
    timestamps: np.ndarray
    movies: dict  # movie id -> (title, tuple of genres)

    def __len__(self) -> int:
        return self.ratings.size

    def genre_vector(self, movie_id: int) -> np.ndarray:
        g = np.zeros(N_GENRES)
        for name in self.movies[movie_id][1]:
            g[GENRE_INDEX[name]] = 1.0
        return g

    def rating_stats(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(movie ids, rating counts, mean ratings) over rated movies, ids ascending."""
        ids, inv, counts = np.unique(self.movies_rated, return_inverse=True, return_counts=True)
        sums = np.bincount(inv, weights=self.ratings)
        return ids, counts, sums / counts


def _read_rows(path, header):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [h.strip() for h in first] != header:
            raise MalformedRow(path, 1, f"expected header {','.join(header)}")
        for row in reader:
            yield reader.line_num, row


def parse_corpus(
    ratings_path: str | Path,
    movies_path: str | Path,
    min_timestamp: int | None = None,
    max_timestamp: int | None = None,
) -> RatingsCorpus:
    """Read and validate both files; optional timestamp window is inclusive."""
    movies = {}
    for line_no, row in _read_rows(movies_path, MOVIES_HEADER):
        if len(row) != 3:
            raise MalformedRow(movies_path, line_no, f"expected 3 fields, got {len(row)}")
        try:
            movie_id = int(row[0])
        except ValueError:
            raise MalformedRow(movies_path, line_no, f"bad movieId {row[0]!r}") from None
        genres = tuple(g for g in row[2].split("|") if g)
        for g in genres:
            if g not in GENRE_INDEX:
                raise UnknownGenre(f"{movies_path}:{line_no}: unknown genre {g!r}")
        movies[movie_id] = (row[1], genres)

    users, rated, values, stamps = [], [], [], []
    for line_no, row in _read_rows(ratings_path, RATINGS_HEADER):
        if len(row) != 4:
            raise MalformedRow(ratings_path, line_no, f"expected 4 fields, got {len(row)}")
        try:
            u, mv, r, ts = int(row[0]), int(row[1]), float(row[2]), int(row[3])
        except ValueError:
            raise MalformedRow(ratings_path, line_no, f"could not parse {row!r}") from None
        if not 0.5 <= r <= 5.0:
            raise MalformedRow(ratings_path, line_no, f"rating {r} outside [0.5, 5]")
        if mv not in movies:
            raise UnknownMovie(f"{ratings_path}:{line_no}: movie {mv} is not in {movies_path}")
        if (min_timestamp is not None and ts < min_timestamp) or (
            max_timestamp is not None and ts > max_timestamp
        ):
            continue
        users.append(u)
        rated.append(mv)
        values.append(r)
        stamps.append(ts)

    return RatingsCorpus(
        np.array(users, dtype=np.int64),
        np.array(rated, dtype=np.int64),
        np.array(values, dtype=np.float64),
        np.array(stamps, dtype=np.int64),
        movies,
    )


@dataclass(frozen=True)
class MovieSelection:
    low: tuple
    high: tuple
    random: tuple

    @property
    def movies(self) -> list[int]:
        return sorted(self.low + self.high + self.random)


def select_movies(
    corpus: RatingsCorpus,
    rng: np.random.Generator,
    min_ratings: int = 200,
    n_low: int = 50,
    n_high: int = 50,
    n_random: int = 100,
) -> MovieSelection:
    """Lowest-rated, highest-rated and random movies among those rated more than ``min_ratings`` times."""
    ids, counts, means = corpus.rating_stats()
    keep = counts > min_ratings
    ids, means = ids[keep], means[keep]
    need = n_low + n_high + n_random
    if ids.size < need:
        raise InsufficientMovies(
            f"{ids.size} movies have more than {min_ratings} ratings, {need} requested"
        )
    order = np.lexsort((ids, means))  # by mean rating, then id
    ranked = ids[order]
    low = ranked[:n_low]
    high = ranked[ranked.size - n_high:] if n_high else ranked[:0]
    middle = ranked[n_low:ranked.size - n_high]
    picks = np.sort(rng.choice(np.sort(middle), size=n_random, replace=False)) if n_random else middle[:0]
    return MovieSelection(
        tuple(int(x) for x in low), tuple(int(x) for x in high), tuple(int(x) for x in picks)
    )


@dataclass
class PreferenceVectors:
    user_ids: np.ndarray
    user_prefs: np.ndarray  # (users, 20), unit rows
    movie_ids: np.ndarray
    movie_genres: np.ndarray  # (movies, 20), unit rows
    avg_ratings: np.ndarray
    max_rating: float


def preference_vectors(
    corpus: RatingsCorpus,
    movies: Sequence[int],
    rng: np.random.Generator,
    sigma: float = 0.05,
    max_users: int | None = None,
) -> PreferenceVectors:
    """Unit genre vectors for movies and noisy genre-preference vectors for users.

    A user's vector is the normalized sum, over the selected movies they rated,
    of the movie's 0/1 genre indicator plus half-normal noise drawn per
    (movie, user, genre). Only users who rated a selected movie are kept.
    """
    if sigma < 0:
        raise IngestError("sigma must be >= 0")
    movie_ids = np.array(sorted(set(int(x) for x in movies)), dtype=np.int64)
    g = np.vstack([corpus.genre_vector(int(mv)) for mv in movie_ids]) if movie_ids.size else np.zeros((0, N_GENRES))
    empty = np.flatnonzero(g.sum(axis=1) == 0)
    if empty.size:
        raise GenrelessMovie(f"movie {int(movie_ids[empty[0]])} has no genre")
    m_vec = g / np.linalg.norm(g, axis=1, keepdims=True)

    ids, _, means = corpus.rating_stats()
    pos = np.searchsorted(ids, movie_ids)
    if (pos >= ids.size).any() or (ids[np.minimum(pos, ids.size - 1)] != movie_ids).any():
        raise UnknownMovie("every selected movie needs at least one rating")
    avg = means[pos]

    sel = np.isin(corpus.movies_rated, movie_ids)
    pairs = np.unique(np.stack([corpus.users[sel], corpus.movies_rated[sel]], axis=1), axis=0)
    user_ids = np.unique(pairs[:, 0])
    if max_users is not None and user_ids.size > max_users:
        user_ids = np.sort(rng.choice(user_ids, size=max_users, replace=False))
        pairs = pairs[np.isin(pairs[:, 0], user_ids)]

    u_row = np.searchsorted(user_ids, pairs[:, 0])
    m_row = np.searchsorted(movie_ids, pairs[:, 1])
    contrib = g[m_row]
    if sigma > 0:
        contrib = contrib + np.abs(rng.normal(0.0, sigma, size=contrib.shape))
    totals = np.zeros((user_ids.size, N_GENRES))
    np.add.at(totals, u_row, contrib)
    u_vec = totals / np.linalg.norm(totals, axis=1, keepdims=True)

    return PreferenceVectors(user_ids, u_vec, movie_ids, m_vec, avg, float(avg.max()))


def influence_probabilities(prefs: PreferenceVectors, sc: float = 0.2) -> BipartiteInfluenceGraph:
    """Complete bipartite graph with p = sc * <m_i, u_j> * r_i / max r."""
    if not 0.0 < sc <= 1.0:
        raise IngestError(f"sc must be in (0, 1], got {sc}")
    affinity = prefs.movie_genres @ prefs.user_prefs.T
    p = sc * affinity * (prefs.avg_ratings / prefs.max_rating)[:, None]
    p = np.clip(p, 0.0, 1.0)
    edges = [(int(mv), int(u)) for mv in prefs.movie_ids for u in prefs.user_ids]
    return BipartiteInfluenceGraph(prefs.movie_ids.tolist(), prefs.user_ids.tolist(), edges, p.reshape(-1))
