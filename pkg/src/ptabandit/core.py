"""Domain types shared across the package.

Arms are the edges of a bipartite movie/user graph, indexed densely by
``ArmId`` (an ``int`` in ``[0, m)``). Arm states are Bernoulli throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

ArmId = int


class CoreError(ValueError):
    """Base class for validation errors raised by the core types."""


class OutOfRange(CoreError):
    pass


class Empty(CoreError):
    pass


class ExpectationVector:
    """Immutable vector of per-arm mean states, every entry in [0, 1]."""

    __slots__ = ("_values",)

    def __init__(self, values: Sequence[float] | np.ndarray):
        arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
        if arr.size == 0:
            raise Empty("expectation vector must have at least one entry")
        bad = ~((arr >= 0.0) & (arr <= 1.0))
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            raise OutOfRange(f"entry {idx} = {arr[idx]!r} is outside [0, 1]")
        arr.flags.writeable = False
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self) -> int:
        return self._values.size

    def __getitem__(self, i):
        return self._values[i]

    def __iter__(self):
        return iter(self._values.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExpectationVector):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        return f"ExpectationVector(m={len(self)})"

    def to_text(self) -> str:
        """Serialize one entry per line using ``float.hex`` (bit-exact)."""
        return "\n".join(float(v).hex() for v in self._values) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExpectationVector":
        return cls([float.fromhex(line) for line in text.split()])


def validate_expectation_vector(values: Sequence[float]) -> ExpectationVector:
    return ExpectationVector(values)


@dataclass(frozen=True)
class Action:
    """A seed set of movie identifiers (left nodes)."""

    seed_set: frozenset

    def __init__(self, seed_set: Iterable):
        object.__setattr__(self, "seed_set", frozenset(seed_set))

    def __len__(self) -> int:
        return len(self.seed_set)

    def __contains__(self, movie) -> bool:
        return movie in self.seed_set

    def sorted(self) -> list:
        return sorted(self.seed_set)

    def label(self) -> str:
        """Canonical string form, e.g. ``1|4|7``."""
        return "|".join(str(x) for x in self.sorted())


@dataclass(frozen=True)
class EpochFeedback:
    """What the learner sees after one epoch.

    ``triggered`` holds the arm ids whose states were revealed, ``states``
    the matching 0/1 observations (same order).
    """

    triggered: np.ndarray
    states: np.ndarray
    realized_reward: float

    def __post_init__(self):
        if self.triggered.shape != self.states.shape:
            raise CoreError("states must be defined for exactly the triggered arms")
        if self.realized_reward < 0:
            raise CoreError("realized reward must be nonnegative")

    def as_dict(self) -> Mapping[ArmId, int]:
        return dict(zip(self.triggered.tolist(), self.states.tolist()))


@dataclass(frozen=True)
class ProblemParams:
    p_star: float
    k: int
    horizon: int
    seed: int
    kappa: float = 0.0
    alpha: float = 1.0 - 1.0 / np.e
    beta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p_star <= 1.0:
            raise OutOfRange(f"p_star must be in (0, 1], got {self.p_star}")
        if self.k < 1:
            raise OutOfRange(f"k must be >= 1, got {self.k}")
        if self.kappa < 0:
            raise OutOfRange(f"kappa must be >= 0, got {self.kappa}")
        if not 0.0 < self.alpha <= 1.0 or not 0.0 < self.beta <= 1.0:
            raise OutOfRange("alpha and beta must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise OutOfRange("seed must be an unsigned 64-bit integer")
        if self.horizon < 1:
            raise OutOfRange(f"horizon must be positive, got {self.horizon}")
