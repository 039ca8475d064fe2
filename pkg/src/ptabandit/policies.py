"""CUCB-kappa and combinatorial Thompson sampling as counter state machines."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EpochFeedback, ExpectationVector, OutOfRange


class NonBernoulliState(ValueError):
    pass


class SnapshotFormatError(ValueError):
    pass


@dataclass
class CucbState:
    """Play counts T_i, sample means and the epoch counter t (starts at 1).

    Sample means start at 1 as the algorithm prescribes; the first
    observation of an arm overwrites that value.
    """

    kappa: float
    play_counts: np.ndarray
    sample_means: np.ndarray
    epoch: int = 1

    @classmethod
    def initial(cls, m: int, kappa: float = 0.0) -> "CucbState":
        if kappa < 0:
            raise OutOfRange(f"kappa must be >= 0, got {kappa}")
        return cls(kappa, np.zeros(m, dtype=np.int64), np.ones(m), 1)

    @property
    def m(self) -> int:
        return self.play_counts.size


@dataclass
class CtsState:
    successes: np.ndarray
    failures: np.ndarray
    epoch: int = 1

    @classmethod
    def initial(cls, m: int) -> "CtsState":
        return cls(np.zeros(m, dtype=np.int64), np.zeros(m, dtype=np.int64), 1)

    @property
    def m(self) -> int:
        return self.successes.size


def cucb_indices(state: CucbState) -> ExpectationVector:
    """min(mean + kappa * sqrt(3 ln t / (2 T_i)), 1); arms never observed get 1."""
    return ExpectationVector(_cucb_index_array(state))


def _cucb_index_array(state: CucbState) -> np.ndarray:
    counts = state.play_counts
    seen = counts > 0
    idx = np.ones(counts.size)
    if state.kappa == 0.0:
        idx[seen] = state.sample_means[seen]
    else:
        bonus = state.kappa * np.sqrt(3.0 * math.log(state.epoch) / (2.0 * counts[seen]))
        idx[seen] = np.minimum(state.sample_means[seen] + bonus, 1.0)
    return idx


def cucb_update(state: CucbState, feedback: EpochFeedback) -> CucbState:
    """Fold one epoch of feedback into the running means (in place, returned)."""
    arms = feedback.triggered
    x = feedback.states.astype(np.float64)
    state.play_counts[arms] += 1
    mean = state.sample_means[arms]
    state.sample_means[arms] = mean + (x - mean) / state.play_counts[arms]
    state.epoch += 1
    return state


def cts_sample(state: CtsState, rng: np.random.Generator) -> ExpectationVector:
    """One Beta(s_i + 1, f_i + 1) draw per arm."""
    nu = rng.beta(state.successes + 1.0, state.failures + 1.0)
    # numpy's beta sampler can round to exactly 0 or 1 for extreme counts
    np.clip(nu, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0), out=nu)
    return ExpectationVector(nu)


def cts_update(state: CtsState, feedback: EpochFeedback) -> CtsState:
    x = feedback.states
    if x.size and not np.isin(x, (0, 1)).all():
        raise NonBernoulliState("CTS observations must be 0 or 1")
    arms = feedback.triggered
    ones = x == 1
    state.successes[arms[ones]] += 1
    state.failures[arms[~ones]] += 1
    state.epoch += 1
    return state


def estimation_error(mu: ExpectationVector | np.ndarray, estimate: ExpectationVector | np.ndarray) -> float:
    """max_i |mu_i - estimate_i|, the sup-norm estimation error of one epoch."""
    a = mu.values if isinstance(mu, ExpectationVector) else np.asarray(mu)
    b = estimate.values if isinstance(estimate, ExpectationVector) else np.asarray(estimate)
    return float(np.max(np.abs(a - b)))


# Snapshot format: first line names the policy, then one ``key value`` header
# line per scalar, then one whitespace-separated line per arm.


def save_state(state: CucbState | CtsState, path: str | Path) -> None:
    if isinstance(state, CucbState):
        lines = ["cucb", f"kappa {state.kappa.hex()}", f"epoch {state.epoch}", f"arms {state.m}"]
        lines += [f"{int(n)} {float(mu).hex()}" for n, mu in zip(state.play_counts, state.sample_means)]
    else:
        lines = ["cts", f"epoch {state.epoch}", f"arms {state.m}"]
        lines += [f"{int(s)} {int(f)}" for s, f in zip(state.successes, state.failures)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_state(path: str | Path) -> CucbState | CtsState:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SnapshotFormatError(f"{path}: empty snapshot")
    kind = lines[0].strip()
    n_header = {"cucb": 3, "cts": 2}.get(kind)
    if n_header is None:
        raise SnapshotFormatError(f"{path}: unknown policy {kind!r}")
    header = dict(ln.split() for ln in lines[1 : 1 + n_header])
    rows = [ln.split() for ln in lines[1 + n_header :] if ln.strip()]
    if len(rows) != int(header["arms"]):
        raise SnapshotFormatError(f"{path}: expected {header['arms']} arm rows, found {len(rows)}")
    epoch = int(header["epoch"])
    if kind == "cucb":
        counts = np.array([int(r[0]) for r in rows], dtype=np.int64)
        means = np.array([float.fromhex(r[1]) for r in rows])
        return CucbState(float.fromhex(header["kappa"]), counts, means, epoch)
    succ = np.array([int(r[0]) for r in rows], dtype=np.int64)
    fail = np.array([int(r[1]) for r in rows], dtype=np.int64)
    return CtsState(succ, fail, epoch)
