"""Experiment engine: policy x environment loops, regret bookkeeping, CSV output."""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import oracle as _oracle
from .bounds import threshold_t_prime
from .core import Action, ProblemParams
from .env import BipartiteInfluenceGraph, TriggeringModel, expected_reward, step
from .policies import (
    CtsState,
    CucbState,
    _cucb_index_array,
    cts_sample,
    cts_update,
    cucb_update,
)

RESULTS_COLUMNS = (
    "run_id", "epoch", "action", "instant_regret", "cum_regret", "scaled_regret", "realized_reward",
)
AGGREGATE_COLUMNS = ("epoch", "mean_cum", "std_cum", "mean_scaled", "std_scaled")
FLOAT_FMT = "{:.12g}"

# spawn keys that separate the graph stream from per-run streams
GRAPH_STREAM = 0
RUN_STREAM = 1


class HarnessError(ValueError):
    pass


class DegenerateBaseline(HarnessError):
    pass


class MixedHorizons(HarnessError):
    pass


class CheckpointBelowThreshold(HarnessError):
    pass


def graph_rng(seed: int) -> np.random.Generator:
    """Stream reserved for building a synthetic instance from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(GRAPH_STREAM,)))


def run_rngs(seed: int, run_id: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (environment, policy) streams for one run.

    Keyed on ``run_id`` so that adding runs never changes earlier ones.
    """
    env_ss, pol_ss = np.random.SeedSequence(seed, spawn_key=(RUN_STREAM, run_id)).spawn(2)
    return np.random.default_rng(env_ss), np.random.default_rng(pol_ss)


def default_checkpoints(horizon: int) -> list[int]:
    pts = {1 << n for n in range(horizon.bit_length()) if 1 << n <= horizon}
    pts.add(horizon)
    return sorted(pts)


class Instance:
    """A graph plus triggering model and budget, with cached reward lookups."""

    def __init__(
        self,
        graph: BipartiteInfluenceGraph,
        trig: TriggeringModel,
        k: int,
        alpha: float = _oracle.GREEDY_ALPHA,
        beta: float = 1.0,
    ):
        self.graph = graph
        self.trig = trig
        self.k = k
        self.alpha = alpha
        self.beta = beta
        self._rewards: dict[Action, float] = {}

    @property
    def mu(self) -> np.ndarray:
        return self.graph.influence_probs

    def true_reward(self, action: Action) -> float:
        r = self._rewards.get(action)
        if r is None:
            r = self._rewards[action] = expected_reward(self.graph, self.trig, action, self.mu)
        return r

    @cached_property
    def optimum(self) -> tuple[Action, float]:
        return _oracle.exact_oracle(self.graph, self.trig, self.mu, self.k)

    @cached_property
    def oracle_baseline(self) -> float:
        """Reward of the greedy oracle fed the true means."""
        return self.true_reward(_oracle.greedy_oracle(self.graph, self.trig, self.mu, self.k))

    def benchmark(self, kind: str) -> float:
        """Per-epoch reference reward subtracted in the regret.

        ``"exact"``: alpha * beta * r_star with r_star from enumeration.
        ``"oracle"``: the greedy oracle's reward on the true means, standing in
        for alpha * beta * r_star when enumeration is out of reach.
        """
        if kind == "exact":
            return self.alpha * self.beta * self.optimum[1]
        if kind == "oracle":
            return self.oracle_baseline
        raise HarnessError(f"unknown benchmark {kind!r}")


@dataclass
class RegretSeries:
    instant: np.ndarray
    cumulative: np.ndarray
    actions: list[str]
    scaled: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.instant.size


@dataclass
class RunResult:
    regret: RegretSeries
    realized_rewards: np.ndarray
    trigger_counts: dict[int, np.ndarray]
    final_state: CucbState | CtsState
    seed: int
    run_id: int
    benchmark: float
    wall_time: float = 0.0
    estimation_errors: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class PolicySpec:
    kind: str  # "cucb" or "cts"
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in ("cucb", "cts"):
            raise HarnessError(f"unknown policy {self.kind!r}")
        if self.kappa < 0:
            raise HarnessError("kappa must be >= 0")

    @property
    def label(self) -> str:
        return f"CUCB-{self.kappa:g}" if self.kind == "cucb" else "CTS"


def run(
    instance: Instance,
    policy: PolicySpec,
    horizon: int,
    seed: int,
    *,
    run_id: int = 0,
    oracle: str = "greedy",
    benchmark: str = "oracle",
    checkpoints: Sequence[int] | None = None,
    track_error: bool = False,
) -> RunResult:
    """Play ``horizon`` epochs; regret uses expected reward under the true means."""
    if horizon < 1:
        raise HarnessError("horizon must be >= 1")
    ProblemParams(
        p_star=instance.trig.p_star, k=instance.k, horizon=horizon, seed=seed,
        kappa=policy.kappa, alpha=instance.alpha, beta=instance.beta,
    )
    if oracle == "greedy":
        choose = _oracle.greedy_oracle
    elif oracle == "exact":
        def choose(g, t, est, k):
            return _oracle.exact_oracle(g, t, est, k)[0]
    else:
        raise HarnessError(f"unknown oracle {oracle!r}")

    graph, trig, k = instance.graph, instance.trig, instance.k
    env_rng, pol_rng = run_rngs(seed, run_id)
    ref = instance.benchmark(benchmark)
    marks = set(checkpoints if checkpoints is not None else default_checkpoints(horizon))

    state = CucbState.initial(graph.m, policy.kappa) if policy.kind == "cucb" else CtsState.initial(graph.m)
    counts = np.zeros(graph.m, dtype=np.int64)
    snapshots: dict[int, np.ndarray] = {}
    chosen_reward = np.empty(horizon)
    realized = np.empty(horizon)
    errors = np.empty(horizon) if track_error else None
    labels: list[str] = []

    start = time.perf_counter()
    for t in range(1, horizon + 1):
        if policy.kind == "cucb":
            est = _cucb_index_array(state)
        else:
            est = cts_sample(state, pol_rng).values
        if errors is not None:
            errors[t - 1] = np.max(np.abs(est - instance.mu))
        action = choose(graph, trig, est, k)
        fb = step(graph, trig, action, env_rng)
        if policy.kind == "cucb":
            cucb_update(state, fb)
        else:
            cts_update(state, fb)
        counts[fb.triggered] += 1
        if t in marks:
            snapshots[t] = counts.copy()
        chosen_reward[t - 1] = instance.true_reward(action)
        realized[t - 1] = fb.realized_reward
        labels.append(action.label())

    instant = ref - chosen_reward
    series = RegretSeries(instant, np.cumsum(instant), labels)
    return RunResult(
        regret=series,
        realized_rewards=realized,
        trigger_counts=snapshots,
        final_state=state,
        seed=seed,
        run_id=run_id,
        benchmark=ref,
        wall_time=time.perf_counter() - start,
        estimation_errors=errors,
    )


def _run_task(args):
    instance, policy, horizon, seed, run_id, kwargs = args
    return run(instance, policy, horizon, seed, run_id=run_id, **kwargs)


def run_many(
    instance: Instance,
    policy: PolicySpec,
    horizon: int,
    seed: int,
    n_runs: int,
    *,
    jobs: int = 1,
    **kwargs,
) -> list[RunResult]:
    """Independent runs ``0..n_runs-1`` under one master seed, optionally in worker processes."""
    tasks = [(instance, policy, horizon, seed, r, kwargs) for r in range(n_runs)]
    if jobs <= 1 or n_runs == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


def scaled_regret(series: RegretSeries, baseline: float) -> RegretSeries:
    """Cumulative regret divided by the oracle's reward on the true means."""
    if baseline == 0:
        raise DegenerateBaseline("baseline reward is 0; scaled regret undefined")
    return replace(series, scaled=series.cumulative / baseline)


def attach_scaled(results: Sequence[RunResult], instance: Instance) -> None:
    for res in results:
        res.regret = scaled_regret(res.regret, instance.oracle_baseline)


@dataclass
class Aggregate:
    epochs: np.ndarray
    mean_cum: np.ndarray
    std_cum: np.ndarray
    mean_scaled: np.ndarray
    std_scaled: np.ndarray
    n_runs: int

    def sem_cum(self, epoch: int) -> float:
        return float(self.std_cum[epoch - 1] / math.sqrt(self.n_runs))


def aggregate(results: Sequence[RunResult]) -> Aggregate:
    """Pointwise mean and sample standard deviation across runs."""
    if not results:
        raise HarnessError("need at least one result")
    horizons = {r.regret.horizon for r in results}
    if len(horizons) != 1:
        raise MixedHorizons(f"runs have different horizons: {sorted(horizons)}")
    cum = np.vstack([r.regret.cumulative for r in results])
    scaled = np.vstack([
        r.regret.scaled if r.regret.scaled is not None else np.full(r.regret.horizon, np.nan)
        for r in results
    ])
    ddof = 1 if len(results) > 1 else 0
    return Aggregate(
        epochs=np.arange(1, cum.shape[1] + 1),
        mean_cum=cum.mean(axis=0),
        std_cum=cum.std(axis=0, ddof=ddof),
        mean_scaled=scaled.mean(axis=0),
        std_scaled=scaled.std(axis=0, ddof=ddof),
        n_runs=len(results),
    )


@dataclass(frozen=True)
class CheckpointReport:
    t: int
    violation_frequency: float
    cap: float
    n_runs: int


def theorem1_check(
    results: Sequence[RunResult],
    eta: float,
    p_star: float,
    checkpoints: Sequence[int],
) -> list[CheckpointReport]:
    """Fraction of runs where some arm was triggered at most eta * p* * t times in t epochs.

    The probability of that event is at most m / t^2 once t >= t'.
    """
    t_prime = threshold_t_prime(p_star, eta)
    out = []
    for t in checkpoints:
        if t < t_prime:
            raise CheckpointBelowThreshold(f"checkpoint {t} is below t' = {t_prime:.6g}")
        hits = 0
        m = None
        for res in results:
            if t not in res.trigger_counts:
                raise HarnessError(f"run {res.run_id} has no trigger counts at t={t}")
            counts = res.trigger_counts[t]
            m = counts.size
            hits += bool(np.any(counts <= eta * p_star * t))
        out.append(CheckpointReport(t, hits / len(results), m / t**2, len(results)))
    return out


def _fmt(x: float) -> str:
    return FLOAT_FMT.format(float(x))


def write_results_csv(results: Sequence[RunResult], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(RESULTS_COLUMNS)
        for res in results:
            s = res.regret
            scaled = s.scaled if s.scaled is not None else np.full(s.horizon, np.nan)
            for t in range(s.horizon):
                w.writerow([
                    res.run_id, t + 1, s.actions[t], _fmt(s.instant[t]),
                    _fmt(s.cumulative[t]), _fmt(scaled[t]), _fmt(res.realized_rewards[t]),
                ])


def write_aggregate_csv(agg: Aggregate, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AGGREGATE_COLUMNS)
        for i, ep in enumerate(agg.epochs):
            w.writerow([
                int(ep), _fmt(agg.mean_cum[i]), _fmt(agg.std_cum[i]),
                _fmt(agg.mean_scaled[i]), _fmt(agg.std_scaled[i]),
            ])
