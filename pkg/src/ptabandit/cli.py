"""Command-line entry point: ``simulate``, ``sweep``, ``ingest`` and ``bounds``.

Settings come from an optional flat ``key = value`` config file (``#``
comments allowed) and are overridden by command-line flags. ``--seed`` is
mandatory, either on the command line or in the config file.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import bounds as _bounds
from . import harness, ingest
from .env import TriggeringModel, generate_synthetic, read_graph, write_graph


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a simulation. Defaults follow the desk-scale instance."""

    seed: int
    graph: str = ""  # edge-list file; empty means synthetic
    movies: int = 20
    users: int = 50
    density: float = 0.3
    prob_lo: float = 0.1
    prob_hi: float = 0.6
    policy: str = "cucb"
    kappa: float = 0.0
    oracle: str = "greedy"
    benchmark: str = "oracle"
    p_star: float = 0.05
    k: int = 4
    horizon: int = 3000
    runs: int = 20
    out: str = "out"

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.graph and not Path(self.graph).is_file():
            raise ConfigError(f"graph file not found: {self.graph}")
        if self.policy not in ("cucb", "cts"):
            raise ConfigError(f"policy must be cucb or cts, got {self.policy!r}")
        if self.oracle not in ("greedy", "exact"):
            raise ConfigError(f"oracle must be greedy or exact, got {self.oracle!r}")
        if self.benchmark not in ("oracle", "exact"):
            raise ConfigError(f"benchmark must be oracle or exact, got {self.benchmark!r}")
        if not 0.0 < self.p_star <= 1.0:
            raise ConfigError(f"p_star must be in (0, 1], got {self.p_star}")
        if self.kappa < 0:
            raise ConfigError("kappa must be >= 0")
        if self.k < 1 or self.horizon < 1 or self.runs < 1:
            raise ConfigError("k, horizon and runs must be positive")
        if self.movies < 1 or self.users < 1 or not 0 < self.density <= 1:
            raise ConfigError("synthetic graph needs movies, users >= 1 and density in (0, 1]")
        if not 0.0 <= self.prob_lo <= self.prob_hi <= 1.0:
            raise ConfigError("need 0 <= prob_lo <= prob_hi <= 1")

    def to_text(self) -> str:
        """Canonical form: one ``key = value`` line per field, in declaration order."""
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(cls)}
        unknown = set(values) - set(types)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "seed" not in values:
            raise ConfigError("a seed is required (--seed or 'seed' in the config file)")
        conv = {"int": int, "float": float, "str": str}
        try:
            return cls(**{k: conv[types[k]](v) for k, v in values.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None


def read_config_file(path: str | Path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for line_no, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


SIM_KEYS = [f.name for f in fields(ExperimentConfig)]


def _effective_config(args) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in SIM_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return ExperimentConfig.from_mapping(values)


def build_instance(cfg: ExperimentConfig) -> harness.Instance:
    if cfg.graph:
        graph = read_graph(cfg.graph)
    else:
        graph = generate_synthetic(
            cfg.movies, cfg.users, cfg.density, (cfg.prob_lo, cfg.prob_hi), harness.graph_rng(cfg.seed)
        )
    return harness.Instance(graph, TriggeringModel(cfg.p_star), cfg.k)


def _simulate(cfg: ExperimentConfig, out: Path, jobs: int) -> harness.Aggregate:
    instance = build_instance(cfg)
    policy = harness.PolicySpec(cfg.policy, cfg.kappa)
    results = harness.run_many(
        instance, policy, cfg.horizon, cfg.seed, cfg.runs,
        jobs=jobs, oracle=cfg.oracle, benchmark=cfg.benchmark,
    )
    harness.attach_scaled(results, instance)
    agg = harness.aggregate(results)
    out.mkdir(parents=True, exist_ok=True)
    harness.write_results_csv(results, out / "results.csv")
    harness.write_aggregate_csv(agg, out / "aggregate.csv")
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    return agg


def cmd_simulate(args) -> int:
    cfg = _effective_config(args)
    out = Path(cfg.out)
    agg = _simulate(cfg, out, args.jobs)
    print(f"policy={harness.PolicySpec(cfg.policy, cfg.kappa).label} runs={cfg.runs} T={cfg.horizon}")
    print(f"final mean cumulative regret: {agg.mean_cum[-1]:.9g}")
    print(f"final mean scaled regret: {agg.mean_scaled[-1]:.9g}")
    print(f"wrote {out / 'results.csv'} and {out / 'aggregate.csv'}")
    return 0


SWEEP_AXES = {"kappa": float, "p_star": float, "k": int}


def cmd_sweep(args) -> int:
    cfg = _effective_config(args)
    raw = [v for v in (args.values or "").split(",") if v.strip()]
    if not raw:
        raise ConfigError("--values needs at least one value")
    conv = SWEEP_AXES[args.axis]
    values = [conv(v) for v in raw]
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    combined = out / f"sweep_{args.axis}.csv"
    rows = []
    for v in values:
        sub = replace(cfg, **{args.axis: v}, out=str(out / f"{args.axis}={v:g}"))
        agg = _simulate(sub, Path(sub.out), args.jobs)
        (out / f"aggregate_{args.axis}={v:g}.csv").write_bytes((Path(sub.out) / "aggregate.csv").read_bytes())
        print(f"{args.axis}={v:g}: final mean scaled regret {agg.mean_scaled[-1]:.9g}")
        for i, ep in enumerate(agg.epochs):
            rows.append([args.axis, f"{v:g}", int(ep), harness._fmt(agg.mean_scaled[i]), harness._fmt(agg.std_scaled[i])])
    with open(combined, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "value", "epoch", "mean_scaled", "std_scaled"])
        w.writerows(rows)
    print(f"wrote {combined}")
    return 0


def cmd_ingest(args) -> int:
    if args.seed is None:
        raise ConfigError("--seed is required")
    for p in (args.ratings, args.movies):
        if not Path(p).is_file():
            raise ConfigError(f"file not found: {p}")
    corpus = ingest.parse_corpus(args.ratings, args.movies, args.min_timestamp, args.max_timestamp)
    sel_ss, pref_ss = np.random.SeedSequence(args.seed).spawn(2)
    selection = ingest.select_movies(
        corpus, np.random.default_rng(sel_ss), args.min_ratings, args.n_low, args.n_high, args.n_random
    )
    prefs = ingest.preference_vectors(
        corpus, selection.movies, np.random.default_rng(pref_ss), sigma=args.sigma, max_users=args.max_users
    )
    graph = ingest.influence_probabilities(prefs, args.sc)
    target = Path(args.output) if args.output else Path(args.out or ".") / "graph.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    write_graph(graph, target)
    p = graph.influence_probs
    print(f"|L|={graph.n_left} |R|={graph.n_right} |E|={graph.m}")
    if p.size:
        print(f"min p={p.min():.9g} max p={p.max():.9g}")
    print(f"wrote {target}")
    return 0


def bound_rows(args) -> tuple[list[tuple[str, str]], bool]:
    """Labelled (name, value) rows; the flag reports whether any row is an error."""
    fmt = "{:.12g}".format
    rows = [("p_star", fmt(args.p_star)), ("eta", fmt(args.eta)), ("kappa", fmt(args.kappa))]
    failed = False
    c = float(_bounds.trigger_constant(args.p_star, args.eta))
    rows += [("c", fmt(c)), ("t_prime", fmt(_bounds.threshold_t_prime(args.p_star, args.eta)))]

    root = _bounds.verify_root_bound(args.p_star, args.eta)
    rows += [
        ("t_plus", "none" if root.t_plus is None else fmt(root.t_plus)),
        ("t_plus_cap", fmt(root.cap)),
        ("t_plus_le_cap", str(root.holds).lower()),
    ]
    if args.m is None:
        return rows, failed

    gamma = args.gamma if args.gamma is not None else float(args.m)
    rows += [("m", str(args.m)), ("gamma", fmt(gamma)), ("omega", fmt(args.omega))]
    nabla_max = args.nabla_max if args.nabla_max is not None else 0.0
    try:
        inputs = _bounds.BoundInputs(
            m=args.m, p_star=args.p_star, nabla_min=args.nabla_min if args.nabla_min is not None else 0.0,
            nabla_max=nabla_max, kappa=args.kappa, gamma=gamma, omega=args.omega,
        )
    except ValueError as exc:
        return rows + [("inputs", f"error: {exc}")], True

    if args.nabla_min is not None:
        rows += [("nabla_min", fmt(args.nabla_min)), ("nabla_max", fmt(nabla_max))]
        try:
            delta = inputs.delta
            rows.append(("delta", fmt(delta)))
            if args.kappa > 0:
                c0 = float(_bounds.inflation_constant(args.p_star, args.eta, args.kappa, delta))
                rows += [
                    ("c0", fmt(c0)),
                    ("t1", fmt(_bounds.threshold_t1(args.p_star, args.eta, args.kappa, delta))),
                ]
            rows += [
                ("cucb_bound", fmt(_bounds.cucb_regret_bound(inputs))),
                ("cucb_bound_at_eta", fmt(_bounds.cucb_regret_bound(inputs, eta=args.eta))),
                ("cts_bound", fmt(_bounds.cts_regret_bound(inputs))),
                ("cts_bound_at_eta", fmt(_bounds.cts_regret_bound(inputs, eta=args.eta))),
            ]
        except _bounds.DegenerateGap as exc:
            rows.append(("gap_dependent", f"error: {exc}"))
            failed = True

    if args.horizon is not None:
        cucb0, cts = _bounds.gap_independent_bounds(inputs, args.horizon)
        rows += [("horizon", str(args.horizon)), ("cucb0_gap_free", fmt(cucb0)), ("cts_gap_free", fmt(cts))]
    return rows, failed


def cmd_bounds(args) -> int:
    rows, failed = bound_rows(args)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["name", "value"])
    w.writerows(rows)
    return 1 if failed else 0


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    p.add_argument("--out", help="output directory")
    return p


def _sim_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--graph", help="edge-list graph file (default: synthetic instance)")
    p.add_argument("--movies", type=int)
    p.add_argument("--users", type=int)
    p.add_argument("--density", type=float)
    p.add_argument("--prob-lo", dest="prob_lo", type=float)
    p.add_argument("--prob-hi", dest="prob_hi", type=float)
    p.add_argument("--policy", choices=["cucb", "cts"])
    p.add_argument("--kappa", type=float)
    p.add_argument("--oracle", choices=["greedy", "exact"])
    p.add_argument("--benchmark", choices=["oracle", "exact"])
    p.add_argument("--p-star", dest="p_star", type=float)
    p.add_argument("-k", "--k", dest="k", type=int)
    p.add_argument("-T", "--horizon", dest="horizon", type=int)
    p.add_argument("--runs", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptabandit",
        description="Combinatorial bandits with probabilistically triggered arms.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common, sim = _global_flags(), _sim_flags()

    p = sub.add_parser("simulate", parents=[common, sim], help="run a policy and write regret CSVs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common, sim], help="repeat simulate over one parameter axis")
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ingest", parents=[common], help="build an influence graph from a ratings corpus")
    p.add_argument("--ratings", required=True)
    p.add_argument("--movies", required=True)
    p.add_argument("--output", help="graph file (default: OUT/graph.csv)")
    p.add_argument("--min-ratings", type=int, default=200)
    p.add_argument("--n-low", type=int, default=50)
    p.add_argument("--n-high", type=int, default=50)
    p.add_argument("--n-random", type=int, default=100)
    p.add_argument("--sc", type=float, default=0.2)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--max-users", type=int)
    p.add_argument("--min-timestamp", type=int)
    p.add_argument("--max-timestamp", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("bounds", parents=[common], help="evaluate theorem constants and regret bounds")
    p.add_argument("--p-star", dest="p_star", type=float, required=True)
    p.add_argument("--eta", type=float, default=0.5, help="eta for the threshold rows")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--m", type=int, help="number of arms")
    p.add_argument("--gamma", type=float, help="smoothness scale (default: m)")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--nabla-min", dest="nabla_min", type=float)
    p.add_argument("--nabla-max", dest="nabla_max", type=float)
    p.add_argument("--horizon", type=int)
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"ptabandit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
