"""Combinatorial multi-armed bandits with probabilistically triggered arms."""
from .core import Action, EpochFeedback, ExpectationVector, ProblemParams, validate_expectation_vector
from .env import BipartiteInfluenceGraph, TriggeringModel, expected_reward, generate_synthetic, step
from .harness import Instance, PolicySpec, aggregate, run, run_many, scaled_regret, theorem1_check
from .oracle import exact_oracle, gap_profile, greedy_oracle

__version__ = "0.1.0"
