import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptabandit.core import EpochFeedback
from ptabandit.policies import (
    CtsState,
    CucbState,
    NonBernoulliState,
    cts_sample,
    cts_update,
    cucb_indices,
    cucb_update,
    estimation_error,
    load_state,
    save_state,
)


def fb(arms, states):
    return EpochFeedback(np.array(arms, dtype=np.intp), np.array(states, dtype=np.int8), 0.0)


def cucb_with(mean, count, kappa, epoch):
    return CucbState(kappa, np.array([count]), np.array([mean]), epoch)


@pytest.mark.parametrize("kappa", [0.0, 0.5, 3.0])
def test_unobserved_index_is_one(kappa):
    assert cucb_indices(CucbState.initial(4, kappa)).values.tolist() == [1.0] * 4


def test_kappa_zero_gives_sample_mean():
    assert cucb_indices(cucb_with(0.37, 5, 0.0, 100))[0] == 0.37


def test_index_cap_boundary():
    # ln e = 1: 0.5 + sqrt(3 / 12) = 1.0 exactly
    assert cucb_indices(cucb_with(0.5, 6, 1.0, math.e))[0] == 1.0


def test_index_formula_below_cap():
    got = cucb_indices(cucb_with(0.2, 40, 0.3, 50))[0]
    assert got == pytest.approx(0.2 + 0.3 * math.sqrt(3 * math.log(50) / 80), rel=1e-15)


def test_first_observation_overwrites_init():
    s = cucb_update(CucbState.initial(1), fb([0], [0]))
    assert s.play_counts[0] == 1 and s.sample_means[0] == 0.0 and s.epoch == 2


def test_running_mean_second_observation():
    s = cucb_update(cucb_with(1.0, 1, 0.0, 2), fb([0], [0]))
    assert s.play_counts[0] == 2 and s.sample_means[0] == 0.5


def test_untriggered_arms_unchanged():
    s = CucbState.initial(3)
    cucb_update(s, fb([1], [0]))
    assert s.play_counts.tolist() == [0, 1, 0]
    assert s.sample_means.tolist() == [1.0, 0.0, 1.0]


def test_stream_matches_batch_mean():
    s = CucbState.initial(1)
    for x in [1, 0, 1, 1]:
        cucb_update(s, fb([0], [x]))
    assert s.sample_means[0] == 0.75


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=10_000))
def test_incremental_mean_equals_batch(xs):
    s = CucbState.initial(1)
    for x in xs:
        cucb_update(s, fb([0], [x]))
    assert abs(s.sample_means[0] - math.fsum(xs) / len(xs)) <= 1e-12


@given(
    mean=st.floats(0, 1), count=st.integers(1, 10_000), epoch=st.integers(1, 10**6),
    k1=st.floats(0, 5), k2=st.floats(0, 5),
)
def test_index_monotone_in_kappa_and_bounded(mean, count, epoch, k1, k2):
    lo, hi = sorted((k1, k2))
    a = cucb_indices(cucb_with(mean, count, lo, epoch))[0]
    b = cucb_indices(cucb_with(mean, count, hi, epoch))[0]
    assert 0.0 <= a <= b <= 1.0


def test_cts_counters():
    s = CtsState(np.array([2, 2]), np.array([3, 3]))
    cts_update(s, fb([0], [1]))
    assert (s.successes[0], s.failures[0]) == (3, 3)
    cts_update(s, fb([0], [0]))
    assert (s.successes[0], s.failures[0]) == (3, 4)
    assert (s.successes[1], s.failures[1]) == (2, 3)
    assert s.epoch == 3


def test_cts_rejects_non_bernoulli():
    with pytest.raises(NonBernoulliState):
        cts_update(CtsState.initial(1), fb([0], [2]))


@pytest.mark.parametrize("s,f,mean", [(0, 0, 0.5), (9, 1, 10 / 12)])
def test_beta_sample_mean(s, f, mean):
    state = CtsState(np.full(100_000, s), np.full(100_000, f))
    nu = cts_sample(state, np.random.default_rng(0)).values
    assert abs(nu.mean() - mean) <= 0.005
    assert ((nu > 0) & (nu < 1)).all()


def test_beta_sample_deterministic():
    state = CtsState(np.array([1, 5, 0]), np.array([4, 0, 0]))
    a = [cts_sample(state, r).values for r in [np.random.default_rng(5)] * 3]
    r2 = np.random.default_rng(5)
    b = [cts_sample(state, r2).values for _ in range(3)]
    np.testing.assert_array_equal(np.array(a), np.array(b))


def test_samples_stay_open_interval_for_extreme_counts():
    state = CtsState(np.array([10**9, 0]), np.array([0, 10**9]))
    nu = cts_sample(state, np.random.default_rng(1)).values
    assert 0 < nu[1] < nu[0] < 1


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.lists(st.integers(0, 4), unique=True), st.integers(0, 2**5 - 1)), max_size=60))
def test_counts_agree_across_policies_and_orderings(batches):
    feedbacks = [fb(sorted(arms), [(bits >> a) & 1 for a in sorted(arms)]) for arms, bits in batches]
    forward_u, forward_t = CucbState.initial(5), CtsState.initial(5)
    backward_t = CtsState.initial(5)
    for f in feedbacks:
        cucb_update(forward_u, f)
        cts_update(forward_t, f)
    for f in reversed(feedbacks):
        cts_update(backward_t, f)
    n_obs = np.zeros(5, dtype=int)
    for f in feedbacks:
        n_obs[f.triggered] += 1
    np.testing.assert_array_equal(forward_u.play_counts, n_obs)
    np.testing.assert_array_equal(forward_t.successes + forward_t.failures, n_obs)
    np.testing.assert_array_equal(forward_t.successes, backward_t.successes)


def test_estimation_error():
    assert estimation_error(np.array([0.2, 0.9]), np.array([0.5, 1.0])) == pytest.approx(0.3)


def test_snapshot_round_trip(tmp_path):
    u = CucbState(0.01, np.array([3, 0, 7]), np.array([1 / 3, 1.0, 0.1]), 11)
    save_state(u, tmp_path / "u.txt")
    back = load_state(tmp_path / "u.txt")
    assert back.kappa == u.kappa and back.epoch == 11
    np.testing.assert_array_equal(back.play_counts, u.play_counts)
    assert back.sample_means.tobytes() == u.sample_means.tobytes()

    c = CtsState(np.array([1, 2]), np.array([0, 5]), 9)
    save_state(c, tmp_path / "c.txt")
    back = load_state(tmp_path / "c.txt")
    assert back.successes.tolist() == [1, 2] and back.failures.tolist() == [0, 5] and back.epoch == 9
