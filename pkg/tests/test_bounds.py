import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy.special import lambertw

from ptabandit.bounds import (
    ETA_GRID,
    BoundInputs,
    DegenerateGap,
    cts_regret_bound,
    cucb_regret_bound,
    gap_independent_bounds,
    threshold_t1,
    threshold_t_prime,
    verify_root_bound,
)
from ptabandit.core import OutOfRange

FIXTURE = json.loads((Path(__file__).parent / "fixtures" / "bound_hand_values.json").read_text())


def pinned(kappa=0.0):
    p = FIXTURE["params"]
    return BoundInputs(
        m=p["m"], p_star=p["p_star"], nabla_min=p["nabla_min"], nabla_max=p["nabla_max"],
        kappa=kappa, gamma=p["gamma"], omega=p["omega"],
    )


def test_t_prime_examples():
    assert threshold_t_prime(0.5, 0.5) == pytest.approx(1024 / math.e**2, abs=1e-9)
    assert threshold_t_prime(0.05, 0.5) == pytest.approx(4 * 1600**2 / math.e**2, rel=1e-12)
    assert threshold_t_prime(1.0, 1e-12) == pytest.approx(4 / math.e**2, rel=1e-9)


@pytest.mark.parametrize("p_star,eta", [(0.0, 0.5), (0.5, 0.0), (0.5, 1.0), (1.5, 0.5)])
def test_t_prime_out_of_range(p_star, eta):
    with pytest.raises(OutOfRange):
        threshold_t_prime(p_star, eta)


def test_t1_examples():
    assert threshold_t1(0.5, 0.5, 1e-9, 0.1) == threshold_t_prime(0.5, 0.5)
    assert threshold_t1(0.5, 0.5, 1.0, 0.1) == pytest.approx(4 * 2400**2 / math.e**2, rel=1e-12)
    # choose kappa so that c0 == c = 16: 6 kappa^2 / (delta^2 p eta) = 16
    kappa = math.sqrt(16 * 0.1**2 * 0.5 * 0.5 / 6)
    assert threshold_t1(0.5, 0.5, kappa, 0.1) == pytest.approx(threshold_t_prime(0.5, 0.5), rel=1e-12)


def test_pinned_hand_values():
    eta = FIXTURE["params"]["eta"]
    assert cucb_regret_bound(pinned(), eta=eta) == pytest.approx(FIXTURE["cucb0_bound"], abs=1e-9)
    assert cucb_regret_bound(pinned(FIXTURE["params"]["kappa"]), eta=eta) == pytest.approx(
        FIXTURE["cucb_kappa_bound"], abs=1e-9
    )
    assert cts_regret_bound(pinned(), eta=eta) == pytest.approx(FIXTURE["cts_bound"], abs=1e-9)
    cu, ct = gap_independent_bounds(pinned(), FIXTURE["params"]["horizon"], eta=eta)
    assert cu == pytest.approx(FIXTURE["cucb0_gap_free"], rel=1e-12)
    assert ct == pytest.approx(FIXTURE["cts_gap_free"], rel=1e-12)


def test_grid_minimum_not_above_any_grid_point():
    inp = pinned(0.01)
    for fn in (cucb_regret_bound, cts_regret_bound):
        best = fn(inp)
        assert all(best <= fn(inp, eta=e) for e in ETA_GRID[::37])


def test_bound_dominates_leading_term():
    inp = pinned()
    eta_best = min(ETA_GRID, key=lambda e: cucb_regret_bound(inp, eta=e))
    assert cucb_regret_bound(inp) >= inp.nabla_max * math.ceil(threshold_t_prime(inp.p_star, eta_best))


def test_kappa_zero_bound_not_above_kappa_positive():
    for kappa in (0.001, 0.01, 0.5, 2.0):
        assert cucb_regret_bound(pinned()) <= cucb_regret_bound(pinned(kappa))


def test_cts_bound_grows_with_large_delta():
    values = [
        cts_regret_bound(BoundInputs(m=5, p_star=0.3, nabla_min=1, nabla_max=1, f_inverse=lambda x, d=d: d))
        for d in (2.0, 3.0, 4.0, 5.0)
    ]
    assert values == sorted(values)


def test_degenerate_gap():
    inp = BoundInputs(m=3, p_star=0.5, nabla_min=0.0, nabla_max=1.0)
    with pytest.raises(DegenerateGap):
        cucb_regret_bound(inp)
    with pytest.raises(DegenerateGap):
        cts_regret_bound(inp)


def test_monotone_in_p_star(rng):
    for _ in range(50):
        m = int(rng.integers(1, 50))
        nmin = float(rng.uniform(0.01, 1))
        nmax = nmin + float(rng.uniform(0, 2))
        kappa = float(rng.choice([0.0, 0.1]))
        eta = float(rng.uniform(0.05, 0.95))
        p1, p2 = sorted(rng.uniform(0.01, 1, size=2))
        a = BoundInputs(m, p1, nmin, nmax, kappa=kappa, gamma=m)
        b = BoundInputs(m, p2, nmin, nmax, kappa=kappa, gamma=m)
        assert cucb_regret_bound(b, eta=eta) <= cucb_regret_bound(a, eta=eta)
        assert cts_regret_bound(b, eta=eta) <= cts_regret_bound(a, eta=eta)
        for x, y in zip(gap_independent_bounds(b, 1000, eta=eta), gap_independent_bounds(a, 1000, eta=eta)):
            assert x <= y
        for v in (cucb_regret_bound(a), cts_regret_bound(a), *gap_independent_bounds(a, 10)):
            assert math.isfinite(v) and v > 0


def test_gap_independent_shape():
    inp = pinned()
    eta = 0.5
    lead = math.ceil(threshold_t_prime(inp.p_star, eta)) * inp.nabla_max
    assert gap_independent_bounds(inp, 0, eta=eta) == (lead, lead)
    for T in (10, 1000, 12345):
        c1, t1 = gap_independent_bounds(inp, T, eta=eta)
        c2, t2 = gap_independent_bounds(inp, 2 * T, eta=eta)
        assert (c2 - lead) == pytest.approx((c1 - lead) * 2 ** 0.5, rel=1e-12)
        assert (t2 - lead) == pytest.approx((t1 - lead) * 2 ** 0.5, rel=1e-12)
    # omega = 1: T-dependent factor is 2 sqrt(T)
    coef = inp.gamma * 2 * inp.m * (2 * math.sqrt(math.pi / (2 * eta * inp.p_star)) + 3)
    assert gap_independent_bounds(inp, 400, eta=eta)[0] == pytest.approx(lead + coef * 2 * 20, rel=1e-12)


def test_gap_independent_vectorized():
    T = np.array([0, 1, 100, 3000])
    cu, ct = gap_independent_bounds(pinned(), T)
    assert cu.shape == ct.shape == (4,)
    for i, t in enumerate(T):
        assert cu[i] == pytest.approx(gap_independent_bounds(pinned(), int(t))[0], rel=1e-14)


def largest_root(p_star, eta):
    """Independent route: t/c = ln t has largest root -c W_{-1}(-1/c)."""
    c = 1 / (p_star * (1 - eta)) ** 2
    return float(np.real(-c * lambertw(-1 / c, k=-1)))


def test_root_example():
    chk = verify_root_bound(0.5, 0.5)
    assert chk.t_plus == pytest.approx(largest_root(0.5, 0.5), rel=1e-9)
    assert chk.t_plus == pytest.approx(67.361, abs=1e-3)
    assert chk.cap == pytest.approx(138.5833, abs=1e-4)
    assert chk.holds


def test_root_degenerate_case():
    chk = verify_root_bound(1.0, 1e-9)
    assert chk.t_plus is None and chk.holds
    assert chk.cap == pytest.approx(4 / math.e**2, rel=1e-6)


def test_root_bound_random_pairs(rng):
    for _ in range(100):
        p_star, eta = float(rng.uniform(0.01, 1)), float(rng.uniform(0.01, 0.99))
        chk = verify_root_bound(p_star, eta)
        assert chk.holds
        c = 1 / (p_star * (1 - eta)) ** 2
        if c > math.e:
            assert chk.t_plus == pytest.approx(largest_root(p_star, eta), rel=1e-9)
            assert chk.t_plus <= chk.cap
