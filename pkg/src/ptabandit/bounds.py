"""Closed-form regret bounds and the constants they are built from.

Every bound holds for each fixed eta in (0, 1); the reported value is the
minimum over a fixed eta grid, which is itself a valid bound.

Note on the CUCB-kappa (kappa > 0) bound: the theorem statement groups the
middle term as (2/delta^2 + 3/2) while the last line of its proof reads
(1 + 2/delta^2 + 1/2). The two agree numerically; the statement form is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import OutOfRange

ETA_GRID = np.linspace(0.001, 0.999, 999)
E2 = math.e ** 2


class DegenerateGap(ValueError):
    pass


class RootNotBracketed(ValueError):
    pass


def _check_eta(eta) -> None:
    eta = np.asarray(eta)
    if not ((eta > 0) & (eta < 1)).all():
        raise OutOfRange("eta must lie in (0, 1)")


def _check_p_star(p_star: float) -> None:
    if not 0.0 < p_star <= 1.0:
        raise OutOfRange(f"p_star must be in (0, 1], got {p_star}")


def trigger_constant(p_star, eta):
    """c = 1 / (p* (1 - eta))^2."""
    return 1.0 / (p_star * (1.0 - np.asarray(eta, dtype=float))) ** 2


def threshold_t_prime(p_star: float, eta):
    """t' = 4 c^2 / e^2, the epoch after which every arm is seen often enough."""
    _check_p_star(p_star)
    _check_eta(eta)
    out = 4.0 * trigger_constant(p_star, eta) ** 2 / E2
    return float(out) if np.ndim(out) == 0 else out


def inflation_constant(p_star, eta, kappa, delta):
    """c0 = 6 kappa^2 / (delta^2 p* eta)."""
    return 6.0 * kappa**2 / (delta**2 * p_star * np.asarray(eta, dtype=float))


def threshold_t1(p_star: float, eta, kappa: float, delta: float):
    """t1 = max(4 c^2 / e^2, 4 c0^2 / e^2)."""
    _check_p_star(p_star)
    _check_eta(eta)
    if kappa < 0:
        raise OutOfRange("kappa must be >= 0")
    if delta <= 0:
        raise OutOfRange("delta must be > 0")
    c0 = inflation_constant(p_star, eta, kappa, delta)
    out = np.maximum(threshold_t_prime(p_star, eta), 4.0 * c0**2 / E2)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BoundInputs:
    """Problem constants entering the regret bounds.

    Bounded smoothness is f(x) = gamma * x**omega unless ``f_inverse`` is given.
    """

    m: int
    p_star: float
    nabla_min: float
    nabla_max: float
    kappa: float = 0.0
    gamma: float = 1.0
    omega: float = 1.0
    f_inverse: Callable[[float], float] | None = None

    def __post_init__(self):
        _check_p_star(self.p_star)
        if self.m < 1:
            raise OutOfRange("m must be >= 1")
        if self.gamma <= 0 or not 0.0 < self.omega <= 1.0:
            raise OutOfRange("need gamma > 0 and omega in (0, 1]")
        if self.kappa < 0:
            raise OutOfRange("kappa must be >= 0")
        if self.nabla_max < 0:
            raise OutOfRange("nabla_max must be >= 0")

    @property
    def delta(self) -> float:
        """f^{-1}(nabla_min / 2)."""
        if self.nabla_min <= 0:
            raise DegenerateGap(f"nabla_min must be > 0, got {self.nabla_min}")
        x = self.nabla_min / 2.0
        if self.f_inverse is not None:
            return float(self.f_inverse(x))
        return (x / self.gamma) ** (1.0 / self.omega)


def _grid(eta):
    if eta is None:
        return ETA_GRID
    _check_eta(eta)
    return np.atleast_1d(np.asarray(eta, dtype=float))


def cucb_regret_bound(inputs: BoundInputs, eta: float | None = None) -> float:
    """Horizon-free regret bound of CUCB-kappa (separate forms for kappa = 0 and > 0)."""
    d2 = inputs.delta**2
    m, p = inputs.m, inputs.p_star
    etas = _grid(eta)
    if inputs.kappa > 0:
        lead = np.ceil(threshold_t1(p, etas, inputs.kappa, inputs.delta))
        body = lead + m * math.pi**2 / 3 * (2 / d2 + 1.5) + 2 * m * (1 + 2 / (d2 * etas * p))
    else:
        lead = np.ceil(threshold_t_prime(p, etas))
        body = lead + m * math.pi**2 / 3 * (1 + 1 / (2 * d2)) + 2 * m * (1 + 1 / (2 * d2 * etas * p))
    return float(inputs.nabla_max * body.min())


def cts_regret_bound(inputs: BoundInputs, eta: float | None = None) -> float:
    """Horizon-free regret bound of CTS."""
    delta = inputs.delta
    d2 = delta**2
    m, p = inputs.m, inputs.p_star
    etas = _grid(eta)
    w = 3 + math.exp(2 * delta)
    body = (
        np.ceil(threshold_t_prime(p, etas))
        + w * m * math.pi**2 / 6 * (1 + 2 / d2)
        + w * m * (1 + 2 / (d2 * etas * p))
    )
    return float(inputs.nabla_max * body.min())


def _horizon_factor(horizon, omega):
    h = np.asarray(horizon, dtype=float)
    if (h < 0).any():
        raise OutOfRange("horizon must be >= 0")
    return h ** (1 - omega / 2) / (1 - omega / 2)


def gap_independent_bounds(inputs: BoundInputs, horizon, eta: float | None = None):
    """(CUCB-0 bound, CTS bound) at ``horizon`` (scalar or array of T)."""
    m, p, w = inputs.m, inputs.p_star, inputs.omega
    etas = _grid(eta)[:, None]
    lead = np.ceil(threshold_t_prime(p, etas)) * inputs.nabla_max
    growth = _horizon_factor(horizon, w)[None, ...]
    cucb_coef = inputs.gamma * (2 * m) ** w * (2**w * (math.pi / (2 * etas * p)) ** (w / 2) + 3**w)
    cts_coef = inputs.gamma * (2 * m * (3 + E2)) ** w * ((2 * math.pi / (etas * p)) ** (w / 2) + 3**w)
    cucb = (lead + cucb_coef * growth).min(axis=0)
    cts = (lead + cts_coef * growth).min(axis=0)
    if np.ndim(horizon) == 0:
        return float(cucb[0]), float(cts[0])
    return cucb, cts


@dataclass(frozen=True)
class RootCheck:
    """Largest crossing t+ of p*(1-eta) t = sqrt(t ln t) against the cap 4c^2/e^2.

    ``t_plus`` is None when the line stays above the curve for every t >= 1
    (c < e), in which case the cap holds vacuously.
    """

    t_plus: float | None
    cap: float
    holds: bool


def verify_root_bound(p_star: float, eta: float, tol: float = 1e-12) -> RootCheck:
    _check_p_star(p_star)
    _check_eta(eta)
    c = float(trigger_constant(p_star, eta))
    cap = 4 * c**2 / E2

    def gap(t):  # sign of h(t)^2 - g(t)^2 over t
        return t / c - math.log(t)

    lo, hi = math.e, 10 * cap
    if gap(lo) > 0:
        # t/c - ln t has its minimum at t = c; c < e means no crossing past e,
        # and t/c > ln t also holds on [1, e]
        return RootCheck(None, cap, True)
    if gap(hi) <= 0:
        raise RootNotBracketed(f"no sign change on [e, {hi:.6g}]")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            hi = mid
        else:
            lo = mid
    t_plus = 0.5 * (lo + hi)
    return RootCheck(t_plus, cap, t_plus <= cap)
