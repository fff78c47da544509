"""Exponential tilting P_theta(x) = e^{theta f(x)} P0(x) / M(theta).

The family {P_theta : theta >= 0} concentrates mass on high-specificity
states as theta grows; its target probability is strictly increasing in
theta, which makes the inverse problem (find theta hitting a prescribed
target probability) a clean bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Distribution, SpecificityProfile, TargetSet, actinfo, target_probability
from .errors import NoConvergence, NullTargetZero, OutOfRange, SpaceMismatch

SOLVE_TOL = 1e-10
MAX_BISECT = 200


@dataclass(frozen=True)
class TiltedFamily:
    """Null distribution plus the specificity function that tilts it.

    States with zero null mass stay at zero for every theta.
    """

    base: Distribution
    spec: SpecificityProfile

    def __post_init__(self):
        if self.base.space != self.spec.space:
            raise SpaceMismatch("base distribution and specificity disagree on the space")


def log_partition(family: TiltedFamily, theta: float) -> float:
    """log M(theta), by max-shifted summation so theta up to ~700 is safe."""
    p0 = family.base.mass
    f = family.spec.values
    support = p0 > 0
    expo = theta * f[support]
    shift = expo.max()
    return float(shift + np.log(np.sum(p0[support] * np.exp(expo - shift))))


def tilt(family: TiltedFamily, theta: float) -> Distribution:
    """The tilted distribution P_theta."""
    p0 = family.base.mass
    f = family.spec.values
    logm = log_partition(family, theta)
    mass = np.zeros_like(p0)
    support = p0 > 0
    mass[support] = p0[support] * np.exp(theta * f[support] - logm)
    return Distribution(family.base.space, mass)


def tilted_moments(family: TiltedFamily, theta: float) -> tuple[float, float]:
    """(mean, variance) of the specificity f under P_theta."""
    p = tilt(family, theta).mass
    f = family.spec.values
    mean = float(np.dot(p, f))
    var = float(np.dot(p, (f - mean) ** 2))
    return mean, max(var, 0.0)


def actinfo_equilibrium(family: TiltedFamily, A: TargetSet, theta: float) -> float:
    """log P_theta(A) / P0(A); zero at theta = 0, tends to -log P0(A)."""
    if target_probability(family.base, A) <= 0.0:
        raise NullTargetZero("null distribution puts no mass on the target")
    return actinfo(tilt(family, theta), family.base, A)


def solve_theta_for_target(family: TiltedFamily, A: TargetSet, p: float) -> float:
    """Find theta >= 0 with P_theta(A) = p, to |P_theta(A) - p| <= 1e-10.

    Monotonicity of theta -> P_theta(A) guarantees a unique root; the upper
    bracket starts at 1 and doubles until it straddles p.
    """
    p0a = target_probability(family.base, A)
    if p0a <= 0.0:
        raise NullTargetZero("null distribution puts no mass on the target")
    if p < p0a or p >= 1.0:
        raise OutOfRange(f"target probability {p!r} outside [P0(A), 1) = [{p0a!r}, 1)")

    def gap(theta):
        return target_probability(tilt(family, theta), A) - p

    if gap(0.0) >= -SOLVE_TOL:
        return 0.0
    hi = 1.0
    for _ in range(MAX_BISECT):
        if gap(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise NoConvergence("upper bracket expansion failed")
    lo = 0.0
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) <= SOLVE_TOL:
            return mid
        if g < 0.0:
            lo = mid
        else:
            hi = mid
    raise NoConvergence(f"bisection did not reach tolerance {SOLVE_TOL}")
