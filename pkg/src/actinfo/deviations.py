"""Large-deviation rates of the fine-tuning tests, plus exact verification.

Significance levels decay like e^{-Cn}: for the nonparametric test C is the
Bernoulli KL divergence between the rejection boundary p_min and the null
target probability; for the parametric test C is the Legendre-Fenchel
transform of the log moment generating function of f under the null,
evaluated at the tilted mean matching p_min.  Exact binomial tails (no
Monte Carlo) verify the nonparametric rate at finite n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import TargetSet, target_probability
from .errors import InvalidNull, NoConvergence, OutOfRange
from .tilting import TiltedFamily, log_partition, solve_theta_for_target, tilted_moments

RATE_TOL = 1e-10


@dataclass(frozen=True)
class RateReport:
    """Decay constant C with the inputs that produced it echoed back."""

    rate: float
    kind: str
    p0a: float
    i_min: float
    p_min: float
    bias: float = 0.0
    theta_min: float | None = None
    phi_star: float | None = None
    boundary: bool = False

    def __post_init__(self):
        if self.rate < 0.0:
            raise ValueError("decay rate must be nonnegative")


def _bernoulli_kl(q: float, p: float) -> float:
    parts = 0.0
    if q > 0.0:
        parts += q * math.log(q / p)
    if q < 1.0:
        parts += (1.0 - q) * math.log((1.0 - q) / (1.0 - p))
    return max(parts, 0.0)


def nonparam_rate(P0A: float, i_min: float, bias: float = 0.0) -> RateReport:
    """C = KL(Be(p_min e^{-B}) || Be(P0(A))).

    A negative bias (conservative worst-case null) pushes the boundary up
    and the rate with it.  If the adjusted boundary reaches 1, rejection is
    impossible at any n and the rate is reported as +inf.
    """
    if not 0.0 < P0A < 1.0:
        raise InvalidNull("P0(A) must lie strictly inside (0, 1)")
    p_min = P0A * math.exp(i_min)
    p_adj = p_min * math.exp(-bias)
    kind = "nonparametric" if bias == 0.0 else "nuisance"
    if p_adj >= 1.0:
        return RateReport(math.inf, kind, P0A, i_min, p_min, bias)
    rate = _bernoulli_kl(p_adj, P0A)
    return RateReport(rate, kind, P0A, i_min, p_min, bias,
                      boundary=(rate == 0.0))


def cumulant(P0A: float, phi: float) -> float:
    """log E[e^{phi Y}] for Y ~ Be(P0(A)): log(1 + P0(A)(e^phi - 1))."""
    if not 0.0 <= P0A <= 1.0:
        raise InvalidNull("P0(A) must lie in [0, 1]")
    return math.log1p(P0A * math.expm1(phi))


def param_rate(family: TiltedFamily, A: TargetSet, i_min: float,
               bias: float = 0.0) -> RateReport:
    """Legendre-Fenchel rate sup_{phi>0} [phi m - log M(phi)] with m the
    mean of f under the tilt that puts mass p_min e^{-B} on the target.

    The supremum is located by bisecting the stationarity condition
    tilted mean(phi) = m (log M is strictly convex), then evaluated.
    """
    p0a = target_probability(family.base, A)
    if not 0.0 < p0a < 1.0:
        raise InvalidNull("P0(A) must lie strictly inside (0, 1)")
    p_min = p0a * math.exp(i_min)
    p_adj = p_min * math.exp(-bias)
    if p_adj >= 1.0:
        raise OutOfRange("adjusted boundary probability reaches 1")
    kind = "parametric" if bias == 0.0 else "nuisance"
    theta_min = solve_theta_for_target(family, A, p_adj)
    m = tilted_moments(family, theta_min)[0]
    mean0 = tilted_moments(family, 0.0)[0]
    if m <= mean0:
        return RateReport(0.0, kind, p0a, i_min, p_min, bias,
                          theta_min=theta_min, boundary=True)

    def residual(phi):
        return tilted_moments(family, phi)[0] - m

    hi = 1.0
    for _ in range(200):
        if residual(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise NoConvergence("tilted mean never reached m")
    lo = 0.0
    phi = 0.5 * hi
    for _ in range(300):
        phi = 0.5 * (lo + hi)
        r = residual(phi)
        if abs(r) <= RATE_TOL:
            break
        if r < 0.0:
            lo = phi
        else:
            hi = phi
    else:
        raise NoConvergence(f"stationarity bisection did not reach {RATE_TOL}")
    rate = phi * m - log_partition(family, phi)
    return RateReport(max(rate, 0.0), kind, p0a, i_min, p_min, bias,
                      theta_min=theta_min, phi_star=phi)


def exact_significance(n: int, P0A: float, p_min: float) -> float:
    """log P(Bin(n, P0(A)) >= ceil(n p_min)), by stable log-space summation."""
    if not 0.0 < P0A < 1.0:
        raise InvalidNull("P0(A) must lie strictly inside (0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    if p_min > 1.0:
        return -math.inf
    k0 = max(int(math.ceil(n * p_min - 1e-12)), 0)
    if k0 <= 0:
        return 0.0
    if k0 > n:
        return -math.inf
    ks = np.arange(k0, n + 1, dtype=float)
    log_pmf = (gammaln(n + 1.0) - gammaln(ks + 1.0) - gammaln(n - ks + 1.0)
               + ks * math.log(P0A) + (n - ks) * math.log1p(-P0A))
    shift = log_pmf.max()
    return float(shift + math.log(np.sum(np.exp(log_pmf - shift))))


def decay_slope(n_values, P0A: float, p_min: float) -> list[tuple[int, float]]:
    """(n, -log significance / n) along an increasing sample-size ladder."""
    ns = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("sample sizes must be strictly increasing")
    return [(n, -exact_significance(n, P0A, p_min) / n) for n in ns]
