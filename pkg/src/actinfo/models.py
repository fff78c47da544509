"""Builders for the worked examples: a closed-form cosmology null, a
closed-form student-score model, and the d-part machine whose parts flip
under a Moran-type chain.

The machine model is the fully discrete one: 2^d bit patterns, specificity
a|x| with a jackpot value 1 at the all-ones state, a flip proposal whose
up/down rates have ratio b, and the accept-all stationary law as the null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .absorption import actinfo_stopped_series, decompose
from .chains import (
    AcceptanceRule,
    ProposalKernel,
    TransitionKernel,
    build_kernel,
    reference_null,
    target_mass_series,
)
from .core import (
    Distribution,
    SpecificityProfile,
    StateSpace,
    TargetSet,
    functional_information,
    stringent_target,
    target_probability,
)
from .errors import DegenerateVariance
from .inference import ParametricFamily, _golden_max
from .tilting import TiltedFamily, actinfo_equilibrium


# ---------------------------------------------------------------------------
# Cosmology: exponential null with unknown mean, life-permitting interval
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CosmologyModel:
    """Life-permitting interval (a, b) for a positive constant of nature."""

    a: float
    b: float

    def __post_init__(self):
        if not 0.0 < self.a < self.b:
            raise ValueError("need 0 < a < b")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def epsilon(self) -> float:
        """Half the relative interval width, (b - a) / (a + b)."""
        return (self.b - self.a) / (self.a + self.b)


def cosmology_interval_prob(model: CosmologyModel, xi: float) -> float:
    """P(a < X < b) for X exponential with mean xi: e^{-a/xi} - e^{-b/xi}."""
    if xi <= 0.0:
        raise ValueError("the exponential mean must be positive")
    return math.exp(-model.a / xi) - math.exp(-model.b / xi)


@dataclass(frozen=True)
class CosmologyBound:
    value: float
    p0max: float
    xi_max: float
    approx: float
    approx_valid: bool


def cosmology_actinfo_bound(model: CosmologyModel) -> CosmologyBound:
    """-log of the worst-case interval probability over the unknown mean.

    The objective is unimodal with its maximizer near the interval
    midpoint; golden section over a bracket that vanishes at both ends
    pins it to 1e-10.  For narrow intervals the bound is close to
    1 - log(epsilon) - log 2; outside that regime the closed form is still
    exact but the approximation flag is dropped.
    """
    lo = (model.b - model.a) / 100.0
    hi = 100.0 * model.b
    xi_max, p0max = _golden_max(lambda xi: cosmology_interval_prob(model, xi), lo, hi)
    eps = model.epsilon
    approx = 1.0 - math.log(eps) - math.log(2.0)
    return CosmologyBound(-math.log(p0max), p0max, xi_max, approx, eps <= 0.05)


# ---------------------------------------------------------------------------
# Student scores: normal covariates, linear training effect
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudentModel:
    """Pass/fail model for test scores after a training period.

    xi = (intercept and covariate slopes without training, error variance),
    theta = training effects per unit time, so the score is normal with
    mean and variance induced by the covariate distribution N(mean_vec,
    covariance).
    """

    mean_vec: np.ndarray
    covariance: np.ndarray
    xi: tuple[float, ...]
    theta: tuple[float, ...]
    threshold: float

    def __post_init__(self):
        mean_vec = np.atleast_1d(np.asarray(self.mean_vec, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        d = mean_vec.size + 1
        if cov.shape != (d - 1, d - 1):
            raise ValueError("covariance shape does not match the covariates")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        eigs = np.linalg.eigvalsh(cov)
        if eigs.min() < -1e-10 * max(1.0, abs(eigs).max()):
            raise ValueError("covariance must be positive semidefinite")
        if len(self.xi) != d + 1:
            raise ValueError(f"xi must have {d + 1} entries (coefficients plus variance)")
        if len(self.theta) != d:
            raise ValueError(f"theta must have {d} entries")
        if self.xi[-1] <= 0.0:
            raise ValueError("error variance must be positive")
        object.__setattr__(self, "mean_vec", mean_vec)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))


def _std_normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _student_mu_v(model: StudentModel, t: float, tuned: bool) -> tuple[float, float]:
    th = np.array(model.theta) if tuned else np.zeros(len(model.theta))
    xi = np.array(model.xi[:-1])
    sigma2 = model.xi[-1]
    coef = xi + t * th
    mu = coef[0] + float(np.dot(coef[1:], model.mean_vec))
    v = sigma2 + float(coef[1:] @ model.covariance @ coef[1:])
    return mu, v


def student_pass_probability(model: StudentModel, t: float) -> float:
    """P(score >= threshold) after training time t."""
    mu, v = _student_mu_v(model, t, tuned=True)
    if v <= 0.0:
        raise DegenerateVariance("score variance is not positive")
    return 1.0 - _std_normal_cdf((model.threshold - mu) / math.sqrt(v))


def student_actinfo(model: StudentModel, t: float) -> float:
    """log of the pass probability at (theta, t) over the untrained one."""
    mu0, v0 = _student_mu_v(model, 0.0, tuned=False)
    if v0 <= 0.0:
        raise DegenerateVariance("score variance is not positive")
    p0 = 1.0 - _std_normal_cdf((model.threshold - mu0) / math.sqrt(v0))
    return math.log(student_pass_probability(model, t)) - math.log(p0)


# ---------------------------------------------------------------------------
# Molecular machine on the d-cube
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MachineModel:
    """d parts, per-part specificity slope a (a <= 1/d keeps the all-ones
    state the unique optimum), beneficial/deleterious rate ratio b,
    tilting strength theta."""

    d: int
    a: float
    b: float
    theta: float = 0.0

    def __post_init__(self):
        if not 1 <= self.d <= 12:
            raise ValueError("d must lie in 1..12")
        if self.a > 1.0 / self.d:
            raise ValueError("need a <= 1/d")
        if self.b <= 0.0:
            raise ValueError("need b > 0")
        if self.theta < 0.0:
            raise ValueError("need theta >= 0")


@dataclass(frozen=True)
class MachineSystem:
    space: StateSpace
    f: SpecificityProfile
    q: ProposalKernel
    p0: Distribution
    family: TiltedFamily


def _machine_space(d: int) -> StateSpace:
    return StateSpace(2**d, tuple(format(i, f"0{d}b") for i in range(2**d)))


def _machine_specificity(space: StateSpace, d: int, a: float) -> SpecificityProfile:
    values = np.array([a * int.bit_count(i) for i in range(2**d)], dtype=float)
    values[2**d - 1] = 1.0
    return SpecificityProfile(space, values, 1.0)


def _machine_proposal_rows(d: int, b: float) -> np.ndarray:
    m = 2**d
    idx = np.arange(m)
    ones = np.array([int.bit_count(int(i)) for i in idx])
    w = ones + b * (d - ones)
    rows = np.zeros((m, m))
    for j in range(d):
        flip = idx ^ (1 << j)
        up = (idx >> j) & 1 == 0
        rows[idx, flip] = np.where(up, b, 1.0) / w
    return rows


def _machine_proposal(space: StateSpace, d: int, b: float) -> ProposalKernel:
    return ProposalKernel(space, _machine_proposal_rows(d, b))


def _machine_null(space: StateSpace, d: int, b: float) -> Distribution:
    # flip graph is strongly connected for b > 0; skip revalidation in the
    # hot family evaluators
    from .chains import _stationary_rows

    return Distribution(space, _stationary_rows(_machine_proposal_rows(d, b)))


def build_machine(model: MachineModel) -> MachineSystem:
    """State space, specificity, flip proposal, accept-all null, and the
    tilted family they induce."""
    space = _machine_space(model.d)
    f = _machine_specificity(space, model.d, model.a)
    q = _machine_proposal(space, model.d, model.b)
    p0 = reference_null(q)
    return MachineSystem(space, f, q, p0, TiltedFamily(p0, f))


def machine_target(system: MachineSystem) -> TargetSet:
    """The stringent target: the all-ones machine."""
    return stringent_target(system.f)


def machine_kernel(model: MachineModel, system: MachineSystem | None = None,
                   rule: AcceptanceRule = AcceptanceRule.MORAN_SQUARE_ROOT) -> TransitionKernel:
    sys_ = system or build_machine(model)
    return build_kernel(sys_.p0, sys_.f, model.theta, sys_.q, rule)


def machine_null_family(d: int, b_bounds: tuple[float, float] = (0.05, 1.5)) -> ParametricFamily:
    """Null family over the flip-rate ratio b (scalar nuisance)."""
    space = _machine_space(d)

    def evaluate(params: tuple[float, ...]) -> Distribution:
        (b,) = params
        return _machine_null(space, d, b)

    return ParametricFamily(space, 1, evaluate, (b_bounds,))


def machine_joint_family(d: int, a: float,
                         theta_bounds: tuple[float, float] = (0.0, 20.0),
                         b_bounds: tuple[float, float] = (0.05, 1.5)) -> ParametricFamily:
    """Two-parameter family over (theta, b) for joint fitting."""
    from .tilting import tilt

    space = _machine_space(d)
    f = _machine_specificity(space, d, a)

    def evaluate(params: tuple[float, ...]) -> Distribution:
        theta, b = params
        return tilt(TiltedFamily(_machine_null(space, d, b), f), theta)

    return ParametricFamily(space, 2, evaluate, (theta_bounds, b_bounds))


@dataclass(frozen=True)
class EquilibriumSweep:
    thetas: np.ndarray
    iplus: np.ndarray
    ifo: float


def figure_equilibrium_sweep(model: MachineModel, theta_grid) -> EquilibriumSweep:
    """Equilibrium actinfo along a theta grid, with the functional
    information asymptote as a reference column."""
    system = build_machine(model)
    A = machine_target(system)
    thetas = np.asarray(list(theta_grid), dtype=float)
    iplus = np.array([actinfo_equilibrium(system.family, A, th) for th in thetas])
    return EquilibriumSweep(thetas, iplus, functional_information(system.p0, A))


@dataclass(frozen=True)
class TimeSweep:
    times: np.ndarray
    iplus: np.ndarray
    iplus_stopped: np.ndarray
    iplus_eq: float
    ifo: float


def figure_time_sweep(model: MachineModel, t_max: int) -> TimeSweep:
    """Time-indexed actinfo of the Moran-rule chain started at the null,
    without and with stopping at the target, up to t_max."""
    system = build_machine(model)
    A = machine_target(system)
    kernel = machine_kernel(model, system)
    p0a = target_probability(system.p0, A)
    mass = target_mass_series(system.p0, kernel, A, t_max)
    iplus = np.log(mass) - math.log(p0a)
    dec = decompose(kernel, A, system.p0)
    iplus_stopped = actinfo_stopped_series(dec, p0a, t_max)
    return TimeSweep(
        np.arange(t_max + 1),
        iplus,
        iplus_stopped,
        actinfo_equilibrium(system.family, A, model.theta),
        functional_information(system.p0, A),
    )
