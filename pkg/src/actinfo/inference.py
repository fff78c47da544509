"""Estimators of active information and fine-tuning tests.

Four estimation routes share the Wald recipe estimate +/- 1.96 sqrt(V/n):

* nonparametric: hit fraction in the target, V = (1 - Q(A)) / Q(A);
* parametric: tilting MLE theta-hat, delta-method variance from the
  covariance of f with the target indicator;
* nuisance lower bound: numerator as above, denominator the worst-case
  null target probability, with an M-estimation sandwich variance when the
  numerator is fitted jointly over (theta, xi);
* two-sample: nuisance fitted on a separate null sample, variance
  V1 + (n/n0) V2 with V2 from the null-score Fisher information.

Scores are central finite differences of the log-density, so a parametric
family only needs to expose an evaluator from parameters to a distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import Distribution, StateSpace, TargetSet, target_probability
from .errors import (
    ConstantSpecificity,
    NoConvergence,
    NonIdentifiable,
    NullModelTargetZero,
    NullTargetZero,
    SingularSandwich,
)
from .tilting import TiltedFamily, tilt, tilted_moments

Z95 = 1.96  # fixed nominal 95% normal quantile
SCORE_TOL = 1e-10
FD_STEP = 1e-5
GOLDEN_TOL = 1e-10
SWEEP_TOL = 1e-8
MAX_SWEEPS = 500


@dataclass(frozen=True)
class ParametricFamily:
    """Black-box family: parameters -> Distribution, within a bounds box.

    dimension 0 means a single fixed distribution (no free parameter);
    dimension 1 is a lone scalar; dimension 2 is (theta, xi).  The
    evaluator must tolerate small excursions beyond the box so that
    finite-difference scores can be formed at the boundary.
    """

    space: StateSpace
    dimension: int
    evaluator: Callable[[tuple[float, ...]], Distribution]
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.dimension not in (0, 1, 2):
            raise ValueError("only 0, 1 or 2 parameters are supported")
        if len(self.bounds) != self.dimension:
            raise ValueError("need one (low, high) pair per parameter")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError("bounds must satisfy low < high")

    def at(self, params) -> Distribution:
        d = self.evaluator(tuple(float(p) for p in params))
        if d.space != self.space:
            raise ValueError("evaluator returned a distribution on the wrong space")
        return d


@dataclass(frozen=True)
class EstimationResult:
    kind: str
    estimate: float
    variance: float
    n: int
    ci_low: float
    ci_high: float
    n0: int | None = None
    degenerate: bool = False
    theta_hat: float | None = None
    xi_hat: float | None = None
    bias: float | None = None

    def __post_init__(self):
        if not self.degenerate and not (self.ci_low <= self.estimate <= self.ci_high):
            raise ValueError("confidence interval must contain the estimate")


@dataclass(frozen=True)
class TestOutcome:
    reject: bool
    i_min: float
    p_min: float
    kind: str


def _wald(estimate: float, variance: float, n: int) -> tuple[float, float]:
    half = Z95 * math.sqrt(variance / n)
    return estimate - half, estimate + half


def nonparam_variance(qa: float) -> float:
    """Asymptotic variance (1 - Q(A)) / Q(A) of the log hit-rate ratio."""
    if qa <= 0.0:
        raise ValueError("variance undefined at zero target probability")
    return (1.0 - qa) / qa


def _hit_fraction(sample, A: TargetSet) -> float:
    mask = A.indicator()
    return float(mask[sample.draws].mean())


def _degenerate_low(kind: str, n: int, n0: int | None = None, **extra) -> EstimationResult:
    return EstimationResult(kind=kind, estimate=-math.inf, variance=math.nan, n=n,
                            ci_low=math.nan, ci_high=math.nan, n0=n0, degenerate=True,
                            **extra)


def nonparam_actinfo(sample, A: TargetSet, P0A: float) -> EstimationResult:
    """log of the sample hit fraction over P0(A), with plug-in variance.

    A zero hit count is flagged degenerate (estimate -inf, no interval)
    rather than raised; a full hit count gives variance zero.
    """
    if P0A <= 0.0:
        raise NullTargetZero("P0(A) must be positive")
    n = len(sample)
    qa = _hit_fraction(sample, A)
    if qa == 0.0:
        return _degenerate_low("nonparametric", n)
    estimate = math.log(qa) - math.log(P0A)
    variance = nonparam_variance(qa)
    lo, hi = _wald(estimate, variance, n)
    return EstimationResult("nonparametric", estimate, variance, n, lo, hi)


def _score_match_theta(family: TiltedFamily, target_mean: float) -> float:
    """theta >= 0 with tilted mean of f equal to target_mean (0 at the
    boundary when the target mean does not exceed the null mean)."""
    f = family.spec.values
    support = family.base.mass > 0
    if np.ptp(f[support]) == 0.0:
        raise ConstantSpecificity("specificity is constant on the support")
    mean0, _ = tilted_moments(family, 0.0)
    if target_mean <= mean0:
        return 0.0

    def score(theta):
        return target_mean - tilted_moments(family, theta)[0]

    hi = 1.0
    for _ in range(200):
        if score(hi) <= 0.0:
            break
        hi *= 2.0
    else:
        raise NoConvergence("tilted mean never reached the target mean")
    lo = 0.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        s = score(mid)
        if abs(s) <= SCORE_TOL:
            return mid
        if s > 0.0:
            lo = mid
        else:
            hi = mid
    raise NoConvergence(f"score bisection did not reach {SCORE_TOL}")


def mle_tilt(sample, family: TiltedFamily) -> float:
    """Maximum likelihood tilt, i.e. the score equation
    sample mean of f = tilted mean of f, solved by bisection."""
    return _score_match_theta(family, float(family.spec.values[sample.draws].mean()))


def theta_star(Q: Distribution, family: TiltedFamily) -> float:
    """Tilt minimizing KL(Q || P_theta) over theta >= 0: the same score
    match with E_Q[f] in place of the sample mean."""
    return _score_match_theta(family, float(np.dot(Q.mass, family.spec.values)))


def param_asymptotic_variance(family: TiltedFamily, A: TargetSet, theta: float,
                              var_q: float) -> float:
    """Delta-method variance of the parametric actinfo estimate:
    Cov^2(f, 1_A) Var_Q(f) / (P(A)^2 Var(f)^2), moments under P_theta."""
    p = tilt(family, theta)
    f = family.spec.values
    mask = A.indicator()
    pa = target_probability(p, A)
    mean_f = float(np.dot(p.mass, f))
    var_f = float(np.dot(p.mass, (f - mean_f) ** 2))
    if var_f <= 0.0:
        raise ConstantSpecificity("zero specificity variance under the tilted law")
    cov = float(np.dot(p.mass, f * mask)) - mean_f * pa
    return (cov * cov) * var_q / (pa * pa * var_f * var_f)


def param_actinfo(sample, family: TiltedFamily, A: TargetSet) -> EstimationResult:
    """Parametric actinfo: fit theta by MLE, plug P_theta-hat(A) into the
    log ratio; needs full knowledge of f but uses every draw."""
    p0a = target_probability(family.base, A)
    if p0a <= 0.0:
        raise NullTargetZero("null distribution puts no mass on the target")
    th = mle_tilt(sample, family)
    pa = target_probability(tilt(family, th), A)
    estimate = math.log(pa) - math.log(p0a)
    f_draws = family.spec.values[sample.draws]
    var_q = float(np.var(f_draws))
    variance = param_asymptotic_variance(family, A, th, var_q)
    n = len(sample)
    lo, hi = _wald(estimate, variance, n)
    return EstimationResult("parametric", estimate, variance, n, lo, hi, theta_hat=th)


def ft_test(result: EstimationResult, i_min: float, P0A: float) -> TestOutcome:
    """Reject the no-knowledge null when the estimate reaches i_min."""
    if P0A <= 0.0:
        raise NullTargetZero("P0(A) must be positive")
    degenerate_low = result.degenerate and result.estimate == -math.inf
    reject = (not degenerate_low) and result.estimate >= i_min
    return TestOutcome(reject, i_min, P0A * math.exp(i_min), result.kind)


def _golden_max(fn, lo: float, hi: float, xtol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Golden-section maximization of a unimodal fn on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def p0_max(family0: ParametricFamily, A: TargetSet, xi_grid) -> tuple[float, float | tuple]:
    """Worst-case null target probability over a nuisance grid; the argmax
    is refined by golden section when the nuisance is a scalar."""
    grid = list(xi_grid)
    if not grid:
        raise ValueError("nuisance grid must be nonempty")

    def prob(xi):
        params = (xi,) if family0.dimension == 1 else tuple(np.atleast_1d(xi))
        return target_probability(family0.at(params), A)

    values = [prob(xi) for xi in grid]
    best = int(np.argmax(values))
    if family0.dimension != 1 or len(grid) == 1:
        return values[best], grid[best]
    lo = grid[best - 1] if best > 0 else grid[best]
    hi = grid[best + 1] if best + 1 < len(grid) else grid[best]
    if lo == hi:
        return values[best], grid[best]
    x, fx = _golden_max(prob, float(lo), float(hi))
    if fx >= values[best]:
        return fx, x
    return values[best], grid[best]


# ---------------------------------------------------------------------------
# Finite-difference scores and the M-estimation sandwich
# ---------------------------------------------------------------------------


def _log_mass(family: ParametricFamily, params) -> np.ndarray:
    mass = family.at(params).mass
    with np.errstate(divide="ignore"):
        return np.log(mass)


def _fd_scores(family: ParametricFamily, at: np.ndarray):
    """Central-difference score matrix S (m x dim) and per-state Hessian
    H (m x dim x dim) of the log-density at `at`."""
    dim = at.size
    h = FD_STEP * (1.0 + np.abs(at))
    base = _log_mass(family, at)
    m = base.size
    plus, minus = [], []
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h[j]
        plus.append(_log_mass(family, at + e))
        minus.append(_log_mass(family, at - e))
    S = np.empty((m, dim))
    H = np.empty((m, dim, dim))
    for j in range(dim):
        S[:, j] = (plus[j] - minus[j]) / (2.0 * h[j])
        H[:, j, j] = (plus[j] - 2.0 * base + minus[j]) / (h[j] * h[j])
    for j in range(dim):
        for k in range(j + 1, dim):
            ej = np.zeros(dim)
            ej[j] = h[j]
            ek = np.zeros(dim)
            ek[k] = h[k]
            cross = (_log_mass(family, at + ej + ek) - _log_mass(family, at + ej - ek)
                     - _log_mass(family, at - ej + ek) + _log_mass(family, at - ej - ek))
            H[:, j, k] = H[:, k, j] = cross / (4.0 * h[j] * h[k])
    return S, H


def param_variance_nuisance(sample, family: ParametricFamily, A: TargetSet,
                            at) -> float:
    """Sandwich variance of the fitted-actinfo numerator at parameters `at`.

    The conditional score mean is an exact sum over A under the model; the
    bread E[psi'] and meat E[psi^T psi] are exact sums over the sample's
    empirical law, matching the M-estimation limit the fit converges to.
    """
    params = np.asarray(at, dtype=float)
    if params.size != family.dimension or family.dimension == 0:
        raise ValueError("parameter vector does not match the family dimension")
    S, H = _fd_scores(family, params)
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(H))):
        # zero-mass states have -inf log density; only reachable ones matter
        raise SingularSandwich("score not finite on the support")
    model = family.at(params)
    pa = target_probability(model, A)
    if pa <= 0.0:
        raise NullModelTargetZero("model puts no mass on the target")
    members = list(A.members)
    cond = (model.mass[members, None] * S[members]).sum(axis=0) / pa

    weights = np.bincount(sample.draws, minlength=family.space.size) / len(sample)
    bread = np.einsum("x,xjk->jk", weights, H)
    meat = np.einsum("x,xj,xk->jk", weights, S, S)
    try:
        half = np.linalg.solve(bread, cond)
    except np.linalg.LinAlgError as exc:
        raise SingularSandwich("E[psi'] is singular") from exc
    if not np.all(np.isfinite(half)):
        raise SingularSandwich("E[psi'] is numerically singular")
    return float(max(half @ meat @ half, 0.0))


def _loglik(family: ParametricFamily, counts: np.ndarray, params) -> float:
    logp = _log_mass(family, params)
    mask = counts > 0
    if np.any(np.isneginf(logp[mask])):
        return -math.inf
    return float(np.dot(counts[mask], logp[mask]))


def joint_mle(sample, family: ParametricFamily) -> tuple[float, ...]:
    """Maximize the log-likelihood by coordinate ascent with golden-section
    line searches; converged when no parameter moves more than 1e-8.

    Each sweep ends with a pattern move: one more golden-section search
    along the sweep's net displacement.  Plain alternation creeps when the
    parameters are strongly confounded (a diagonal likelihood ridge); the
    pattern step jumps along the ridge instead.
    """
    if family.dimension == 0:
        return ()
    counts = np.bincount(sample.draws, minlength=family.space.size).astype(float)
    params = np.array([0.5 * (lo + hi) for lo, hi in family.bounds])

    # reject likelihoods that are flat along an axis before iterating
    base_ll = _loglik(family, counts, params)
    for j, (lo, hi) in enumerate(family.bounds):
        probes = []
        for x in (lo, 0.5 * (lo + hi), hi):
            p = params.copy()
            p[j] = x
            probes.append(_loglik(family, counts, p))
        if max(probes) - min(probes) <= 1e-12 * (1.0 + abs(base_ll)):
            raise NonIdentifiable(f"log-likelihood flat along parameter {j}")

    last_ll = base_ll
    for _ in range(MAX_SWEEPS):
        before = params.copy()
        for j, (lo, hi) in enumerate(family.bounds):

            def along(x, j=j):
                p = params.copy()
                p[j] = x
                return _loglik(family, counts, p)

            params[j], _ = _golden_max(along, lo, hi)
        delta = params - before
        ll = _loglik(family, counts, params)
        # converged when parameters settle, or when the whole sweep gained
        # less likelihood than float64 can resolve at this magnitude
        if np.max(np.abs(delta)) < SWEEP_TOL or abs(ll - last_ll) <= 1e-12 * (1.0 + abs(ll)):
            return tuple(float(p) for p in params)
        last_ll = ll
        # pattern step along the sweep displacement only while it is well
        # above line-search noise; it jumps along diagonal likelihood ridges
        # that make plain alternation creep
        if family.dimension >= 2 and np.max(np.abs(delta)) > 1e-6:
            t_hi = math.inf
            for j, (lo, hi) in enumerate(family.bounds):
                if delta[j] > 0.0:
                    t_hi = min(t_hi, (hi - params[j]) / delta[j])
                elif delta[j] < 0.0:
                    t_hi = min(t_hi, (lo - params[j]) / delta[j])
            if math.isfinite(t_hi) and t_hi > 0.0:
                t, _ = _golden_max(lambda t: _loglik(family, counts, params + t * delta),
                                   0.0, t_hi)
                params = params + t * delta
    raise NoConvergence(f"coordinate ascent did not settle in {MAX_SWEEPS} sweeps")


def lower_bound_actinfo(sample, A: TargetSet, p0max: float,
                        family: TiltedFamily | ParametricFamily | None = None,
                        *, true_null_target_prob: float | None = None) -> EstimationResult:
    """Lower bound on actinfo against the worst-case null: the numerator is
    the usual Q(A) estimate, the denominator p0max.

    When the true null target probability is supplied (synthetic studies)
    the asymptotic bias log(P_0xi(A) / p0max) <= 0 is reported.
    """
    if p0max <= 0.0:
        raise NullTargetZero("p0max must be positive")
    n = len(sample)
    bias = None
    if true_null_target_prob is not None:
        bias = math.log(true_null_target_prob) - math.log(p0max)
    theta_hat = None
    xi_hat = None
    if family is None:
        kind = "lower-bound-nonparametric"
        qa = _hit_fraction(sample, A)
        if qa == 0.0:
            return _degenerate_low(kind, n, bias=bias)
        variance = nonparam_variance(qa)
    elif isinstance(family, TiltedFamily):
        kind = "lower-bound-parametric"
        theta_hat = mle_tilt(sample, family)
        qa = target_probability(tilt(family, theta_hat), A)
        var_q = float(np.var(family.spec.values[sample.draws]))
        variance = param_asymptotic_variance(family, A, theta_hat, var_q)
    else:
        kind = "lower-bound-parametric"
        fitted = joint_mle(sample, family)
        qa = target_probability(family.at(fitted), A)
        variance = param_variance_nuisance(sample, family, A, fitted)
        theta_hat = fitted[0]
        xi_hat = fitted[1] if len(fitted) > 1 else None
    estimate = math.log(qa) - math.log(p0max)
    lo, hi = _wald(estimate, variance, n)
    return EstimationResult(kind, estimate, variance, n, lo, hi, bias=bias,
                            theta_hat=theta_hat, xi_hat=xi_hat)


def _null_mle(null_sample, family0: ParametricFamily) -> tuple[float, ...]:
    if family0.dimension == 0:
        return ()
    if family0.dimension != 1:
        raise ValueError("null family must have at most one nuisance parameter")
    counts = np.bincount(null_sample.draws, minlength=family0.space.size).astype(float)
    lo, hi = family0.bounds[0]
    x, _ = _golden_max(lambda xi: _loglik(family0, counts, np.array([xi])), lo, hi)
    return (float(x),)


def two_sample_actinfo(sample, null_sample, family0: ParametricFamily, A: TargetSet,
                       parametric: bool = False,
                       family: ParametricFamily | None = None) -> EstimationResult:
    """Consistent actinfo estimate from an informed sample plus a null
    sample: the nuisance is fitted on the null draws, and the variance is
    V1 + (n/n0) V2, the second term pricing in that the denominator was
    estimated too."""
    n, n0 = len(sample), len(null_sample)
    if n < 1 or n0 < 1:
        raise ValueError("both samples must be nonempty")
    lam = n / n0
    xi_hat = _null_mle(null_sample, family0)
    null_model = family0.at(xi_hat)
    p0a = target_probability(null_model, A)
    if p0a <= 0.0:
        raise NullModelTargetZero("fitted null puts no mass on the target")

    if family0.dimension == 0:
        v2 = 0.0
    else:
        params = np.asarray(xi_hat)
        S, _ = _fd_scores(family0, params)
        members = list(A.members)
        cond = (null_model.mass[members, None] * S[members]).sum(axis=0) / p0a
        fisher = np.einsum("x,xj,xk->jk", null_model.mass, S, S)
        try:
            v2 = float(cond @ np.linalg.solve(fisher, cond))
        except np.linalg.LinAlgError as exc:
            raise SingularSandwich("null Fisher information is singular") from exc

    theta_hat = None
    if parametric:
        if family is None:
            raise ValueError("parametric two-sample estimation needs a family for Q")
        fitted = joint_mle(sample, family)
        qa = target_probability(family.at(fitted), A)
        v1 = param_variance_nuisance(sample, family, A, fitted)
        theta_hat = fitted[0]
        kind = "two-sample-parametric"
    else:
        qa = _hit_fraction(sample, A)
        kind = "two-sample-nonparametric"
        if qa == 0.0:
            return _degenerate_low(kind, n, n0=n0,
                                   xi_hat=xi_hat[0] if xi_hat else None)
        v1 = nonparam_variance(qa)

    estimate = math.log(qa) - math.log(p0a)
    variance = v1 + lam * v2
    lo, hi = _wald(estimate, variance, n)
    return EstimationResult(kind, estimate, variance, n, lo, hi, n0=n0,
                            theta_hat=theta_hat, xi_hat=xi_hat[0] if xi_hat else None)


# ---------------------------------------------------------------------------
# CSV rows: estimator,estimate,variance,n,n0,ci_low,ci_high,reject,i_min
# ---------------------------------------------------------------------------

RESULT_CSV_HEADER = "estimator,estimate,variance,n,n0,ci_low,ci_high,reject,i_min"


def result_csv_row(result: EstimationResult, outcome: TestOutcome | None = None) -> str:
    def fmt(x):
        return "" if x is None else repr(float(x))

    reject = "" if outcome is None else str(outcome.reject).lower()
    i_min = "" if outcome is None else repr(float(outcome.i_min))
    return ",".join([
        result.kind, fmt(result.estimate), fmt(result.variance), str(result.n),
        "" if result.n0 is None else str(result.n0), fmt(result.ci_low),
        fmt(result.ci_high), reject, i_min,
    ])


def write_results_csv(rows, path, comments: list[str] | None = None) -> None:
    lines = [f"# {c}" for c in (comments or [])]
    lines.append(RESULT_CSV_HEADER)
    for result, outcome in rows:
        lines.append(result_csv_row(result, outcome))
    Path(path).write_text("\n".join(lines) + "\n")
