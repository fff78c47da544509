"""Acceptance gate: every criterion runs at its stated tolerance and prints
one pass/fail line (run with `pytest -s tests/test_acceptance.py` to see the
lines as they complete)."""

import math
import time

import numpy as np
import pytest

import actinfo as ai
import actinfo.inference as inf
from actinfo.absorption import (
    actinfo_stopped_series,
    survival_series,
    truncation_horizon,
)
from actinfo.chains import AcceptanceRule, target_mass_series
from actinfo.deviations import decay_slope, nonparam_rate, param_rate
from actinfo.models import (
    CosmologyModel,
    MachineModel,
    build_machine,
    cosmology_actinfo_bound,
    machine_kernel,
    machine_null_family,
    machine_target,
)
from conftest import random_reversible_model, total_variation


def criterion(number: int, label: str, budget_s: float):
    def wrap(fn):
        def run():
            start = time.perf_counter()
            try:
                fn()
            except AssertionError:
                print(f"[FAIL] criterion {number}: {label}")
                raise
            elapsed = time.perf_counter() - start
            verdict = "PASS" if elapsed < budget_s else "FAIL"
            print(f"[{verdict}] criterion {number}: {label} "
                  f"({elapsed:.2f}s, budget {budget_s:.0f}s)")
            assert elapsed < budget_s, f"criterion {number} exceeded {budget_s}s"

        run.__name__ = fn.__name__
        return run

    return wrap


@criterion(1, "functional information anchor, d=5 b=1", 1.0)
def test_criterion_01_figure1_anchor():
    system = build_machine(MachineModel(5, 0.2, 1.0))
    ifo = ai.functional_information(system.p0, machine_target(system))
    assert ifo == pytest.approx(5 * math.log(2), abs=1e-9)
    assert abs(ifo - 3.47) < 0.01


@criterion(2, "functional information anchor, d=5 b=0.5", 1.0)
def test_criterion_02_figure2_anchor():
    system = build_machine(MachineModel(5, 0.2, 0.5))
    ifo = ai.functional_information(system.p0, machine_target(system))
    assert abs(ifo - 5.0876) < 2e-3
    assert abs(ifo - 5.09) < 0.02


@criterion(3, "equilibrium actinfo strictly increasing with saturation", 10.0)
def test_criterion_03_monotone_equilibrium():
    grid = np.round(np.arange(0.0, 10.05, 0.1), 10)
    for a in (-0.2, 0.0, 0.2):
        for b in (0.5, 1.0):
            system = build_machine(MachineModel(5, a, b))
            A = machine_target(system)
            curve = [ai.actinfo_equilibrium(system.family, A, th) for th in grid]
            assert all(x < y for x, y in zip(curve, curve[1:]))
            ifo = ai.functional_information(system.p0, A)
            assert abs(ai.actinfo_equilibrium(system.family, A, 50.0) - ifo) < 0.05


@criterion(4, "time dynamics: domination, monotone stopping, limits, E(T)", 60.0)
def test_criterion_04_dynamics():
    for a in (0.2, -0.2):
        for b in (1.0, 0.5):
            model = MachineModel(5, a, b, 2.5)
            system = build_machine(model)
            A = machine_target(system)
            kernel = machine_kernel(model, system)
            p0a = ai.target_probability(system.p0, A)
            mass = target_mass_series(system.p0, kernel, A, 500)
            plain = np.log(mass) - math.log(p0a)
            assert plain[0] == pytest.approx(0.0, abs=1e-12)
            dec = ai.decompose(kernel, A, system.p0)
            stopped = actinfo_stopped_series(dec, p0a, 500)
            assert np.all(stopped - plain >= -1e-12)
            assert np.all(np.diff(stopped) >= -1e-12)
            ifo = -math.log(p0a)
            assert abs(ai.actinfo_stopped(dec, p0a, 10**5) - ifo) < 1e-3
            horizon = truncation_horizon(dec, tail_tol=1e-8)
            series_total = float(survival_series(dec, horizon).sum())
            assert abs(series_total - ai.expected_hitting_time(dec)) < 1e-6


@criterion(5, "detailed balance 1e-12 and stationary = tilt 1e-9, both rules", 30.0)
def test_criterion_05_equilibrium_correctness():
    rng = np.random.default_rng(20240401)
    for _ in range(100):
        m = int(rng.integers(2, 65))
        p0, f, q = random_reversible_model(rng, m)
        theta = float(rng.uniform(0.0, 4.0))
        ptheta = ai.tilt(ai.TiltedFamily(p0, f), theta)
        for rule in (AcceptanceRule.METROPOLIS_HASTINGS,
                     AcceptanceRule.MORAN_SQUARE_ROOT):
            kernel = ai.build_kernel(p0, f, theta, q, rule)
            flow = ptheta.mass[:, None] * kernel.rows
            assert np.max(np.abs(flow - flow.T)) < 1e-12
            pi = ai.stationary(kernel)
            assert np.max(np.abs(pi.mass - ptheta.mass)) < 1e-9


@criterion(6, "Moran fixation bridge", 1.0)
def test_criterion_06_moran_bridge():
    assert ai.moran_fixation(1.0, 1000) == 1 / 1000
    n_beta = 1000 * ai.moran_fixation(math.exp(0.1 / 1000), 1000)
    assert abs(n_beta - 1.05) <= 2e-3


@criterion(7, "CI coverage in [0.93, 0.97] and MLE mean within 0.02", 180.0)
def test_criterion_07_estimator_calibration():
    model = MachineModel(5, 0.2, 1.0, 1.0)
    system = build_machine(model)
    A = machine_target(system)
    p0a = ai.target_probability(system.p0, A)
    informed = ai.tilt(system.family, 1.0)
    truth = math.log(ai.target_probability(informed, A)) - math.log(p0a)
    root = ai.RandomSource(42)
    reps, n = 1000, 500
    covered = {"nonparametric": 0, "parametric": 0}
    theta_hats = []
    for i in range(reps):
        sample = ai.sample_iid(informed, n, root.substream(i))
        res_np = ai.nonparam_actinfo(sample, A, p0a)
        res_par = ai.param_actinfo(sample, system.family, A)
        for res in (res_np, res_par):
            if not res.degenerate and res.ci_low <= truth <= res.ci_high:
                covered[res.kind] += 1
        theta_hats.append(res_par.theta_hat)
    for kind in ("nonparametric", "parametric"):
        assert 0.93 <= covered[kind] / reps <= 0.97, (kind, covered[kind] / reps)
    assert abs(float(np.mean(theta_hats)) - 1.0) <= 0.02


@criterion(8, "significance decay approaches the Bernoulli KL rate", 5.0)
def test_criterion_08_large_deviation_decay():
    c = nonparam_rate(1 / 32, math.log(2)).rate
    assert c == pytest.approx(0.012581, abs=1e-6)
    slope = decay_slope([250, 500, 1000, 2000, 4000], 1 / 32, 1 / 16)
    gaps = [abs(s - c) / c for _, s in slope]
    assert gaps[-1] < 0.10
    assert all(x > y for x, y in zip(gaps, gaps[1:]))


@criterion(9, "variance and rate agreement for binary specificity", 1.0)
def test_criterion_09_variance_agreement():
    sp = ai.StateSpace.canonical(2)
    family = ai.TiltedFamily(ai.Distribution.uniform(sp),
                             ai.SpecificityProfile(sp, np.array([0.0, 1.0]), 1.0))
    A = ai.TargetSet(sp, (1,))
    for theta_star in (0.4, 1.0, 2.2):
        p = ai.target_probability(ai.tilt(family, theta_star), A)
        var_q = p * (1 - p)
        v_par = inf.param_asymptotic_variance(family, A, theta_star, var_q)
        assert abs(v_par - (1 - p) / p) < 1e-10
    for i_min in (0.25, math.log(1.5)):
        assert abs(param_rate(family, A, i_min).rate
                   - nonparam_rate(0.5, i_min).rate) < 1e-10


@criterion(10, "worst-case cosmology bound matches the narrow-interval form", 1.0)
def test_criterion_10_cosmology_bound():
    for eps in (1e-2, 1e-3, 1e-4):
        model = CosmologyModel(1.0 - eps, 1.0 + eps)
        bound = cosmology_actinfo_bound(model)
        assert abs(bound.value - (1.0 - math.log(model.epsilon) - math.log(2.0))) < 0.01


@criterion(11, "two-sample estimates centered on zero under the null", 120.0)
def test_criterion_11_two_sample_null_calibration():
    # moderate target (three or more working parts) so the hit counts are
    # comfortably in the CLT regime at n = 1000
    system = build_machine(MachineModel(5, 0.2, 0.5))
    A = ai.target_set(ai.SpecificityProfile(system.space, system.f.values, 0.6))
    family0 = machine_null_family(5)
    root = ai.RandomSource(1234)
    reps, n, inside = 500, 1000, 0
    for i in range(reps):
        sample = ai.sample_iid(system.p0, n, root.substream(2 * i))
        null_sample = ai.sample_iid(system.p0, n, root.substream(2 * i + 1))
        res = ai.two_sample_actinfo(sample, null_sample, family0, A)
        se = math.sqrt(res.variance / res.n)
        inside += abs(res.estimate) <= 3 * se
    assert inside / reps >= 0.99, inside / reps


@criterion(12, "simulated chains match exact evolution and absorption", 120.0)
def test_criterion_12_monte_carlo_exact_agreement():
    model = MachineModel(5, 0.2, 1.0, 2.5)
    system = build_machine(model)
    kernel = machine_kernel(model, system)
    A = machine_target(system)
    reps = 100_000

    root = ai.RandomSource(99)
    t_free = 25
    counts = np.zeros(system.space.size)
    for i in range(reps):
        final, _ = ai.simulate_chain(kernel, system.p0, t_free, None, root.substream(i))
        counts[final] += 1
    exact = ai.evolve(system.p0, kernel, t_free)
    assert total_variation(counts / reps, exact.mass) < 0.01

    root = ai.RandomSource(100)
    t_stop = 60
    dec = ai.decompose(kernel, A, system.p0)
    hits = 0
    for i in range(reps):
        _, hit = ai.simulate_chain(kernel, system.p0, t_stop, A, root.substream(i))
        hits += hit is not None
    assert abs(hits / reps - ai.absorption_cdf(dec, t_stop)) < 0.01
