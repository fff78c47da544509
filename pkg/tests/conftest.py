import math

import numpy as np
import pytest

import actinfo as ai
from actinfo.chains import AcceptanceRule
from actinfo.models import MachineModel, build_machine, machine_target


class TwoState:
    """Uniform null on {0, 1} with specificity (0, 1): every quantity has a
    closed form (Bernoulli algebra), so it anchors most hand oracles."""

    def __init__(self):
        self.space = ai.StateSpace.canonical(2)
        self.p0 = ai.Distribution.uniform(self.space)
        self.f = ai.SpecificityProfile(self.space, np.array([0.0, 1.0]), 1.0)
        self.family = ai.TiltedFamily(self.p0, self.f)
        self.A = ai.target_set(self.f)
        self.q = ai.ProposalKernel(self.space, np.array([[0.0, 1.0], [1.0, 0.0]]))


@pytest.fixture
def two_state():
    return TwoState()


@pytest.fixture
def machine_b1():
    model = MachineModel(5, 0.2, 1.0)
    return model, build_machine(model)


@pytest.fixture
def machine_b05():
    model = MachineModel(5, 0.2, 0.5)
    return model, build_machine(model)


def machine_analytic_null(d: int, b: float) -> np.ndarray:
    """Independent oracle for the accept-all stationary law of the flip
    proposal: level-wise detailed balance gives per-state mass proportional
    to b^k (k + b(d-k)) at k ones, normalized over binomial counts."""
    w = np.array([k + b * (d - k) for k in range(d + 1)])
    level = b ** np.arange(d + 1) * w
    z = sum(math.comb(d, k) * level[k] for k in range(d + 1))
    mass = np.array([level[int.bit_count(i)] for i in range(2**d)]) / z
    return mass


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def random_reversible_model(rng: np.random.Generator, m: int):
    """Random strictly positive null, random specificity, and a proposal
    with symmetric support (ring plus random extra pairs, some self mass)."""
    p0 = ai.Distribution(ai.StateSpace.canonical(m), rng.dirichlet(np.ones(m) * 5.0))
    f = ai.SpecificityProfile(p0.space, rng.normal(size=m), 0.0)
    support = np.zeros((m, m), dtype=bool)
    for i in range(m):
        support[i, (i + 1) % m] = support[(i + 1) % m, i] = True
    extra = rng.integers(0, m, size=(max(m, 4), 2))
    for i, j in extra:
        if i != j:
            support[i, j] = support[j, i] = True
    rows = np.where(support, rng.uniform(0.1, 1.0, size=(m, m)), 0.0)
    if m > 2 and rng.random() < 0.5:
        rows[np.diag_indices(m)] = rng.uniform(0.0, 0.5, size=m)
    rows /= rows.sum(axis=1, keepdims=True)
    q = ai.ProposalKernel(p0.space, rows)
    return p0, f, q


ALL_RULES = (AcceptanceRule.METROPOLIS_HASTINGS, AcceptanceRule.MORAN_SQUARE_ROOT)
