"""Metropolis-Hastings and Moran-type kernels with tilted equilibrium.

Kernels are dense m x m row-stochastic matrices (m capped at 4096, i.e.
hypercubes up to d = 12); the stationary law is found by a dense linear
solve with the last balance equation swapped for the normalization row.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .core import Distribution, SpecificityProfile, StateSpace, TargetSet, _readonly
from .errors import (
    NotStronglyConnected,
    NullTargetZero,
    ReciprocityViolation,
    SingularSystem,
    SpaceMismatch,
    ZeroNullMass,
)

ROW_TOL = 1e-9
STATIONARY_RESIDUAL_TOL = 1e-10
MAX_STATES = 4096


def _validate_rows(space: StateSpace, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    m = space.size
    if rows.shape != (m, m):
        raise ValueError(f"kernel must be {m}x{m}")
    if m > MAX_STATES:
        raise ValueError(f"dense kernels are capped at {MAX_STATES} states")
    if np.any(rows < 0) or not np.all(np.isfinite(rows)):
        raise ValueError("kernel entries must be finite and nonnegative")
    sums = rows.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > ROW_TOL):
        worst = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(f"row {worst} sums to {sums[worst]!r}")
    return rows / sums[:, None]


@dataclass(frozen=True)
class ProposalKernel:
    """Row-stochastic proposal q(x, y); its support graph must be strongly
    connected so that every built chain is irreducible."""

    space: StateSpace
    rows: np.ndarray

    def __post_init__(self):
        rows = _validate_rows(self.space, self.rows)
        n_comp, _ = connected_components(csr_matrix(rows > 0), directed=True,
                                         connection="strong")
        if n_comp != 1:
            raise NotStronglyConnected(f"{n_comp} strongly connected components")
        object.__setattr__(self, "rows", _readonly(rows))


class AcceptanceRule(enum.Enum):
    METROPOLIS_HASTINGS = "metropolis-hastings"
    MORAN_SQUARE_ROOT = "moran-square-root"


@dataclass(frozen=True)
class TransitionKernel:
    space: StateSpace
    rows: np.ndarray
    theta: float
    rule: AcceptanceRule

    def __post_init__(self):
        object.__setattr__(self, "rows", _readonly(_validate_rows(self.space, self.rows)))


def build_kernel(P0: Distribution, f: SpecificityProfile, theta: float,
                 q: ProposalKernel, rule: AcceptanceRule) -> TransitionKernel:
    """Propose-accept kernel whose equilibrium is the tilt of P0 by theta.

    Acceptance is min(1, ratio) for Metropolis-Hastings, or C sqrt(ratio)
    for the Moran square-root rule with C = (max ratio)^{-1/2}, the maximum
    over ordered pairs x != y proposable in both directions.  Ratios are
    formed in log space so large theta cannot overflow.  Self-proposal mass
    q(x, x) is treated as an always-accepted self-transition; the rejection
    mass lands on the diagonal either way.
    """
    if P0.space != f.space or P0.space != q.space:
        raise SpaceMismatch("distribution, specificity and proposal disagree on the space")
    if np.any(P0.mass <= 0.0):
        raise ZeroNullMass("null distribution must be strictly positive everywhere")
    m = P0.space.size
    qr = q.rows
    off = qr > 0
    np.fill_diagonal(off, False)

    logw = theta * f.values + np.log(P0.mass)
    with np.errstate(divide="ignore", invalid="ignore"):
        logq = np.where(qr > 0, np.log(qr), -np.inf)
        # log ratio for x -> y where q(x,y) > 0; -inf marks one-sided proposals
        logratio = logw[None, :] - logw[:, None] + logq.T - logq

    alpha = np.zeros((m, m))
    if rule is AcceptanceRule.METROPOLIS_HASTINGS:
        alpha[off] = np.exp(np.minimum(logratio[off], 0.0))
    elif rule is AcceptanceRule.MORAN_SQUARE_ROOT:
        if np.any(off != off.T):
            raise ReciprocityViolation("Moran rule needs q(x,y) > 0 iff q(y,x) > 0")
        if off.any():
            max_lr = logratio[off].max()
            alpha[off] = np.exp(0.5 * (logratio[off] - max_lr))
    else:  # pragma: no cover
        raise ValueError(f"unknown acceptance rule {rule!r}")

    rows = np.where(off, alpha * qr, 0.0)
    np.fill_diagonal(rows, 0.0)
    diag = 1.0 - rows.sum(axis=1)
    np.fill_diagonal(rows, np.maximum(diag, 0.0))
    return TransitionKernel(P0.space, rows, float(theta), rule)


def _stationary_rows(rows: np.ndarray) -> np.ndarray:
    m = rows.shape[0]
    a = rows.T - np.eye(m)
    a[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
        # one refinement pass keeps the residual at solver noise level
        pi += np.linalg.solve(a, b - a @ pi)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("stationary solve failed; kernel may be reducible") from exc
    residual = float(np.max(np.abs(pi @ rows - pi)))
    if residual > STATIONARY_RESIDUAL_TOL:
        raise SingularSystem(f"stationary residual {residual:.3e} exceeds tolerance")
    pi = np.where((pi < 0) & (pi > -1e-10), 0.0, pi)
    if np.any(pi < 0):
        raise SingularSystem("stationary solution has negative entries")
    return pi / pi.sum()


def stationary(kernel: TransitionKernel) -> Distribution:
    """Unique row vector with pi @ rows = pi and sum(pi) = 1."""
    return Distribution(kernel.space, _stationary_rows(kernel.rows))


def reference_null(q: ProposalKernel) -> Distribution:
    """Stationary law of the accept-all chain (the proposal matrix itself).

    This is the natural no-selection null when the proposal is asymmetric:
    rarely proposed states get correspondingly small null mass.
    """
    return Distribution(q.space, _stationary_rows(q.rows))


def evolve(P0: Distribution, kernel: TransitionKernel, t: int) -> Distribution:
    """P0 @ rows^t via t sequential vector-matrix products (t = 0 is P0)."""
    if P0.space != kernel.space:
        raise SpaceMismatch("start distribution and kernel disagree on the space")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return P0
    p = _kernels.evolve_vec(kernel.rows, P0.mass, int(t))
    return Distribution(P0.space, p)


def target_mass_series(P0: Distribution, kernel: TransitionKernel, A: TargetSet,
                       t_max: int) -> np.ndarray:
    """P_{theta t}(A) for t = 0..t_max in one pass."""
    if P0.space != kernel.space or P0.space != A.space:
        raise SpaceMismatch("operands disagree on the space")
    weights = A.indicator().astype(float)
    return _kernels.weighted_mass_series(kernel.rows, P0.mass, weights, int(t_max))


def actinfo_at_time(P0: Distribution, kernel: TransitionKernel, A: TargetSet,
                    t: int) -> float:
    """log of the target mass at time t over the target mass at time 0."""
    p0a = float(P0.mass[list(A.members)].sum())
    if p0a <= 0.0:
        raise NullTargetZero("start distribution puts no mass on the target")
    pta = float(evolve(P0, kernel, t).mass[list(A.members)].sum())
    return math.log(pta) - math.log(p0a)


def moran_fixation(s: float, N: int) -> float:
    """Fixation probability (1 - 1/s) / (1 - s^-N) of a single mutant with
    relative fitness s in a population of size N; 1/N at s = 1."""
    if s <= 0:
        raise ValueError("fitness ratio must be positive")
    if N < 1:
        raise ValueError("population size must be positive")
    if s == 1.0:
        return 1.0 / N
    delta = math.log(s)
    return math.expm1(-delta) / math.expm1(-N * delta)


# ---------------------------------------------------------------------------
# CSV triplet export/import for external inspection
# ---------------------------------------------------------------------------


def kernel_to_csv(kernel, path) -> None:
    """Write nonzero entries of a kernel (proposal or transition) as
    `from,to,prob` triplets."""
    rows = kernel.rows
    lines = ["from,to,prob"]
    for i, j in zip(*np.nonzero(rows)):
        lines.append(f"{i},{j},{float(rows[i, j])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def kernel_from_csv(path) -> tuple[StateSpace, np.ndarray]:
    """Read `from,to,prob` triplets; validates row-stochasticity."""
    entries = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line == "from,to,prob":
            continue
        i, j, p = line.split(",")
        entries.append((int(i), int(j), float(p)))
    if not entries:
        raise ValueError("no kernel entries found")
    m = 1 + max(max(i for i, _, _ in entries), max(j for _, j, _ in entries))
    rows = np.zeros((m, m))
    for i, j, p in entries:
        rows[i, j] = p
    space = StateSpace.canonical(m)
    return space, _validate_rows(space, rows)
