"""Phase-type machinery for searches stopped on first target entry.

The target is clumped into one absorbing state; what remains is the
sub-stochastic block over non-absorbing states, from which the hitting-time
law P(T <= t), the stopped-search actinfo, and E(T) all follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chains import TransitionKernel
from .core import Distribution, TargetSet, _readonly
from .errors import EmptyComplement, EmptyTarget, NullTargetZero, SingularSystem, SpaceMismatch

ROW_TOL = 1e-9


@dataclass(frozen=True)
class AbsorbingDecomposition:
    """Blocks of a kernel after clumping the target into one absorbing state.

    trans_na is the |A^c| x |A^c| block between non-absorbing states,
    trans_na_a the column of one-step absorption probabilities, start_na
    the restriction of the start distribution to A^c, and start_in_A the
    start mass already inside the target (so T = 0 with that probability).
    """

    trans_na: np.ndarray
    trans_na_a: np.ndarray
    start_na: np.ndarray
    start_in_A: float
    index_map: tuple[int, ...]

    def __post_init__(self):
        trans_na = np.asarray(self.trans_na, dtype=float)
        trans_na_a = np.asarray(self.trans_na_a, dtype=float)
        start_na = np.asarray(self.start_na, dtype=float)
        k = trans_na.shape[0]
        if trans_na.shape != (k, k) or trans_na_a.shape != (k,) or start_na.shape != (k,):
            raise ValueError("inconsistent block shapes")
        row_sums = trans_na.sum(axis=1) + trans_na_a
        if np.any(np.abs(row_sums - 1.0) > ROW_TOL):
            raise ValueError("rows of [trans_na | trans_na_a] must sum to 1")
        if np.any(start_na < 0):
            raise ValueError("start_na entries must be nonnegative")
        if abs(self.start_in_A + start_na.sum() - 1.0) > ROW_TOL:
            raise ValueError("start mass must total 1")
        object.__setattr__(self, "trans_na", _readonly(trans_na))
        object.__setattr__(self, "trans_na_a", _readonly(trans_na_a))
        object.__setattr__(self, "start_na", _readonly(start_na))
        object.__setattr__(self, "index_map", tuple(int(i) for i in self.index_map))


def decompose(kernel: TransitionKernel, A: TargetSet, P0: Distribution) -> AbsorbingDecomposition:
    if kernel.space != A.space or kernel.space != P0.space:
        raise SpaceMismatch("kernel, target and start disagree on the space")
    if len(A) == 0:
        raise EmptyTarget("cannot absorb into an empty target")
    members = set(A.members)
    na = [i for i in range(kernel.space.size) if i not in members]
    if not na:
        raise EmptyComplement("target covers the whole space; absorbed at t = 0")
    rows = kernel.rows
    trans_na = rows[np.ix_(na, na)]
    trans_na_a = rows[np.ix_(na, list(A.members))].sum(axis=1)
    start_na = P0.mass[na]
    start_in_A = float(P0.mass[list(A.members)].sum())
    return AbsorbingDecomposition(trans_na, trans_na_a, start_na, start_in_A, tuple(na))


def survival_series(dec: AbsorbingDecomposition, t_max: int) -> np.ndarray:
    """P(T > t) for t = 0..t_max."""
    ones = np.ones(dec.start_na.shape[0])
    s = _kernels.weighted_mass_series(dec.trans_na, dec.start_na, ones, int(t_max))
    return np.clip(s, 0.0, 1.0)


def absorption_cdf(dec: AbsorbingDecomposition, t: int) -> float:
    """P(T <= t) = 1 - start_na (trans_na)^t 1; start_in_A at t = 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return dec.start_in_A
    u = _kernels.evolve_vec(dec.trans_na, dec.start_na, int(t))
    return min(max(1.0 - float(u.sum()), 0.0), 1.0)


def actinfo_stopped(dec: AbsorbingDecomposition, P0A: float, t: int) -> float:
    """log P(T <= t) / P0(A); nondecreasing in t, tending to -log P0(A)."""
    if P0A <= 0.0:
        raise NullTargetZero("P0(A) must be positive")
    cdf = absorption_cdf(dec, t)
    if cdf <= 0.0:
        return -math.inf
    return math.log(cdf) - math.log(P0A)


def actinfo_stopped_series(dec: AbsorbingDecomposition, P0A: float, t_max: int) -> np.ndarray:
    if P0A <= 0.0:
        raise NullTargetZero("P0(A) must be positive")
    cdf = 1.0 - survival_series(dec, t_max)
    with np.errstate(divide="ignore"):
        return np.log(cdf) - math.log(P0A)


def expected_hitting_time(dec: AbsorbingDecomposition) -> float:
    """E(T) = start_na (I - trans_na)^{-1} 1 by a dense solve."""
    k = dec.trans_na.shape[0]
    try:
        z = np.linalg.solve(np.eye(k) - dec.trans_na, np.ones(k))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("I - trans_na is singular; target unreachable?") from exc
    if np.any(z < 0):
        raise SingularSystem("fundamental-matrix solve produced negative expected times")
    return float(np.dot(dec.start_na, z))


def substochastic_radius(dec: AbsorbingDecomposition, max_iter: int = 10_000,
                         tol: float = 1e-12) -> float:
    """Upper bound on the spectral radius of trans_na.

    The max row sum when it is strictly below 1, otherwise the
    Collatz-Wielandt bound max_i (Mv)_i / v_i from power iteration with a
    positive vector, which upper-bounds the Perron root at every step.
    """
    row_max = float(dec.trans_na.sum(axis=1).max())
    if row_max < 1.0 - 1e-12:
        return row_max
    v = np.ones(dec.trans_na.shape[0])
    best = row_max
    stalled = 0
    for _ in range(max_iter):
        w = dec.trans_na @ v
        pos = v > 0
        if not np.any(pos):
            return 0.0
        bound = float(np.max(w[pos] / v[pos]))
        nw = float(w.max())
        if nw == 0.0:
            return 0.0
        v = w / nw
        # every iterate upper-bounds the Perron root; the bound can stall
        # for a while before mass redistributes, so require a long stall
        if bound < best - tol:
            best, stalled = bound, 0
        else:
            best = min(best, bound)
            stalled += 1
            if stalled >= 50:
                return best
    return best


def truncation_horizon(dec: AbsorbingDecomposition, tail_tol: float = 1e-8) -> int:
    """Smallest t with rho^t / (1 - rho) <= tail_tol, rho the radius bound."""
    rho = substochastic_radius(dec)
    if rho <= 0.0:
        return 1
    if rho >= 1.0:
        raise SingularSystem("spectral radius bound reached 1; absorption not guaranteed")
    t = math.log(tail_tol * (1.0 - rho)) / math.log(rho)
    return max(1, int(math.ceil(t)))
