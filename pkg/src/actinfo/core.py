"""Finite state spaces, probability vectors, specificity profiles and targets.

Everything downstream (tilting, chains, estimation) consumes these types.
All information quantities are in nats; probabilities are stored in linear
space, which is safe because every in-scope model has at most a few
thousand states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyTarget, NullTargetZero, SpaceMismatch, SupportViolation

NORMALIZATION_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class StateSpace:
    """Enumerated outcome space; index 0..size-1 is the canonical identity."""

    size: int
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("state space needs at least one state")
        if len(self.labels) != self.size:
            raise ValueError(f"expected {self.size} labels, got {len(self.labels)}")
        if len(set(self.labels)) != self.size:
            raise ValueError("labels must be pairwise distinct")

    @classmethod
    def canonical(cls, size: int) -> "StateSpace":
        return cls(size, tuple(str(i) for i in range(size)))


def _check_same_space(a, b):
    if a.space != b.space:
        raise SpaceMismatch("operands live on different state spaces")


@dataclass(frozen=True)
class Distribution:
    """Probability vector on a StateSpace.

    Entries must be nonnegative and sum to 1 within 1e-9; drift inside that
    tolerance is renormalized, anything larger is rejected.
    """

    space: StateSpace
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != (self.space.size,):
            raise ValueError(f"mass must have shape ({self.space.size},)")
        if not np.all(np.isfinite(mass)):
            raise ValueError("mass entries must be finite")
        if np.any(mass < 0):
            raise ValueError("mass entries must be nonnegative")
        total = float(mass.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"mass sums to {total!r}, outside 1 +/- {NORMALIZATION_TOL}")
        object.__setattr__(self, "mass", _readonly(mass / total))

    @classmethod
    def uniform(cls, space: StateSpace) -> "Distribution":
        return cls(space, np.full(space.size, 1.0 / space.size))

    @classmethod
    def point_mass(cls, space: StateSpace, index: int) -> "Distribution":
        mass = np.zeros(space.size)
        mass[index] = 1.0
        return cls(space, mass)


@dataclass(frozen=True)
class SpecificityProfile:
    """Real-valued ranking f of states together with the cutoff f0.

    The high-specificity target is the super-level set {x : f(x) >= f0};
    see :func:`target_set`.
    """

    space: StateSpace
    values: np.ndarray
    threshold: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.space.size,):
            raise ValueError(f"values must have shape ({self.space.size},)")
        if not np.all(np.isfinite(values)):
            raise ValueError("specificity values must be finite")
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        object.__setattr__(self, "values", _readonly(values))


@dataclass(frozen=True)
class TargetSet:
    """Sorted index set of high-specificity states."""

    space: StateSpace
    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(sorted(int(i) for i in self.members))
        if len(set(members)) != len(members):
            raise ValueError("duplicate target indices")
        if members and (members[0] < 0 or members[-1] >= self.space.size):
            raise ValueError("target indices out of range")
        object.__setattr__(self, "members", members)

    def indicator(self) -> np.ndarray:
        v = np.zeros(self.space.size, dtype=bool)
        v[list(self.members)] = True
        return v

    def __len__(self) -> int:
        return len(self.members)


def target_set(f: SpecificityProfile) -> TargetSet:
    """Super-level set {x : f(x) >= f0}; ties at the cutoff are included."""
    idx = np.flatnonzero(f.values >= f.threshold)
    if idx.size == 0:
        raise EmptyTarget(f"no state reaches specificity {f.threshold!r}")
    return TargetSet(f.space, tuple(int(i) for i in idx))


def stringent_target(f: SpecificityProfile) -> TargetSet:
    """Argmax set of f: only maximally specified states, ties all included."""
    fmax = float(f.values.max())
    idx = np.flatnonzero(f.values == fmax)
    return TargetSet(f.space, tuple(int(i) for i in idx))


def target_probability(P: Distribution, A: TargetSet) -> float:
    _check_same_space(P, A)
    return float(P.mass[list(A.members)].sum())


def actinfo(P: Distribution, P0: Distribution, A: TargetSet) -> float:
    """log P(A)/P0(A) in nats.

    Signed: negative means the informed search does worse than the null.
    P(A) = 0 returns -inf (the flagged degenerate value) rather than
    raising, so that downstream tests treat it as a non-rejection.
    """
    _check_same_space(P, P0)
    _check_same_space(P, A)
    p0a = target_probability(P0, A)
    if p0a <= 0.0:
        raise NullTargetZero("null distribution puts no mass on the target")
    pa = target_probability(P, A)
    if pa <= 0.0:
        return -math.inf
    return math.log(pa) - math.log(p0a)


def functional_information(P0: Distribution, A: TargetSet) -> float:
    """-log P0(A): the actinfo of a search that reaches A with certainty."""
    _check_same_space(P0, A)
    p0a = target_probability(P0, A)
    if p0a <= 0.0:
        raise NullTargetZero("null distribution puts no mass on the target")
    return -math.log(p0a)


def kl_divergence(Q: Distribution, P: Distribution) -> float:
    """Kullback-Leibler divergence sum Q log(Q/P), with 0 log 0 = 0."""
    _check_same_space(Q, P)
    q = Q.mass
    p = P.mass
    support = q > 0
    if np.any(p[support] == 0):
        raise SupportViolation("Q puts mass where P has none")
    val = float(np.sum(q[support] * (np.log(q[support]) - np.log(p[support]))))
    # rounding can push tiny KL values a hair below zero
    return max(val, 0.0)


# ---------------------------------------------------------------------------
# CSV round trips (header `index,label,value`, shortest-repr floats so that
# decimal values of <= 17 significant digits survive bit-faithfully)
# ---------------------------------------------------------------------------


def _write_indexed_csv(path, space: StateSpace, values: np.ndarray, comments: list[str]):
    lines = [f"# {c}" for c in comments]
    lines.append("index,label,value")
    for i in range(space.size):
        lines.append(f"{i},{space.labels[i]},{float(values[i])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_indexed_csv(path):
    comments = {}
    rows = []
    header_seen = False
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                comments[k.strip()] = v.strip()
            continue
        if not header_seen:
            if line != "index,label,value":
                raise ValueError(f"unexpected CSV header {line!r}")
            header_seen = True
            continue
        idx, label, value = line.split(",", 2)
        rows.append((int(idx), label, float(value)))
    rows.sort(key=lambda r: r[0])
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ValueError("CSV indices must be 0..m-1 without gaps")
    space = StateSpace(len(rows), tuple(r[1] for r in rows))
    values = np.array([r[2] for r in rows])
    return space, values, comments


def distribution_to_csv(d: Distribution, path) -> None:
    _write_indexed_csv(path, d.space, d.mass, ["kind=distribution"])


def distribution_from_csv(path) -> Distribution:
    space, values, _ = _read_indexed_csv(path)
    return Distribution(space, values)


def profile_to_csv(f: SpecificityProfile, path) -> None:
    _write_indexed_csv(path, f.space, f.values,
                       ["kind=specificity", f"threshold={f.threshold!r}"])


def profile_from_csv(path) -> SpecificityProfile:
    space, values, comments = _read_indexed_csv(path)
    if "threshold" not in comments:
        raise ValueError("specificity CSV is missing the threshold comment")
    return SpecificityProfile(space, values, float(comments["threshold"]))
