"""Seedable random generation: i.i.d. draws and chain trajectories.

Every operation is a pure function of (inputs, seed): identical seeds give
bit-identical output on any platform.  Independent substreams come from
numpy's SeedSequence spawning, keyed by (seed, stream index...), so
replicate loops can hand one substream to each replicate and the result is
independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .chains import TransitionKernel
from .core import Distribution, StateSpace, TargetSet
from .errors import SpaceMismatch


@dataclass(eq=False)
class RandomSource:
    """PCG64 generator seeded by a 64-bit integer plus a substream path."""

    seed: int
    path: tuple[int, ...] = ()
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")
        self.seed = int(self.seed)
        self.path = tuple(int(i) for i in self.path)
        self._gen = np.random.default_rng(np.random.SeedSequence((self.seed, *self.path)))

    def substream(self, index: int) -> "RandomSource":
        """Fresh independent source keyed by (seed, *path, index)."""
        return RandomSource(self.seed, self.path + (int(index),))

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)


@dataclass(frozen=True)
class SampleSet:
    """Recorded i.i.d. state indices with a provenance tag."""

    space: StateSpace
    draws: np.ndarray
    origin: str = ""

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=np.int64)
        if draws.ndim != 1:
            raise ValueError("draws must be one-dimensional")
        if draws.size and (draws.min() < 0 or draws.max() >= self.space.size):
            raise ValueError("draw indices out of range")
        draws.flags.writeable = False
        object.__setattr__(self, "draws", draws)

    def __len__(self) -> int:
        return int(self.draws.size)


def sample_iid(P: Distribution, n: int, rng: RandomSource, origin: str = "iid") -> SampleSet:
    """n categorical draws by inverse CDF over the canonical index order."""
    if n < 1:
        raise ValueError("need at least one draw")
    cum = np.cumsum(P.mass)
    idx = np.searchsorted(cum, rng.uniforms(n), side="right")
    return SampleSet(P.space, np.minimum(idx, P.space.size - 1), origin)


def simulate_chain(kernel: TransitionKernel, start: Distribution, t: int,
                   stop_on: TargetSet | None, rng: RandomSource) -> tuple[int, int | None]:
    """One trajectory X_0 ~ start stepped t times, optionally stopped on
    first entry into stop_on.

    Returns (X_{t and T}, T) with T = None when the target was never hit
    (or no stopping set was given).  Consumes exactly t + 1 uniforms from
    rng regardless of early stopping, so downstream draws from the same
    source do not depend on the trajectory.
    """
    if kernel.space != start.space:
        raise SpaceMismatch("kernel and start disagree on the space")
    if stop_on is not None and stop_on.space != kernel.space:
        raise SpaceMismatch("stopping set lives on a different space")
    if t < 0:
        raise ValueError("t must be nonnegative")
    u = rng.uniforms(t + 1)
    start_cum = np.cumsum(start.mass)
    x0 = int(min(np.searchsorted(start_cum, u[0], side="right"), kernel.space.size - 1))
    if stop_on is None:
        mask = np.zeros(kernel.space.size, dtype=bool)
        use_stop = False
    else:
        mask = stop_on.indicator()
        use_stop = True
    cum_rows = np.cumsum(kernel.rows, axis=1)
    final, hit = _kernels.chain_path(cum_rows, x0, u[1:], mask, use_stop)
    return int(final), (None if hit < 0 else int(hit))


def empirical_distribution(s: SampleSet) -> Distribution:
    if len(s) < 1:
        raise ValueError("empirical distribution needs at least one draw")
    counts = np.bincount(s.draws, minlength=s.space.size)
    return Distribution(s.space, counts / len(s))


def save_sample_set(s: SampleSet, path, seed: int | None = None) -> None:
    """One state index per line; the header comment records the space size,
    seed, and origin tag."""
    header = f"# m={s.space.size} seed={'' if seed is None else seed} origin={s.origin}"
    lines = [header] + [str(i) for i in s.draws]
    Path(path).write_text("\n".join(lines) + "\n")


def load_sample_set(path, space: StateSpace | None = None) -> SampleSet:
    draws = []
    m = None
    origin = ""
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            head, sep, tail = body.partition("origin=")
            if sep:
                origin = tail  # free text, may contain spaces
            for token in head.split():
                if token.startswith("m="):
                    m = int(token[2:])
            continue
        draws.append(int(line))
    if space is None:
        if m is None:
            raise ValueError("sample file has no space-size header")
        space = StateSpace.canonical(m)
    elif m is not None and m != space.size:
        raise SpaceMismatch(f"file says m={m}, given space has {space.size}")
    return SampleSet(space, np.array(draws, dtype=np.int64), origin)
