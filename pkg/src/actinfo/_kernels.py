"""Hot inner loops: trajectory stepping and long matrix-vector recursions.

Each kernel has a single source implementation that is compiled with numba
when available and run as-is on numpy otherwise.  Set ``ACTINFO_NO_NUMBA=1``
to force the plain path (useful for debugging and for the benchmark in
``benchmarks/bench_kernels.py``).  Both paths consume identical inputs and
perform identical arithmetic, so results are bit-for-bit the same.
"""

import os

import numpy as np

_env = os.environ.get("ACTINFO_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _env in {"1", "true", "yes", "on"}

try:
    if NUMBA_DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _chain_path(cum_rows, state, uniforms, in_target, use_stop):
    """Walk a chain given cumulative kernel rows and pre-drawn uniforms.

    Returns (final_state, hit_time); hit_time is -1 when the target was
    never entered (or stopping is off).  Consumes uniforms[i] at step i+1.
    """
    m = cum_rows.shape[1]
    if use_stop and in_target[state]:
        return state, 0
    for i in range(uniforms.shape[0]):
        s = int(np.searchsorted(cum_rows[state], uniforms[i], side="right"))
        if s >= m:
            s = m - 1
        state = s
        if use_stop and in_target[state]:
            return state, i + 1
    return state, -1


def _evolve_vec(rows, p0, t):
    """p0 @ rows^t by t sequential vector-matrix products."""
    p = p0.copy()
    for _ in range(t):
        p = np.dot(p, rows)
    return p


def _weighted_mass_series(rows, p0, weights, t_max):
    """out[t] = (p0 @ rows^t) . weights for t = 0..t_max.

    Works for sub-stochastic rows too (absorption survival series).
    """
    out = np.empty(t_max + 1)
    p = p0.copy()
    out[0] = np.dot(p, weights)
    for t in range(1, t_max + 1):
        p = np.dot(p, rows)
        out[t] = np.dot(p, weights)
    return out


# plain-path aliases kept importable for the benchmark and equivalence tests
chain_path_py = _chain_path
evolve_vec_py = _evolve_vec
weighted_mass_series_py = _weighted_mass_series

if HAVE_NUMBA:
    chain_path = njit(cache=True)(_chain_path)
    evolve_vec = njit(cache=True)(_evolve_vec)
    weighted_mass_series = njit(cache=True)(_weighted_mass_series)
else:
    chain_path = _chain_path
    evolve_vec = _evolve_vec
    weighted_mass_series = _weighted_mass_series
