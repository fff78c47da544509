"""The jitted kernels and their plain fallbacks must agree bit for bit."""

import numpy as np
import pytest

from actinfo import _kernels


def random_chain_inputs(rng, m=16, t=200):
    rows = rng.dirichlet(np.ones(m), size=m)
    cum = np.cumsum(rows, axis=1)
    uniforms = rng.random(t)
    mask = rng.random(m) < 0.2
    if not mask.any():
        mask[0] = True
    return cum, rows, uniforms, mask


needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA,
                                 reason="numba unavailable or disabled")


@needs_numba
def test_chain_path_paths_identical():
    rng = np.random.default_rng(0)
    for _ in range(50):
        cum, _rows, u, mask = random_chain_inputs(rng)
        start = int(rng.integers(0, cum.shape[0]))
        for use_stop in (False, True):
            jit = _kernels.chain_path(cum, start, u, mask, use_stop)
            py = _kernels.chain_path_py(cum, start, u, mask, use_stop)
            assert tuple(jit) == tuple(py)


@needs_numba
def test_evolve_paths_identical():
    rng = np.random.default_rng(1)
    for _ in range(20):
        _cum, rows, _u, _mask = random_chain_inputs(rng)
        p0 = rng.dirichlet(np.ones(rows.shape[0]))
        jit = _kernels.evolve_vec(rows, p0, 137)
        py = _kernels.evolve_vec_py(rows, p0, 137)
        assert np.array_equal(jit, py)


@needs_numba
def test_mass_series_paths_identical():
    rng = np.random.default_rng(2)
    for _ in range(20):
        _cum, rows, _u, mask = random_chain_inputs(rng)
        p0 = rng.dirichlet(np.ones(rows.shape[0]))
        w = mask.astype(float)
        jit = _kernels.weighted_mass_series(rows, p0, w, 300)
        py = _kernels.weighted_mass_series_py(rows, p0, w, 300)
        assert np.array_equal(jit, py)


def test_chain_path_respects_stopping():
    cum = np.cumsum(np.array([[0.0, 1.0], [1.0, 0.0]]), axis=1)
    mask = np.array([False, True])
    final, hit = _kernels.chain_path_py(cum, 0, np.full(10, 0.5), mask, True)
    assert (final, hit) == (1, 1)
    final, hit = _kernels.chain_path_py(cum, 1, np.full(10, 0.5), mask, True)
    assert (final, hit) == (1, 0)


def test_chain_path_clips_top_edge():
    # a uniform above a slightly short cumulative row must clip to m - 1
    rows = np.array([[0.3, 0.7 - 1e-12], [0.5, 0.5]])
    cum = np.cumsum(rows, axis=1)
    final, _hit = _kernels.chain_path_py(cum, 0, np.array([1.0 - 1e-13]),
                                         np.zeros(2, dtype=bool), False)
    assert final == 1
