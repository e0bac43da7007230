import os
import subprocess
import sys

import numpy as np
import pytest

from semeq.ot import BACKEND, _netsimplex_py
from semeq.ot.core import cost_matrix

try:
    from semeq.ot import _netsimplex
except ImportError:
    _netsimplex = None

KERNELS = [_netsimplex_py.TransportSimplex]
if _netsimplex is not None:
    KERNELS.append(_netsimplex.TransportSimplex)


def _cloud(rng, n):
    return rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))


def test_backend_name():
    assert BACKEND in ("cython", "python")


@pytest.mark.skipif(_netsimplex is None, reason="compiled kernel not built")
@pytest.mark.parametrize("shape", [(1, 1), (3, 7), (20, 35), (40, 120)])
def test_kernels_agree(shape):
    rng = np.random.default_rng(sum(shape))
    D = cost_matrix(_cloud(rng, shape[0]), _cloud(rng, shape[1]))
    mu = np.full(shape[0], 1 / shape[0])
    nu = np.full(shape[1], 1 / shape[1])
    g_c = _netsimplex.TransportSimplex(mu, nu).solve(D)
    g_p = _netsimplex_py.TransportSimplex(mu, nu).solve(D)
    assert abs(np.sum(g_c * D) - np.sum(g_p * D)) < 1e-12


@pytest.mark.parametrize("kernel", KERNELS)
def test_warm_start_matches_cold_solve(kernel):
    rng = np.random.default_rng(11)
    nx, ny = 15, 40
    mu, nu = np.full(nx, 1 / nx), np.full(ny, 1 / ny)
    warm = kernel(mu, nu)
    for k in range(5):
        D = rng.random((nx, ny)) - 0.5 * k
        gw = warm.solve(D)
        gc = kernel(mu, nu).solve(D)
        assert abs(np.sum(gw * D) - np.sum(gc * D)) < 1e-12
        np.testing.assert_allclose(gw.sum(axis=1), mu, atol=1e-14)


@pytest.mark.parametrize("kernel", KERNELS)
def test_degenerate_marginals(kernel):
    # integral marginals make most pivots degenerate
    mu = np.array([0.25, 0.25, 0.25, 0.25])
    nu = np.array([0.5, 0.25, 0.25])
    D = np.ones((4, 3))
    g = kernel(mu, nu).solve(D)
    np.testing.assert_allclose(g.sum(axis=1), mu, atol=1e-15)
    np.testing.assert_allclose(g.sum(axis=0), nu, atol=1e-15)


@pytest.mark.parametrize("kernel", KERNELS)
def test_pivot_limit(kernel):
    rng = np.random.default_rng(2)
    D = rng.random((30, 30))
    with pytest.raises(RuntimeError, match="pivot"):
        kernel(np.full(30, 1 / 30), np.full(30, 1 / 30)).solve(D, max_pivots=3)


@pytest.mark.parametrize("kernel", KERNELS)
def test_shape_mismatch(kernel):
    with pytest.raises(ValueError):
        kernel(np.ones(2) / 2, np.ones(3) / 3).solve(np.zeros((3, 2)))


def test_pure_python_selected_by_environment():
    env = dict(os.environ, SEMEQ_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import semeq.ot as o; print(o.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
