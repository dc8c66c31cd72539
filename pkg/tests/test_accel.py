import os
import subprocess
import sys

import numpy as np

from skyrx import _accel
from skyrx.fec import GF_EXP, GF_LOG


def test_kernel_selection_reports():
    assert isinstance(_accel.HAS_NUMBA, bool)


def test_mahalanobis_paths_agree(rng):
    n, b = 4000, 12
    pixels = rng.normal(50, 4, (n, b)).astype(np.float32)
    cov = np.cov(pixels.astype(np.float64).T) + np.eye(b) * 1e-6
    mu = pixels.mean(axis=0, dtype=np.float64)
    chol = np.linalg.cholesky(cov)
    fast = _accel.mahalanobis_sq(pixels, mu, chol)
    plain = _accel.mahalanobis_sq_numpy(pixels, mu, chol, chunk=997)
    rel = np.abs(fast - plain) / np.maximum(np.abs(plain), 1e-12)
    assert rel.max() < 1e-9


def test_gf_matmul_paths_agree(rng):
    mat = rng.integers(0, 256, (25, 50), dtype=np.uint8)
    data = rng.integers(0, 256, (50, 1337), dtype=np.uint8)
    fast = _accel.gf256_matmul(mat, data, GF_LOG, GF_EXP)
    plain = _accel.gf256_matmul_numpy(mat, data, GF_LOG, GF_EXP)
    assert np.array_equal(fast, plain)


def test_env_flag_forces_numpy_path():
    code = (
        "import skyrx._accel as a; "
        "print(a.HAS_NUMBA, a.mahalanobis_sq.__module__)"
    )
    env = dict(os.environ, SKYRX_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.split()[0] == "False"


def test_numpy_fallback_full_pipeline_slice(rng):
    # the fallback must be a drop-in: score a small cube both ways
    from skyrx.rx import compute_stats, rx_scores
    from conftest import make_radiance

    cube = make_radiance(rng.normal(90, 7, (10, 12, 5)).astype(np.float32))
    stats = compute_stats(cube)
    fast = rx_scores(cube, stats).values
    plain = _accel.mahalanobis_sq_numpy(
        cube.values.reshape(-1, 5), stats.mu, stats.chol_lower
    ).reshape(10, 12)
    assert np.allclose(fast, plain, rtol=1e-6, atol=1e-9)
