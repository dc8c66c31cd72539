"""Hot numeric kernels: numba-jitted loops with pure-numpy fallbacks.

Two inner loops dominate pipeline runtime at full scale (900k pixels per
cube): the per-pixel Mahalanobis solve and the GF(256) matrix product
behind Reed-Solomon parity generation and erasure recovery.  Both carry an
``@njit`` implementation plus a vectorized numpy fallback.

Selection: the jitted path is used when numba imports cleanly and the
environment variable ``SKYRX_NO_NUMBA`` is unset/empty.  Set
``SKYRX_NO_NUMBA=1`` to force the numpy path (useful for debugging and for
``benchmarks/bench_kernels.py``, which times both).
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import solve_triangular

_DISABLED = os.environ.get("SKYRX_NO_NUMBA", "").strip().lower() not in ("", "0", "false")

try:
    if _DISABLED:
        raise ImportError("disabled via SKYRX_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def mahalanobis_sq_numpy(pixels: np.ndarray, mu: np.ndarray, chol_lower: np.ndarray,
                         chunk: int = 65536) -> np.ndarray:
    """Squared Mahalanobis distance per row of ``pixels`` (N, B), float64.

    Uses the Cholesky factor L of the covariance: delta = ||L^-1 (s - mu)||^2.
    Chunked so a full-size cube never materializes an (N, B) float64 twice.
    """
    n = pixels.shape[0]
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        centered = pixels[start:stop].astype(np.float64) - mu
        y = solve_triangular(chol_lower, centered.T, lower=True, check_finite=False)
        out[start:stop] = np.einsum("bn,bn->n", y, y)
    return out


def gf256_matmul_numpy(mat: np.ndarray, data: np.ndarray, gf_log: np.ndarray,
                       gf_exp: np.ndarray) -> np.ndarray:
    """GF(256) matrix product ``mat @ data`` via log/antilog tables.

    ``mat`` is (r, k) uint8, ``data`` is (k, n) uint8; addition is XOR.
    """
    r, k = mat.shape
    n = data.shape[1]
    out = np.zeros((r, n), dtype=np.uint8)
    log_data = gf_log[data]
    nz = data != 0
    for j in range(k):
        col_log = log_data[j]
        col_nz = nz[j]
        for i in range(r):
            m = mat[i, j]
            if m == 0:
                continue
            prod = gf_exp[gf_log[m] + col_log[col_nz]]
            out[i, col_nz] ^= prod
    return out


if HAS_NUMBA:

    @njit(cache=True)
    def _mahalanobis_sq_jit(pixels, mu, chol_lower):  # pragma: no cover - jitted
        n, b = pixels.shape
        out = np.empty(n, dtype=np.float64)
        y = np.empty(b, dtype=np.float64)
        for i in range(n):
            acc = 0.0
            for row in range(b):
                s = pixels[i, row] - mu[row]
                for col in range(row):
                    s -= chol_lower[row, col] * y[col]
                yr = s / chol_lower[row, row]
                y[row] = yr
                acc += yr * yr
            out[i] = acc
        return out

    @njit(cache=True)
    def _gf256_matmul_jit(mat, data, gf_log, gf_exp):  # pragma: no cover - jitted
        r, k = mat.shape
        n = data.shape[1]
        out = np.zeros((r, n), dtype=np.uint8)
        for i in range(r):
            for j in range(k):
                m = mat[i, j]
                if m == 0:
                    continue
                lm = gf_log[m]
                for t in range(n):
                    d = data[j, t]
                    if d != 0:
                        out[i, t] ^= gf_exp[lm + gf_log[d]]
        return out

    def mahalanobis_sq(pixels, mu, chol_lower):
        # keep float32 pixel blocks as-is; the kernel accumulates in float64
        return _mahalanobis_sq_jit(
            np.ascontiguousarray(pixels),
            np.ascontiguousarray(mu, dtype=np.float64),
            np.ascontiguousarray(chol_lower, dtype=np.float64),
        )

    def gf256_matmul(mat, data, gf_log, gf_exp):
        return _gf256_matmul_jit(
            np.ascontiguousarray(mat),
            np.ascontiguousarray(data),
            gf_log,
            gf_exp,
        )

else:

    def mahalanobis_sq(pixels, mu, chol_lower):
        return mahalanobis_sq_numpy(pixels, mu, chol_lower)

    def gf256_matmul(mat, data, gf_log, gf_exp):
        return gf256_matmul_numpy(mat, data, gf_log, gf_exp)
