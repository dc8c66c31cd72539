"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Runs the two hot loops at deployed scale: Mahalanobis scoring of one full
cube (900k pixels x 70 bands) and Reed-Solomon parity/recovery for one
frame group (50 x 3728 bytes, 25 parity).

    python benchmarks/bench_kernels.py

Set SKYRX_NO_NUMBA=1 to confirm the fallback path is what the package
would actually use without numba (only the numpy rows will print).
"""

import time

import numpy as np

from skyrx import _accel
from skyrx.fec import GF_EXP, GF_LOG, ErasureCode


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_mahalanobis():
    rng = np.random.default_rng(0)
    n, b = 1000 * 900, 70
    pixels = rng.normal(100, 8, (n, b)).astype(np.float32)
    cov = np.cov(pixels[:: n // (50 * b)].astype(np.float64).T) + np.eye(b) * 1e-9
    mu = pixels.mean(axis=0, dtype=np.float64)
    chol = np.linalg.cholesky(cov)

    rows = []
    if _accel.HAS_NUMBA:
        _accel.mahalanobis_sq(pixels[:1000], mu, chol)  # compile
        rows.append(("numba", timeit(lambda: _accel.mahalanobis_sq(pixels, mu, chol))))
    rows.append(
        ("numpy", timeit(lambda: _accel.mahalanobis_sq_numpy(pixels, mu, chol)))
    )
    return "rx scoring (900k x 70)", rows


def bench_gf_matmul():
    rng = np.random.default_rng(1)
    code = ErasureCode(50, 25)
    payloads = [rng.integers(0, 256, 3728, dtype=np.uint8).tobytes() for _ in range(50)]
    data = np.frombuffer(b"".join(payloads), dtype=np.uint8).reshape(50, 3728)
    parity_rows = code.matrix[50:]

    rows = []
    if _accel.HAS_NUMBA:
        _accel.gf256_matmul(parity_rows, data, GF_LOG, GF_EXP)  # compile
        rows.append(
            ("numba", timeit(lambda: _accel.gf256_matmul(parity_rows, data, GF_LOG, GF_EXP)))
        )
    rows.append(
        ("numpy", timeit(lambda: _accel.gf256_matmul_numpy(parity_rows, data, GF_LOG, GF_EXP)))
    )
    return "fec parity (50+25 x 3728B)", rows


def bench_group_decode():
    rng = np.random.default_rng(2)
    code = ErasureCode(50, 25)
    payloads = [rng.integers(0, 256, 3728, dtype=np.uint8).tobytes() for _ in range(50)]
    coded = list(enumerate(payloads + code.encode(payloads)))
    erased = set(rng.permutation(75)[:25].tolist())
    kept = [c for c in coded if c[0] not in erased]

    return "fec decode (25 erasures)", [("selected", timeit(lambda: code.decode(kept)))]


def main():
    print(f"numba path enabled: {_accel.HAS_NUMBA}")
    per_cube_groups = 20
    for label, rows in (bench_mahalanobis(), bench_gf_matmul(), bench_group_decode()):
        for path, seconds in rows:
            note = ""
            if "parity" in label:
                note = f"  ({seconds * per_cube_groups * 1000:.0f} ms per 20-group cube)"
            print(f"{label:30s} {path:9s} {seconds * 1000:9.2f} ms{note}")


if __name__ == "__main__":
    main()
