"""Global anomaly scoring over one cube.

A multivariate Gaussian is fit over every pixel of the cube (each band a
variable, each pixel a sample), then each pixel's score is its squared
Mahalanobis distance from that fit.  Scores are global: no spatial
relationships are used, so pixel order is irrelevant.

The operator-facing threshold (default 0.110) applies to the transmitted
domain, i.e. the square-rooted, cube-normalized score; ``transmit_domain``
maps raw scores there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from . import _accel
from .cube import RadianceCube, ScoreMap

RIDGE_EPSILONS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class CubeStats:
    """Gaussian fit of one cube: band means, covariance, and its inverse.

    ``ridge_used`` is the diagonal loading (absolute, not relative) that was
    required to make the covariance positive definite; 0 for healthy cubes.
    ``chol_lower`` is the Cholesky factor of ``sigma + ridge_used * I``.
    """

    mu: np.ndarray
    sigma: np.ndarray
    sigma_inv: np.ndarray
    ridge_used: float
    chol_lower: np.ndarray


def compute_stats(cube: RadianceCube, chunk: int = 65536) -> CubeStats:
    """Fit the per-cube Gaussian: mean vector and unbiased covariance.

    If the covariance is not positive definite, a diagonal ridge of
    eps * trace(sigma)/B is added, with eps escalating 1e-10 -> 1e-6.
    """
    bands = cube.bands
    pixels = cube.values.reshape(-1, bands)
    n = pixels.shape[0]
    if n <= bands:
        raise ValueError(f"insufficient samples: {n} pixels for {bands} bands")
    if not np.isfinite(cube.values).all():
        raise ValueError("invalid data: cube contains non-finite values")

    mu = np.zeros(bands, dtype=np.float64)
    for start in range(0, n, chunk):
        mu += pixels[start : start + chunk].astype(np.float64).sum(axis=0)
    mu /= n

    cov = np.zeros((bands, bands), dtype=np.float64)
    for start in range(0, n, chunk):
        centered = pixels[start : start + chunk].astype(np.float64) - mu
        cov += centered.T @ centered
    cov /= n - 1
    cov = (cov + cov.T) / 2.0

    trace = float(np.trace(cov))
    scale = trace / bands if trace > 0 else 1.0
    ridge = 0.0
    chol = None
    for eps in (0.0,) + RIDGE_EPSILONS:
        ridge = eps * scale
        try:
            chol = np.linalg.cholesky(cov + ridge * np.eye(bands))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise ValueError("covariance not positive definite even after ridging")

    sigma_inv = cho_solve((chol, True), np.eye(bands), check_finite=False)
    sigma_inv = (sigma_inv + sigma_inv.T) / 2.0
    return CubeStats(
        mu=mu, sigma=cov, sigma_inv=sigma_inv, ridge_used=ridge, chol_lower=chol
    )


def rx_scores(cube: RadianceCube, stats: CubeStats) -> ScoreMap:
    """Squared Mahalanobis distance of every pixel from the cube's fit."""
    if stats.mu.shape[0] != cube.bands:
        raise ValueError(
            f"stats fitted for {stats.mu.shape[0]} bands, cube has {cube.bands}"
        )
    pixels = cube.values.reshape(-1, cube.bands)
    delta = _accel.mahalanobis_sq(pixels, stats.mu, stats.chol_lower)
    return ScoreMap(delta.reshape(cube.lines, cube.samples).astype(np.float32))


def normalize_scores(scores: ScoreMap) -> ScoreMap:
    """Scale so the cube maximum becomes 1; an all-zero map stays zero."""
    m = scores.max_score
    if m <= 0.0:
        return scores
    return ScoreMap(scores.values / np.float32(m))


def threshold_scores(norm_scores: ScoreMap, threshold: float) -> np.ndarray:
    """Boolean mask of pixels whose normalized score exceeds ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    return norm_scores.values > threshold


def transmit_domain(values: np.ndarray, max_score: float) -> np.ndarray:
    """Map raw scores to the transmitted domain: sqrt(score / cube max).

    This is the domain the ground station displays and thresholds; it is 0
    everywhere when the cube maximum is 0.
    """
    v = np.asarray(values, dtype=np.float64)
    if max_score <= 0.0:
        return np.zeros_like(v)
    return np.sqrt(np.clip(v / max_score, 0.0, None))
