"""Core in-memory model: hyperspectral cubes, per-line metadata, INS samples.

Value storage is line-major, then sample, then band (all bands of a pixel
are contiguous), which matches the per-pixel access pattern of the anomaly
scorer.  Angles are carried in degrees throughout; conversion to radians
happens inside trigonometric code only.  Instances are frozen and their
arrays are treated as read-only after construction, so they can be shared
freely between pipeline workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

DEFAULT_LINES = 1000
DEFAULT_SAMPLES = 900
DEFAULT_BANDS = 300


def wrap_angle_deg(angle):
    """Wrap an angle (scalar or array, degrees) into [-180, 180)."""
    return (angle + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class InsSample:
    """One timestamped position/attitude report from the navigation unit.

    Altitude is meters above a flat ground datum, not an ellipsoid height.
    """

    timestamp_us: int
    lat_deg: float
    lon_deg: float
    alt_m: float
    roll_deg: float
    pitch_deg: float
    yaw_deg: float


@dataclass(frozen=True)
class LineMeta:
    """Per-line acquisition metadata: exposure time, gain, bracketing INS."""

    exposure_start_us: int
    gain: float
    ins_before: InsSample
    ins_after: InsSample


@dataclass(frozen=True)
class InsTrack:
    """Time-ordered sequence of INS samples."""

    samples: tuple[InsSample, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.samples, key=lambda s: s.timestamp_us))
        object.__setattr__(self, "samples", ordered)

    def __len__(self):
        return len(self.samples)

    def timestamps_us(self) -> np.ndarray:
        return np.array([s.timestamp_us for s in self.samples], dtype=np.int64)

    def bracket(self, t_us: int) -> tuple[InsSample, InsSample]:
        """Return the (before, after) samples bracketing time ``t_us``."""
        ts = self.timestamps_us()
        if len(ts) == 0 or t_us < ts[0] or t_us > ts[-1]:
            raise ValueError(f"time {t_us} outside track span")
        hi = int(np.searchsorted(ts, t_us, side="left"))
        lo = hi if ts[hi] == t_us else hi - 1
        return self.samples[lo], self.samples[hi]


@dataclass(frozen=True, eq=False)
class RawCube:
    """Block of raw 16-bit digital numbers, (lines, samples, bands)."""

    values: np.ndarray
    wavelengths_nm: np.ndarray
    line_meta: tuple[LineMeta, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))
        object.__setattr__(
            self, "wavelengths_nm", np.asarray(self.wavelengths_nm, dtype=np.float64)
        )
        object.__setattr__(self, "line_meta", tuple(self.line_meta))

    @property
    def lines(self) -> int:
        return self.values.shape[0]

    @property
    def samples(self) -> int:
        return self.values.shape[1]

    @property
    def bands(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class RadianceCube:
    """Calibrated cube of 32-bit radiance values (relative units).

    Band count depends on processing stage: 300 as calibrated, 280 after
    the out-of-range discard, 70 after binning.
    """

    values: np.ndarray
    wavelengths_nm: np.ndarray
    line_meta: tuple[LineMeta, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float32))
        object.__setattr__(
            self, "wavelengths_nm", np.asarray(self.wavelengths_nm, dtype=np.float64)
        )
        object.__setattr__(self, "line_meta", tuple(self.line_meta))

    @property
    def lines(self) -> int:
        return self.values.shape[0]

    @property
    def samples(self) -> int:
        return self.values.shape[1]

    @property
    def bands(self) -> int:
        return self.values.shape[2]


Cube = Union[RawCube, RadianceCube]


@dataclass(frozen=True, eq=False)
class GroundTruthMask:
    """Boolean (lines, samples) grid, True where a pixel is anomalous."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=bool))

    @property
    def lines(self) -> int:
        return self.values.shape[0]

    @property
    def samples(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """Per-pixel anomaly scores with the cube maximum used for normalization.

    ``max_score`` is always the grid maximum; it is 0 only for the
    degenerate all-equal cube, where every score is 0.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float32))

    @property
    def max_score(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    @property
    def lines(self) -> int:
        return self.values.shape[0]

    @property
    def samples(self) -> int:
        return self.values.shape[1]


def band_nearest(wavelengths_nm: Sequence[float], target_nm: float) -> int:
    """Index of the band center closest to ``target_nm``.

    Ties break toward the lower index.  Raises ValueError on an empty list.
    """
    ws = np.asarray(wavelengths_nm, dtype=np.float64)
    if ws.size == 0:
        raise ValueError("wavelength list is empty")
    return int(np.argmin(np.abs(ws - target_nm)))


def pixel_at(cube: Cube, line: int, sample: int) -> np.ndarray:
    """The contiguous band vector of one pixel."""
    if not (0 <= line < cube.lines and 0 <= sample < cube.samples):
        raise IndexError(
            f"pixel ({line}, {sample}) outside cube {cube.lines}x{cube.samples}"
        )
    return cube.values[line, sample]


def _validate_ins(prefix: str, s: InsSample, out: list[str]):
    if not -90.0 <= s.lat_deg <= 90.0:
        out.append(f"{prefix}.lat_deg: {s.lat_deg} outside [-90, 90]")
    if not -180.0 <= s.lon_deg <= 180.0:
        out.append(f"{prefix}.lon_deg: {s.lon_deg} outside [-180, 180]")
    for name in ("roll_deg", "pitch_deg", "yaw_deg"):
        a = getattr(s, name)
        if not -180.0 <= a < 180.0:
            out.append(f"{prefix}.{name}: {a} not normalized to [-180, 180)")


def cube_validate(cube: Cube) -> list[str]:
    """Check every type invariant; return violations (empty list if clean).

    Reports rather than raising, and never mutates the cube.
    """
    out: list[str] = []
    v = cube.values
    if v.ndim != 3:
        out.append(f"values: expected 3 dims (lines, samples, bands), got {v.ndim}")
        return out
    if isinstance(cube, RawCube) and v.dtype != np.uint16:
        out.append(f"values: raw cube must be uint16, got {v.dtype}")
    if isinstance(cube, RadianceCube):
        if not np.isfinite(v).all():
            out.append("values: radiance contains non-finite entries")
        elif v.size and float(v.min()) < 0.0:
            out.append("values: radiance contains negative entries")
    if cube.wavelengths_nm.shape != (cube.bands,):
        out.append(
            f"wavelengths_nm: length {cube.wavelengths_nm.shape} != bands {cube.bands}"
        )
    elif cube.bands > 1 and not (np.diff(cube.wavelengths_nm) > 0).all():
        out.append("wavelengths_nm: not strictly increasing")
    if len(cube.line_meta) != cube.lines:
        out.append(f"line_meta: length {len(cube.line_meta)} != lines {cube.lines}")
    else:
        for i, m in enumerate(cube.line_meta):
            if not m.gain > 0:
                out.append(f"line_meta[{i}].gain: {m.gain} not > 0")
            if not (
                m.ins_before.timestamp_us
                <= m.exposure_start_us
                <= m.ins_after.timestamp_us
            ):
                out.append(
                    f"line_meta[{i}].exposure_start_us: {m.exposure_start_us} "
                    "not bracketed by INS timestamps"
                )
            _validate_ins(f"line_meta[{i}].ins_before", m.ins_before, out)
            _validate_ins(f"line_meta[{i}].ins_after", m.ins_after, out)
    return out
