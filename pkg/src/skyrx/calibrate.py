"""Raw-to-radiance conversion, out-of-range band discard, binning, RGB.

Calibration removes per-line gain and per-(sample, band) sensor response:

    radiance[l, s, b] = max(0, raw[l, s, b] - dark[s, b]) * coeff[s, b] / gain[l]

Values below the dark offset clamp to zero (radiance is non-negative).
Band handling follows the processed-cube contract: discard centers outside
[400, 1000] nm, then sum groups of ``factor`` consecutive bands (binning
sums, it does not average); a binned band's center is the mean of its
members.  Display RGB is pulled from the binned cube at the bands nearest
640/550/460 nm.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .cube import RadianceCube, RawCube, band_nearest
from .errors import FormatError

BAND_KEEP_MIN_NM = 400.0
BAND_KEEP_MAX_NM = 1000.0
RGB_TARGETS_NM = (640.0, 550.0, 460.0)

HSK_MAGIC = b"HSK1"


@dataclass(frozen=True)
class CalibrationTables:
    """Per-(sample, band) dark offsets and radiance coefficients."""

    dark: np.ndarray
    coeff: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dark", np.asarray(self.dark, dtype=np.float32))
        object.__setattr__(self, "coeff", np.asarray(self.coeff, dtype=np.float32))
        if self.dark.shape != self.coeff.shape or self.dark.ndim != 2:
            raise ValueError("dark and coeff must be equal-shaped 2-D grids")
        if not (self.coeff > 0).all():
            raise ValueError("coeff must be positive everywhere")

    @property
    def samples(self) -> int:
        return self.dark.shape[0]

    @property
    def bands(self) -> int:
        return self.dark.shape[1]


def save_tables(path, tables: CalibrationTables) -> None:
    with open(path, "wb") as f:
        f.write(HSK_MAGIC)
        f.write(struct.pack("<II", tables.samples, tables.bands))
        f.write(tables.dark.astype("<f4").tobytes())
        f.write(tables.coeff.astype("<f4").tobytes())


def load_tables(path) -> CalibrationTables:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != HSK_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r} at offset 0")
    if len(blob) < 12:
        raise FormatError(f"truncated header: {len(blob)} bytes, need 12")
    samples, bands = struct.unpack_from("<II", blob, 4)
    need = 12 + 2 * samples * bands * 4
    if len(blob) != need:
        raise FormatError(f"truncated payload at offset {len(blob)}: need {need} bytes")
    grid = samples * bands * 4
    dark = np.frombuffer(blob, dtype="<f4", count=samples * bands, offset=12)
    coeff = np.frombuffer(blob, dtype="<f4", count=samples * bands, offset=12 + grid)
    return CalibrationTables(
        dark.reshape(samples, bands).copy(), coeff.reshape(samples, bands).copy()
    )


def _line_gains(cube: RawCube) -> np.ndarray:
    gains = np.array([m.gain for m in cube.line_meta], dtype=np.float32)
    if not (gains > 0).all():
        raise ValueError("every line gain must be positive")
    return gains


def apply_calibration(raw: RawCube, tables: CalibrationTables) -> RadianceCube:
    """Convert raw digital numbers to gain-independent radiance."""
    if (tables.samples, tables.bands) != (raw.samples, raw.bands):
        raise ValueError(
            f"invalid tables: shape ({tables.samples}, {tables.bands}) does not "
            f"match cube ({raw.samples}, {raw.bands})"
        )
    gains = _line_gains(raw)
    centered = raw.values.astype(np.float32) - tables.dark[None, :, :]
    np.maximum(centered, 0.0, out=centered)
    centered *= tables.coeff[None, :, :]
    centered /= gains[:, None, None]
    return RadianceCube(centered, raw.wavelengths_nm, raw.line_meta)


def discard_oob_bands(cube: RadianceCube) -> RadianceCube:
    """Drop bands with centers outside [400, 1000] nm."""
    keep = (cube.wavelengths_nm >= BAND_KEEP_MIN_NM) & (
        cube.wavelengths_nm <= BAND_KEEP_MAX_NM
    )
    return RadianceCube(
        np.ascontiguousarray(cube.values[:, :, keep]),
        cube.wavelengths_nm[keep],
        cube.line_meta,
    )


def bin_bands(cube: RadianceCube, factor: int = 4) -> RadianceCube:
    """Sum each run of ``factor`` consecutive bands into one."""
    if factor < 1 or cube.bands % factor != 0:
        raise ValueError(f"band count {cube.bands} not divisible by factor {factor}")
    out_bands = cube.bands // factor
    summed = cube.values.reshape(cube.lines, cube.samples, out_bands, factor).sum(
        axis=3, dtype=np.float32
    )
    centers = cube.wavelengths_nm.reshape(out_bands, factor).mean(axis=1)
    return RadianceCube(summed, centers, cube.line_meta)


def extract_rgb(cube: RadianceCube) -> np.ndarray:
    """(lines, samples, 3) image from the bands nearest 640/550/460 nm."""
    idx = [band_nearest(cube.wavelengths_nm, t) for t in RGB_TARGETS_NM]
    return np.ascontiguousarray(cube.values[:, :, idx])


def calibrate_bin_rgb(
    raw: RawCube,
    tables: CalibrationTables,
    factor: int = 4,
    chunk_lines: int = 64,
) -> tuple[RadianceCube, np.ndarray]:
    """Fused calibrate -> discard -> bin -> RGB for one cube.

    Equivalent to composing the individual operations but streams over line
    chunks, so the full-band float32 cube is never materialized at once.
    """
    if (tables.samples, tables.bands) != (raw.samples, raw.bands):
        raise ValueError(
            f"invalid tables: shape ({tables.samples}, {tables.bands}) does not "
            f"match cube ({raw.samples}, {raw.bands})"
        )
    gains = _line_gains(raw)
    keep = (raw.wavelengths_nm >= BAND_KEEP_MIN_NM) & (
        raw.wavelengths_nm <= BAND_KEEP_MAX_NM
    )
    kept = int(keep.sum())
    if factor < 1 or kept % factor != 0:
        raise ValueError(f"band count {kept} not divisible by factor {factor}")
    out_bands = kept // factor
    centers = raw.wavelengths_nm[keep].reshape(out_bands, factor).mean(axis=1)

    dark = tables.dark[None, :, :]
    coeff = tables.coeff[None, :, :]
    out = np.empty((raw.lines, raw.samples, out_bands), dtype=np.float32)
    for start in range(0, raw.lines, chunk_lines):
        stop = min(start + chunk_lines, raw.lines)
        block = raw.values[start:stop].astype(np.float32) - dark
        np.maximum(block, 0.0, out=block)
        block *= coeff
        block /= gains[start:stop, None, None]
        block = block[:, :, keep]
        out[start:stop] = block.reshape(
            stop - start, raw.samples, out_bands, factor
        ).sum(axis=3, dtype=np.float32)

    binned = RadianceCube(out, centers, raw.line_meta)
    return binned, extract_rgb(binned)
