"""On-disk formats for cubes (.hsc), masks (.hsm), and INS tracks (.hst).

All multi-byte integers are little-endian.  Layouts:

.hsc  magic "HSC1" | version u16 | dtype u16 (0 = uint16 raw, 1 = float32
      radiance) | lines u32 | samples u32 | bands u32 | wavelengths
      f32[bands] | lines x 96-byte line records | payload in storage order
      (line, sample, band).

      line record (96 bytes): exposure_start u64 | gain f32 | 4 pad bytes |
      ins_before (40 bytes) | ins_after (40 bytes), where an INS block is
      ts u64 | lat f64 | lon f64 | alt f32 | roll f32 | pitch f32 | yaw f32
      -- the same block the line packet header carries.

.hsm  magic "HSM1" | lines u32 | samples u32 | row-major bit-packed mask.

.hst  magic "HST1" | count u32 | count x 40-byte INS blocks, time-ordered.

Floats that the formats narrow to f32 (gain, altitude, attitude,
wavelengths) are expected to be f32-representable already; the synthetic
generator rounds them at creation so write -> read round-trips are exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .cube import (
    GroundTruthMask,
    InsSample,
    InsTrack,
    LineMeta,
    RadianceCube,
    RawCube,
)
from .errors import FormatError

HSC_MAGIC = b"HSC1"
HSM_MAGIC = b"HSM1"
HST_MAGIC = b"HST1"
HSC_VERSION = 1

_HSC_HEAD = struct.Struct("<4sHHIII")
_LINE_REC = struct.Struct("<Qf4x")  # + two INS blocks
_INS_BLOCK = struct.Struct("<Qddffff")
LINE_RECORD_SIZE = _LINE_REC.size + 2 * _INS_BLOCK.size

_DTYPE_CODES = {0: np.dtype("<u2"), 1: np.dtype("<f4")}


def _pack_ins(s: InsSample) -> bytes:
    return _INS_BLOCK.pack(
        s.timestamp_us, s.lat_deg, s.lon_deg, s.alt_m, s.roll_deg, s.pitch_deg, s.yaw_deg
    )


def _unpack_ins(buf: bytes, offset: int) -> InsSample:
    ts, lat, lon, alt, roll, pitch, yaw = _INS_BLOCK.unpack_from(buf, offset)
    return InsSample(ts, lat, lon, alt, roll, pitch, yaw)


def pack_line_meta(m: LineMeta) -> bytes:
    return (
        _LINE_REC.pack(m.exposure_start_us, m.gain)
        + _pack_ins(m.ins_before)
        + _pack_ins(m.ins_after)
    )


def unpack_line_meta(buf: bytes, offset: int) -> LineMeta:
    exposure, gain = _LINE_REC.unpack_from(buf, offset)
    before = _unpack_ins(buf, offset + _LINE_REC.size)
    after = _unpack_ins(buf, offset + _LINE_REC.size + _INS_BLOCK.size)
    return LineMeta(exposure, gain, before, after)


def write_cube(path, cube) -> None:
    if isinstance(cube, RawCube):
        code, arr = 0, np.ascontiguousarray(cube.values, dtype="<u2")
    elif isinstance(cube, RadianceCube):
        code, arr = 1, np.ascontiguousarray(cube.values, dtype="<f4")
    else:
        raise TypeError(f"not a cube: {type(cube)!r}")
    with open(path, "wb") as f:
        f.write(
            _HSC_HEAD.pack(
                HSC_MAGIC, HSC_VERSION, code, cube.lines, cube.samples, cube.bands
            )
        )
        f.write(cube.wavelengths_nm.astype("<f4").tobytes())
        for m in cube.line_meta:
            f.write(pack_line_meta(m))
        f.write(arr.tobytes())


def read_cube(path):
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HSC_HEAD.size:
        raise FormatError(f"truncated header: {len(blob)} bytes at offset 0")
    magic, version, code, lines, samples, bands = _HSC_HEAD.unpack_from(blob, 0)
    if magic != HSC_MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset 0")
    if version != HSC_VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")
    if code not in _DTYPE_CODES:
        raise FormatError(f"unknown dtype code {code} at offset 6")
    dtype = _DTYPE_CODES[code]

    off = _HSC_HEAD.size
    wl_bytes = bands * 4
    meta_bytes = lines * LINE_RECORD_SIZE
    payload_bytes = lines * samples * bands * dtype.itemsize
    need = off + wl_bytes + meta_bytes + payload_bytes
    if len(blob) != need:
        raise FormatError(
            f"truncated payload: file is {len(blob)} bytes, need {need} "
            f"(payload starts at offset {off + wl_bytes + meta_bytes})"
        )
    wavelengths = np.frombuffer(blob, dtype="<f4", count=bands, offset=off).astype(
        np.float64
    )
    off += wl_bytes
    meta = tuple(
        unpack_line_meta(blob, off + i * LINE_RECORD_SIZE) for i in range(lines)
    )
    off += meta_bytes
    values = (
        np.frombuffer(blob, dtype=dtype, count=lines * samples * bands, offset=off)
        .reshape(lines, samples, bands)
        .copy()
    )
    cls = RawCube if code == 0 else RadianceCube
    return cls(values, wavelengths, meta)


def write_mask(path, mask: GroundTruthMask) -> None:
    with open(path, "wb") as f:
        f.write(HSM_MAGIC)
        f.write(struct.pack("<II", mask.lines, mask.samples))
        f.write(np.packbits(mask.values.ravel()).tobytes())


def read_mask(path) -> GroundTruthMask:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != HSM_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r} at offset 0")
    if len(blob) < 12:
        raise FormatError(f"truncated header: {len(blob)} bytes at offset 4")
    lines, samples = struct.unpack_from("<II", blob, 4)
    nbits = lines * samples
    need = 12 + (nbits + 7) // 8
    if len(blob) != need:
        raise FormatError(f"truncated payload: file is {len(blob)} bytes, need {need}")
    bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8, offset=12), count=nbits)
    return GroundTruthMask(bits.reshape(lines, samples).astype(bool))


def write_track(path, track: InsTrack) -> None:
    with open(path, "wb") as f:
        f.write(HST_MAGIC)
        f.write(struct.pack("<I", len(track.samples)))
        for s in track.samples:
            f.write(_pack_ins(s))


def read_track(path) -> InsTrack:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != HST_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r} at offset 0")
    if len(blob) < 8:
        raise FormatError(f"truncated header: {len(blob)} bytes at offset 4")
    (count,) = struct.unpack_from("<I", blob, 4)
    need = 8 + count * _INS_BLOCK.size
    if len(blob) != need:
        raise FormatError(f"truncated payload: file is {len(blob)} bytes, need {need}")
    samples = tuple(
        _unpack_ins(blob, 8 + i * _INS_BLOCK.size) for i in range(count)
    )
    return InsTrack(samples)


def cubes_equal(a, b) -> bool:
    """Bit-exact equality of two cubes (values, wavelengths, metadata)."""
    return (
        type(a) is type(b)
        and a.values.shape == b.values.shape
        and a.values.dtype == b.values.dtype
        and np.array_equal(a.values, b.values)
        and np.array_equal(a.wavelengths_nm, b.wavelengths_nm)
        and a.line_meta == b.line_meta
    )
