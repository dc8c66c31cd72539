"""Line packetization, FEC grouping, channel simulation, cube reassembly.

One line packet is exactly 3728 bytes: a 128-byte header followed by 900
pixels of [RGB565 u16 | half-precision score u16], all little-endian.

Header layout (byte offsets):

    0   magic "SKRX"          32  max_score f32 (raw score cube max)
    4   version u16 = 1       36  max_R f32
    6   header_len u16 = 128  40  max_G f32
    8   cube_id u32           44  max_B f32
    12  line_index u32        48  ins_before (40 bytes)
    16  lines_per_cube u32    88  ins_after  (40 bytes)
    20  samples u32
    24  exposure_start u64    INS block: ts u64 | lat f64 | lon f64 |
                              alt f32 | roll f32 | pitch f32 | yaw f32

Per-pixel encoding: scores transmit as sqrt(score / max_score) in IEEE-754
half precision (the square root spreads the heavily low-skewed scores over
the format's dense range); colors normalize to the cube's channel maxima
and quantize round-half-up to 5/6/5 bits, packed R high, G middle, B low.

Frames add an 8-byte outer header (group_id u32, index u8, kind u8,
payload_len u16).  Every 50 data frames form a group with 25 Reed-Solomon
parity frames (indices 50..74); any 50 of the 75 reconstruct the group.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .cube import InsSample, LineMeta
from .errors import FormatError, ProtocolError
from .fec import GROUP_DATA, GROUP_PARITY, ErasureCode, FecReport

PACKET_MAGIC = b"SKRX"
PACKET_VERSION = 1
HEADER_LEN = 128
PAYLOAD_SAMPLES = 900
PACKET_LEN = HEADER_LEN + PAYLOAD_SAMPLES * 4  # 3728

FRAME_DATA = 0
FRAME_PARITY = 1

_HEAD = struct.Struct("<4sHHIIIIQffff")
_INS = struct.Struct("<Qddffff")
_FRAME = struct.Struct("<IBBH")
FRAME_OVERHEAD = _FRAME.size  # 8

_CODEC = ErasureCode(GROUP_DATA, GROUP_PARITY)


@dataclass(frozen=True)
class PacketHeader:
    """Per-line header; cube-wide fields repeat in every line's packet."""

    cube_id: int
    line_index: int
    lines_per_cube: int
    samples: int
    exposure_start_us: int
    max_score: float
    max_r: float
    max_g: float
    max_b: float
    ins_before: InsSample
    ins_after: InsSample

    def pack(self) -> bytes:
        head = _HEAD.pack(
            PACKET_MAGIC,
            PACKET_VERSION,
            HEADER_LEN,
            self.cube_id,
            self.line_index,
            self.lines_per_cube,
            self.samples,
            self.exposure_start_us,
            self.max_score,
            self.max_r,
            self.max_g,
            self.max_b,
        )
        return head + _pack_ins(self.ins_before) + _pack_ins(self.ins_after)

    @classmethod
    def unpack(cls, buf: bytes) -> "PacketHeader":
        if len(buf) < HEADER_LEN:
            raise FormatError(f"short header: {len(buf)} bytes, need {HEADER_LEN}")
        magic, version, hlen, cube_id, line_index, lpc, samples, exposure, ms, mr, mg, mb = _HEAD.unpack_from(buf, 0)
        if magic != PACKET_MAGIC:
            raise FormatError(f"bad packet magic {magic!r}")
        if version != PACKET_VERSION:
            raise FormatError(f"unsupported packet version {version}")
        if hlen != HEADER_LEN:
            raise FormatError(f"unexpected header length {hlen}")
        if line_index >= lpc:
            raise FormatError(f"line index {line_index} >= lines_per_cube {lpc}")
        return cls(
            cube_id=cube_id,
            line_index=line_index,
            lines_per_cube=lpc,
            samples=samples,
            exposure_start_us=exposure,
            max_score=ms,
            max_r=mr,
            max_g=mg,
            max_b=mb,
            ins_before=_unpack_ins(buf, 48),
            ins_after=_unpack_ins(buf, 88),
        )

    def shared_fields(self) -> tuple:
        """Fields constant across all lines of a cube."""
        return (
            self.cube_id,
            self.lines_per_cube,
            self.samples,
            self.max_score,
            self.max_r,
            self.max_g,
            self.max_b,
        )


def _pack_ins(s: InsSample) -> bytes:
    return _INS.pack(
        s.timestamp_us, s.lat_deg, s.lon_deg, s.alt_m, s.roll_deg, s.pitch_deg, s.yaw_deg
    )


def _unpack_ins(buf: bytes, offset: int) -> InsSample:
    ts, lat, lon, alt, roll, pitch, yaw = _INS.unpack_from(buf, offset)
    return InsSample(ts, lat, lon, alt, roll, pitch, yaw)


def _quantize(channel: np.ndarray, channel_max: float, levels: int) -> np.ndarray:
    if channel_max <= 0.0:
        return np.zeros(channel.shape, dtype=np.uint16)
    q = np.floor(channel.astype(np.float64) / channel_max * levels + 0.5)
    return np.clip(q, 0, levels).astype(np.uint16)


def pack_rgb565(rgb_row: np.ndarray, max_r: float, max_g: float, max_b: float) -> np.ndarray:
    r = _quantize(rgb_row[:, 0], max_r, 31)
    g = _quantize(rgb_row[:, 1], max_g, 63)
    b = _quantize(rgb_row[:, 2], max_b, 31)
    return (r << 11) | (g << 5) | b


def unpack_rgb565(packed: np.ndarray, max_r: float, max_g: float, max_b: float) -> np.ndarray:
    out = np.empty(packed.shape + (3,), dtype=np.float32)
    out[:, 0] = (packed >> 11) / np.float32(31) * np.float32(max_r)
    out[:, 1] = ((packed >> 5) & 0x3F) / np.float32(63) * np.float32(max_g)
    out[:, 2] = (packed & 0x1F) / np.float32(31) * np.float32(max_b)
    return out


def encode_scores_half(score_row: np.ndarray, max_score: float) -> np.ndarray:
    """uint16 views of half-precision sqrt(score / max)."""
    if max_score <= 0.0:
        return np.zeros(score_row.shape, dtype=np.uint16)
    frac = np.sqrt(score_row.astype(np.float64) / max_score)
    return frac.astype(np.float16).view(np.uint16)


def decode_scores_half(bits: np.ndarray, max_score: float) -> np.ndarray:
    frac = bits.astype(np.uint16).view(np.float16).astype(np.float64)
    return (frac * frac * max_score).astype(np.float32)


def encode_line(rgb_row: np.ndarray, score_row: np.ndarray, header: PacketHeader) -> bytes:
    """One line to its 3728-byte over-the-air packet."""
    rgb_row = np.asarray(rgb_row)
    score_row = np.asarray(score_row)
    if rgb_row.shape != (PAYLOAD_SAMPLES, 3) or score_row.shape != (PAYLOAD_SAMPLES,):
        raise ValueError(
            f"rows must be ({PAYLOAD_SAMPLES}, 3) rgb and ({PAYLOAD_SAMPLES},) score"
        )
    if header.samples != PAYLOAD_SAMPLES:
        raise ValueError(f"header samples {header.samples} != {PAYLOAD_SAMPLES}")
    payload = np.empty((PAYLOAD_SAMPLES, 2), dtype="<u2")
    payload[:, 0] = pack_rgb565(rgb_row, header.max_r, header.max_g, header.max_b)
    payload[:, 1] = encode_scores_half(score_row, header.max_score)
    return header.pack() + payload.tobytes()


def decode_line(packet: bytes) -> tuple[np.ndarray, np.ndarray, PacketHeader]:
    """Invert :func:`encode_line`: denormalized rgb row, score row, header."""
    if len(packet) != PACKET_LEN:
        raise FormatError(f"bad packet length {len(packet)}, expected {PACKET_LEN}")
    header = PacketHeader.unpack(packet)
    payload = np.frombuffer(packet, dtype="<u2", offset=HEADER_LEN).reshape(
        PAYLOAD_SAMPLES, 2
    )
    rgb = unpack_rgb565(payload[:, 0], header.max_r, header.max_g, header.max_b)
    scores = decode_scores_half(payload[:, 1], header.max_score)
    return rgb, scores, header


def packetize_cube(
    cube_id: int,
    rgb: np.ndarray,
    scores: np.ndarray,
    line_meta: Sequence[LineMeta],
) -> list[bytes]:
    """Every line of a cube to packets, in line order.

    ``scores`` are raw (unnormalized); the cube maxima that undo
    normalization on the ground are computed here and repeated in every
    header.
    """
    lines = rgb.shape[0]
    if scores.shape[0] != lines or len(line_meta) != lines:
        raise ValueError("rgb, scores, and line_meta must cover the same lines")
    max_score = float(scores.max()) if scores.size else 0.0
    max_r = float(rgb[:, :, 0].max())
    max_g = float(rgb[:, :, 1].max())
    max_b = float(rgb[:, :, 2].max())
    packets = []
    for i in range(lines):
        header = PacketHeader(
            cube_id=cube_id,
            line_index=i,
            lines_per_cube=lines,
            samples=rgb.shape[1],
            exposure_start_us=line_meta[i].exposure_start_us,
            max_score=max_score,
            max_r=max_r,
            max_g=max_g,
            max_b=max_b,
            ins_before=line_meta[i].ins_before,
            ins_after=line_meta[i].ins_after,
        )
        packets.append(encode_line(rgb[i], scores[i], header))
    return packets


def make_frame(group_id: int, index: int, kind: int, payload: bytes) -> bytes:
    return _FRAME.pack(group_id, index, kind, len(payload)) + payload


def parse_frame(frame: bytes) -> tuple[int, int, int, bytes]:
    if len(frame) < FRAME_OVERHEAD:
        raise FormatError(f"short frame: {len(frame)} bytes")
    group_id, index, kind, plen = _FRAME.unpack_from(frame, 0)
    if len(frame) != FRAME_OVERHEAD + plen:
        raise FormatError(f"frame length {len(frame)} != header claim {plen + FRAME_OVERHEAD}")
    if kind == FRAME_DATA and not 0 <= index < GROUP_DATA:
        raise FormatError(f"data frame index {index} outside 0..{GROUP_DATA - 1}")
    if kind == FRAME_PARITY and not GROUP_DATA <= index < GROUP_DATA + GROUP_PARITY:
        raise FormatError(
            f"parity frame index {index} outside {GROUP_DATA}..{GROUP_DATA + GROUP_PARITY - 1}"
        )
    if kind not in (FRAME_DATA, FRAME_PARITY):
        raise FormatError(f"unknown frame kind {kind}")
    return group_id, index, kind, frame[FRAME_OVERHEAD:]


def frames_for_cube(cube_id: int, packets: Sequence[bytes]) -> list[bytes]:
    """Group a cube's packets 50-at-a-time and append 25 parity frames each."""
    if len(packets) % GROUP_DATA != 0:
        raise ValueError(
            f"line count {len(packets)} not a multiple of group size {GROUP_DATA}"
        )
    groups_per_cube = len(packets) // GROUP_DATA
    frames = []
    for g in range(groups_per_cube):
        group_id = cube_id * groups_per_cube + g
        chunk = packets[g * GROUP_DATA : (g + 1) * GROUP_DATA]
        for i, p in enumerate(chunk):
            frames.append(make_frame(group_id, i, FRAME_DATA, p))
        for i, p in enumerate(_CODEC.encode(chunk)):
            frames.append(make_frame(group_id, GROUP_DATA + i, FRAME_PARITY, p))
    return frames


@dataclass(frozen=True)
class ChannelModel:
    """Frame-drop model: independent (bernoulli) or bursty (gilbert_elliott).

    The Gilbert-Elliott chain applies the current state's loss probability
    to each frame, then transitions; it starts in the good state.
    """

    kind: str = "bernoulli"
    p_loss: float = 0.0
    p_good_to_bad: float = 0.0
    p_bad_to_good: float = 1.0
    loss_good: float = 0.0
    loss_bad: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("bernoulli", "gilbert_elliott"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        probs = (
            self.p_loss,
            self.p_good_to_bad,
            self.p_bad_to_good,
            self.loss_good,
            self.loss_bad,
        )
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError("channel probabilities must lie in [0, 1]")


def parse_channel_spec(spec: str) -> ChannelModel:
    """Parse CLI channel syntax: bernoulli:<p> or ge:<pgb>,<pbg>,<lg>,<lb>."""
    kind, _, rest = spec.partition(":")
    if kind == "bernoulli":
        return ChannelModel(kind="bernoulli", p_loss=float(rest))
    if kind == "ge":
        pgb, pbg, lg, lb = (float(x) for x in rest.split(","))
        return ChannelModel(
            kind="gilbert_elliott",
            p_good_to_bad=pgb,
            p_bad_to_good=pbg,
            loss_good=lg,
            loss_bad=lb,
        )
    raise ValueError(f"unknown channel spec {spec!r}")


def channel_transmit(frames: Iterable[bytes], model: ChannelModel) -> list[bytes]:
    """Frames surviving the channel, order preserved, deterministic per seed."""
    frames = list(frames)
    rng = np.random.default_rng(model.seed)
    if model.kind == "bernoulli":
        drops = rng.random(len(frames)) < model.p_loss
        return [f for f, d in zip(frames, drops) if not d]
    out = []
    good = True
    draws = rng.random((len(frames), 2))
    for f, (loss_draw, flip_draw) in zip(frames, draws):
        p_loss = model.loss_good if good else model.loss_bad
        if loss_draw >= p_loss:
            out.append(f)
        flip = model.p_good_to_bad if good else model.p_bad_to_good
        if flip_draw < flip:
            good = not good
    return out


def write_stream(path, frames: Iterable[bytes]) -> None:
    """Record frames to a .fst file: (u32 length, bytes) records."""
    with open(path, "wb") as f:
        for frame in frames:
            f.write(struct.pack("<I", len(frame)))
            f.write(frame)


def read_stream(path) -> Iterator[bytes]:
    """Replay a .fst file in recorded order."""
    with open(path, "rb") as f:
        while True:
            head = f.read(4)
            if not head:
                return
            if len(head) < 4:
                raise FormatError("truncated record length at end of stream")
            (n,) = struct.unpack("<I", head)
            frame = f.read(n)
            if len(frame) < n:
                raise FormatError(f"truncated frame: wanted {n} bytes, got {len(frame)}")
            yield frame


@dataclass
class StreamStats:
    frames: int = 0
    malformed: int = 0
    duplicates: int = 0


def decode_stream(
    frames: Iterable[bytes], stats: StreamStats | None = None
) -> Iterator[tuple[int, dict[int, bytes], FecReport]]:
    """Yield (group_id, {data_index: packet}, report) per FEC group.

    The transmit side emits groups back-to-back and the point-to-point
    link never reorders, so a change of group id marks the previous group
    complete and it is erasure-decoded immediately.  Duplicates keep the
    first copy; malformed frames are counted and skipped.
    """
    if stats is None:
        stats = StreamStats()
    current_id: int | None = None
    group: dict[int, bytes] = {}
    for frame in frames:
        stats.frames += 1
        try:
            group_id, index, _, payload = parse_frame(frame)
        except FormatError:
            stats.malformed += 1
            continue
        if group_id != current_id:
            if current_id is not None and group:
                recovered, report = _CODEC.decode(group.items())
                yield current_id, recovered, report
            current_id = group_id
            group = {}
        if index in group:
            stats.duplicates += 1
            continue
        group[index] = payload
    if current_id is not None and group:
        recovered, report = _CODEC.decode(group.items())
        yield current_id, recovered, report


@dataclass(frozen=True, eq=False)
class ReceivedCube:
    """One cube reassembled on the ground; missing lines are black/zero."""

    cube_id: int
    lines_per_cube: int
    samples: int
    max_score: float
    max_r: float
    max_g: float
    max_b: float
    rgb: np.ndarray  # (lines, samples, 3) float32
    scores: np.ndarray  # (lines, samples) float32, raw-score domain
    line_present: np.ndarray  # (lines,) bool
    headers: tuple  # per line: PacketHeader or None

    @property
    def completion(self) -> float:
        return float(self.line_present.sum()) / self.lines_per_cube

    @property
    def received_lines(self) -> int:
        return int(self.line_present.sum())


def assemble_cube(packets: Iterable[bytes]) -> ReceivedCube:
    """Rebuild a cube from any non-empty subset of its line packets.

    Cube-wide header fields must agree across packets; a conflict raises
    ProtocolError.  Assembly is idempotent under duplicate packets.
    """
    decoded = []
    for p in packets:
        decoded.append(decode_line(p))
    if not decoded:
        raise ValueError("cannot assemble a cube from zero packets")
    shared = decoded[0][2].shared_fields()
    for _, _, h in decoded[1:]:
        if h.shared_fields() != shared:
            raise ProtocolError(
                f"conflicting cube-wide header fields: {h.shared_fields()} != {shared}"
            )
    cube_id, lpc, samples, max_score, max_r, max_g, max_b = shared
    rgb = np.zeros((lpc, samples, 3), dtype=np.float32)
    scores = np.zeros((lpc, samples), dtype=np.float32)
    present = np.zeros(lpc, dtype=bool)
    headers: list = [None] * lpc
    for row_rgb, row_scores, h in decoded:
        rgb[h.line_index] = row_rgb
        scores[h.line_index] = row_scores
        present[h.line_index] = True
        headers[h.line_index] = h
    return ReceivedCube(
        cube_id=cube_id,
        lines_per_cube=lpc,
        samples=samples,
        max_score=max_score,
        max_r=max_r,
        max_g=max_g,
        max_b=max_b,
        rgb=rgb,
        scores=scores,
        line_present=present,
        headers=tuple(headers),
    )


@dataclass(frozen=True)
class BandwidthSummary:
    """Link-rate accounting in Mbit/s (decimal megabits)."""

    payload_mbit_s: float
    data_frame_mbit_s: float
    total_mbit_s: float


def bandwidth_summary(
    line_rate_hz: int = 249,
    samples: int = PAYLOAD_SAMPLES,
    packet_len: int = PACKET_LEN,
    frame_overhead: int = FRAME_OVERHEAD,
    group_data: int = GROUP_DATA,
    group_parity: int = GROUP_PARITY,
) -> BandwidthSummary:
    """Payload, data-frame, and FEC-plus-framing rates of the link."""
    payload = line_rate_hz * samples * 4 * 8 / 1e6
    data_frames = line_rate_hz * packet_len * 8 / 1e6
    frames_per_s = line_rate_hz * (group_data + group_parity) / group_data
    total = frames_per_s * (packet_len + frame_overhead) * 8 / 1e6
    return BandwidthSummary(payload, data_frames, total)
