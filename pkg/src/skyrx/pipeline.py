"""Air-side staged pipeline and ground-side reconstruction.

The air pipeline mirrors the deployed four-stage design: save raw to disk,
calibrate (discard + bin + RGB), detect, packetize/transmit.  Each stage
runs on its own worker thread and hands whole cubes to the next through a
bounded queue, so at most ``queue_depth`` cubes are in flight and a slow
stage back-pressures the rest.  Stage results do not depend on scheduling,
so the emitted frame stream is byte-identical for any queue depth.

The ground side consumes the frame stream incrementally: erasure-decode
each group, reassemble cubes, interpolate line poses from the packet
headers, project, and keep a growing mosaic raster rebuilt from retained
line data (which is what makes later re-rasterization at new settings
possible).
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .calibrate import CalibrationTables, calibrate_bin_rgb
from .cube import RawCube
from .datalink import (
    ChannelModel,
    PacketHeader,
    ReceivedCube,
    StreamStats,
    assemble_cube,
    channel_transmit,
    decode_stream,
    frames_for_cube,
    packetize_cube,
)
from .evaluate import StageTiming
from .formats import write_cube, write_mask, write_track
from .georectify import CameraModel, ProjectedLine, Raster, interpolate_pose, project_line, rasterize
from .rx import compute_stats, rx_scores, transmit_domain
from .scene import FlightSpec, SceneSpec, default_tables, demo_flight, demo_scene, generate_flight

log = logging.getLogger("skyrx.pipeline")

DEFAULT_THRESHOLD = 0.110


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one end-to-end run."""

    scene: SceneSpec = field(default_factory=demo_scene)
    flight: FlightSpec = field(default_factory=demo_flight)
    seed: int = 0
    bands: int = 300
    samples: int = 900
    channel: ChannelModel | None = None
    bin_factor: int = 4
    threshold: float = DEFAULT_THRESHOLD
    gsd_m: float | None = None
    out_dir: Path | None = None
    queue_depth: int = 3
    port: int = 8008

    def validate(self) -> None:
        if self.queue_depth < 1:
            raise ValueError("queue depth must be >= 1")
        kept = self.bands - 20
        if kept % self.bin_factor != 0:
            raise ValueError(
                f"bin factor {self.bin_factor} does not divide {kept} in-range bands"
            )
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


@dataclass
class FlightData:
    """Synthesized inputs of one flight."""

    cubes: list
    track: object
    masks: list
    tables: CalibrationTables


def synthesize(config: PipelineConfig) -> FlightData:
    config.validate()
    tables = default_tables(config.samples, config.bands)
    cubes, track, masks = generate_flight(
        config.scene,
        config.flight,
        config.seed,
        bands=config.bands,
        samples=config.samples,
        tables=tables,
    )
    return FlightData(cubes=list(cubes), track=track, masks=list(masks), tables=tables)


def write_flight_data(data: FlightData, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    from .calibrate import save_tables

    for i, cube in enumerate(data.cubes):
        write_cube(out_dir / f"cube_{i:04d}.hsc", cube)
    for i, mask in enumerate(data.masks):
        write_mask(out_dir / f"mask_{i:04d}.hsm", mask)
    write_track(out_dir / "track.hst", data.track)
    save_tables(out_dir / "calibration.hsk", data.tables)


@dataclass
class AirResult:
    """Everything the air side produced, in cube order."""

    frames: list
    timings: list
    scores: list  # raw ScoreMap per completed cube (None for dropped)
    rgb: list  # binned-cube RGB image per completed cube
    dropped: list  # (cube_id, reason)


_DONE = object()


def _worker(name, fn, q_in, q_out, dropped, drop_lock):
    while True:
        item = q_in.get()
        if item is _DONE:
            q_out.put(_DONE)
            return
        cube_id, payload, timing = item
        t0 = time.perf_counter()
        try:
            result = fn(cube_id, payload)
        except Exception as exc:  # noqa: BLE001 - stage isolation is the contract
            log.error("cube %d dropped in %s stage: %s", cube_id, name, exc)
            with drop_lock:
                dropped.append((cube_id, f"{name}: {exc}"))
            continue
        timing[name] = time.perf_counter() - t0
        q_out.put((cube_id, result, timing))


def run_air(config: PipelineConfig, data: FlightData | None = None) -> AirResult:
    """Run the four-stage air pipeline over a flight's cubes."""
    config.validate()
    if data is None:
        data = synthesize(config)
    tables = data.tables
    out_dir = Path(config.out_dir) if config.out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    def save_stage(cube_id: int, raw: RawCube):
        if out_dir is not None:
            write_cube(out_dir / f"cube_{cube_id:04d}.hsc", raw)
        return raw

    def calibrate_stage(cube_id: int, raw: RawCube):
        binned, rgb = calibrate_bin_rgb(raw, tables, factor=config.bin_factor)
        return binned, rgb

    def detect_stage(cube_id: int, payload):
        binned, rgb = payload
        stats = compute_stats(binned)
        scores = rx_scores(binned, stats)
        return binned.line_meta, rgb, scores

    def transmit_stage(cube_id: int, payload):
        line_meta, rgb, scores = payload
        packets = packetize_cube(cube_id, rgb, scores.values, line_meta)
        return frames_for_cube(cube_id, packets), rgb, scores

    stages = (
        ("save", save_stage),
        ("calibrate", calibrate_stage),
        ("detect", detect_stage),
        ("transmit", transmit_stage),
    )
    queues = [queue.Queue(maxsize=config.queue_depth) for _ in range(len(stages) + 1)]
    dropped: list = []
    drop_lock = threading.Lock()
    workers = [
        threading.Thread(
            target=_worker,
            args=(name, fn, queues[i], queues[i + 1], dropped, drop_lock),
            daemon=True,
        )
        for i, (name, fn) in enumerate(stages)
    ]
    for w in workers:
        w.start()

    def feed():
        for cube_id, raw in enumerate(data.cubes):
            queues[0].put((cube_id, raw, {}))
        queues[0].put(_DONE)

    feeder = threading.Thread(target=feed, daemon=True)
    feeder.start()

    finished = {}
    while True:
        item = queues[-1].get()
        if item is _DONE:
            break
        cube_id, (frames, rgb, scores), timing = item
        finished[cube_id] = (frames, rgb, scores, timing)
    feeder.join()
    for w in workers:
        w.join()

    result = AirResult(frames=[], timings=[], scores=[], rgb=[], dropped=sorted(dropped))
    for cube_id in sorted(finished):
        frames, rgb, scores, timing = finished[cube_id]
        result.frames.extend(frames)
        result.timings.append(
            StageTiming(
                save_s=timing["save"],
                calibrate_s=timing["calibrate"],
                detect_s=timing["detect"],
                transmit_s=timing["transmit"],
            )
        )
        result.scores.append(scores)
        result.rgb.append(rgb)
    return result


class GroundState:
    """Mutable ground-side state shared between the decoder and the service.

    All reads and writes go through the lock; the raster is replaced, never
    mutated, so a snapshot stays consistent after release.
    """

    def __init__(self, threshold: float = DEFAULT_THRESHOLD, gsd_m: float | None = None):
        self.lock = threading.RLock()
        self.threshold = threshold
        self.gsd_m = gsd_m
        self.anchor: tuple[float, float] | None = None
        self.cubes: dict[int, ReceivedCube] = {}
        self.cube_bounds: dict[int, tuple] = {}
        self.lines: list[ProjectedLine] = []
        self.raster: Raster | None = None
        self.stats = StreamStats()

    def completion_list(self) -> list[float]:
        with self.lock:
            return [self.cubes[c].completion for c in sorted(self.cubes)]

    def bounds(self):
        with self.lock:
            return None if self.raster is None else self.raster.bounds()

    def snapshot(self):
        with self.lock:
            return self.raster, dict(self.cubes)

    def rerasterize(self, gsd_m: float | None = None) -> None:
        """Rebuild the mosaic from retained line data (settings change)."""
        with self.lock:
            if gsd_m is not None:
                self.gsd_m = gsd_m
            if self.lines:
                self.raster = rasterize(self.lines, self.gsd_m)


def _project_cube(state: GroundState, rc: ReceivedCube) -> list[ProjectedLine]:
    camera = CameraModel(samples=rc.samples)
    if state.anchor is None:
        first = next(h for h in rc.headers if h is not None)
        state.anchor = (first.ins_before.lat_deg, first.ins_before.lon_deg)
    lat0, lon0 = state.anchor
    norm_sqrt = transmit_domain(rc.scores, rc.max_score).astype(np.float32)
    lines = []
    for i, header in enumerate(rc.headers):
        if header is None:
            continue
        pose = interpolate_pose(
            header.ins_before, header.ins_after, header.exposure_start_us, lat0, lon0
        )
        points, valid = project_line(pose, camera)
        if not valid.any():
            continue
        lines.append(
            ProjectedLine(points=points, valid=valid, rgb=rc.rgb[i], score=norm_sqrt[i])
        )
    return lines


def run_ground(
    frames: Iterable[bytes],
    config: PipelineConfig | None = None,
    state: GroundState | None = None,
    on_event: Callable[[dict], None] | None = None,
) -> GroundState:
    """Consume a frame stream into assembled cubes and a mosaic raster.

    The optional channel model in ``config`` simulates reception loss on
    the replayed stream.  Events fire per decoded group (``line_batch``)
    and per completed cube (``cube``).
    """
    if config is None:
        config = PipelineConfig()
    if state is None:
        state = GroundState(threshold=config.threshold, gsd_m=config.gsd_m)
    if config.channel is not None:
        frames = channel_transmit(list(frames), config.channel)

    emit = on_event or (lambda event: None)
    current_cube: int | None = None
    packets: list[bytes] = []

    def flush():
        nonlocal packets, current_cube
        if current_cube is None or not packets:
            packets = []
            return
        try:
            rc = assemble_cube(packets)
            projected = _project_cube(state, rc)
            with state.lock:
                state.cubes[rc.cube_id] = rc
                state.lines.extend(projected)
                if projected:
                    pts = np.concatenate([ln.points[ln.valid] for ln in projected])
                    state.cube_bounds[rc.cube_id] = (
                        float(pts[:, 0].min()),
                        float(pts[:, 1].min()),
                        float(pts[:, 0].max()),
                        float(pts[:, 1].max()),
                    )
                if state.lines:
                    state.raster = rasterize(state.lines, state.gsd_m)
            emit(
                {
                    "type": "cube",
                    "cube_id": rc.cube_id,
                    "completion": rc.completion,
                    "bounds": list(state.cube_bounds.get(rc.cube_id, ())) or None,
                }
            )
        except Exception as exc:  # noqa: BLE001 - a bad cube must not kill the feed
            log.error("cube %s discarded on assembly: %s", current_cube, exc)
        packets = []

    for group_id, recovered, report in decode_stream(frames, state.stats):
        if not recovered:
            continue
        sample = next(iter(recovered.values()))
        cube_id = PacketHeader.unpack(sample).cube_id
        if cube_id != current_cube:
            flush()
            current_cube = cube_id
        packets.extend(recovered.values())
        emit({"type": "line_batch", "cube_id": cube_id, "count": len(recovered)})
    flush()
    return state


def save_received(out_dir: Path, rc: ReceivedCube) -> Path:
    """Persist one received cube for later evaluation (npz plumbing)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"received_{rc.cube_id:04d}.npz"
    np.savez_compressed(
        path,
        cube_id=rc.cube_id,
        lines_per_cube=rc.lines_per_cube,
        samples=rc.samples,
        max_score=rc.max_score,
        max_r=rc.max_r,
        max_g=rc.max_g,
        max_b=rc.max_b,
        rgb=rc.rgb,
        scores=rc.scores,
        line_present=rc.line_present,
    )
    return path


def load_received(path) -> ReceivedCube:
    z = np.load(path)
    lpc = int(z["lines_per_cube"])
    return ReceivedCube(
        cube_id=int(z["cube_id"]),
        lines_per_cube=lpc,
        samples=int(z["samples"]),
        max_score=float(z["max_score"]),
        max_r=float(z["max_r"]),
        max_g=float(z["max_g"]),
        max_b=float(z["max_b"]),
        rgb=z["rgb"],
        scores=z["scores"],
        line_present=z["line_present"],
        headers=(None,) * lpc,
    )
