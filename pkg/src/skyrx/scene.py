"""Deterministic synthetic scene and flight generation.

Stands in for the physical imager and navigation unit: a flat world with a
smooth background spectrum, optional anomalous footprints (rectangles or
ellipses with their own spectra), and a straight flight with sinusoidal
attitude jitter flying a line camera over it.

Radiometry is intentionally simple: each pixel's radiance is a piecewise-
linear spectrum template (background or the anomaly it lands on) scaled by
global illumination, with per-pixel-per-band multiplicative log-normal
noise.  The raw cube stores what the sensor would have digitized:

    raw = round(radiance * gain / coeff + dark), clipped to uint16

so calibration recovers radiance exactly up to quantization (and exactly,
for noiseless integer-valued templates with identity tables).

Determinism: everything derives from the seed; per-cube noise streams use
sub-seed ``seed XOR cube_id`` so cubes could be generated concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibrate import CalibrationTables
from .cube import GroundTruthMask, InsSample, InsTrack, LineMeta, RawCube
from .georectify import CameraModel, local_to_latlon, project_line, Pose

EPOCH_US = 1_600_000_000_000_000
LINE_RATE_HZ = 249
GAIN_MIN, GAIN_MAX = 1.0, 8.0

_SYNTH_CHUNK_LINES = 128  # fixed: noise draws must not depend on chunking


@dataclass(frozen=True)
class SpectrumTemplate:
    """Piecewise-linear spectrum over wavelength control points."""

    wavelengths_nm: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.wavelengths_nm) != len(self.values) or not self.wavelengths_nm:
            raise ValueError("template needs matching, non-empty control points")
        if any(v < 0 for v in self.values):
            raise ValueError("template values must be non-negative")

    def sample(self, band_centers_nm: np.ndarray) -> np.ndarray:
        return np.interp(
            band_centers_nm, np.asarray(self.wavelengths_nm), np.asarray(self.values)
        )


@dataclass(frozen=True)
class AnomalySpec:
    """One planted footprint: shape, center/size in scene meters, spectrum."""

    shape: str  # "rectangle" | "ellipse"
    center_m: tuple[float, float]
    size_m: tuple[float, float]
    spectrum: SpectrumTemplate

    def __post_init__(self):
        if self.shape not in ("rectangle", "ellipse"):
            raise ValueError(f"unknown anomaly shape {self.shape!r}")
        if self.size_m[0] <= 0 or self.size_m[1] <= 0:
            raise ValueError("anomaly size must be positive")

    def contains(self, east_m: np.ndarray, north_m: np.ndarray) -> np.ndarray:
        dx = np.asarray(east_m) - self.center_m[0]
        dy = np.asarray(north_m) - self.center_m[1]
        hx, hy = self.size_m[0] / 2.0, self.size_m[1] / 2.0
        if self.shape == "rectangle":
            return (np.abs(dx) <= hx) & (np.abs(dy) <= hy)
        return (dx / hx) ** 2 + (dy / hy) ** 2 <= 1.0


@dataclass(frozen=True)
class SceneSpec:
    """Scene extent, background radiometry, and planted anomalies."""

    width_m: float
    length_m: float
    background: SpectrumTemplate
    noise_sigma: float = 0.0
    illumination: float = 1.0
    anomalies: tuple[AnomalySpec, ...] = ()

    def validate(self) -> None:
        if self.width_m <= 0 or self.length_m <= 0:
            raise ValueError("scene extent must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")
        for i, a in enumerate(self.anomalies):
            hx, hy = a.size_m[0] / 2.0, a.size_m[1] / 2.0
            cx, cy = a.center_m
            if not (hx <= cx <= self.width_m - hx and hy <= cy <= self.length_m - hy):
                raise ValueError(f"invalid spec: anomaly {i} footprint outside scene")


@dataclass(frozen=True)
class FlightSpec:
    """Flight and acquisition parameters.

    ``line_rate_hz`` stays at the imager's fixed 249 Hz.  ``fixed_gain``
    pins per-line gain (useful for exactness tests); by default gain sweeps
    a slow sinusoid inside [1, 8].
    """

    altitude_m: float = 40.0
    speed_mps: float = 5.0
    heading_deg: float = 0.0
    line_rate_hz: int = LINE_RATE_HZ
    lines_per_cube: int = 1000
    ins_rate_hz: int = 200
    roll_jitter_deg: float = 0.0
    pitch_jitter_deg: float = 0.0
    yaw_jitter_deg: float = 0.0
    roll_period_s: float = 7.0
    pitch_period_s: float = 5.0
    yaw_period_s: float = 11.0
    gain_period_s: float = 20.0
    fixed_gain: float | None = None
    anchor_lat_deg: float = 35.118
    anchor_lon_deg: float = -89.937

    def validate(self) -> None:
        if self.altitude_m <= 0:
            raise ValueError("altitude must be positive")
        if self.speed_mps <= 0:
            raise ValueError("speed must be positive")
        if self.line_rate_hz <= 0 or self.ins_rate_hz <= 0:
            raise ValueError("rates must be positive")
        if self.lines_per_cube < 1:
            raise ValueError("lines_per_cube must be >= 1")
        if self.fixed_gain is not None and not GAIN_MIN <= self.fixed_gain <= GAIN_MAX:
            raise ValueError(f"fixed gain outside [{GAIN_MIN}, {GAIN_MAX}]")


def band_grid(bands: int = 300) -> np.ndarray:
    """Band centers: bands-20 linear across [400, 1000] nm, 10 beyond each end.

    Returned as float64 values that are exactly f32-representable, so cube
    files round-trip bit-exactly.
    """
    if bands < 22:
        raise ValueError("need at least 22 bands (20 sit outside [400, 1000])")
    inner = np.linspace(400.0, 1000.0, bands - 20)
    step = inner[1] - inner[0]
    low = 400.0 - step * np.arange(10, 0, -1)
    high = 1000.0 + step * np.arange(1, 11)
    grid = np.concatenate([low, inner, high])
    return grid.astype(np.float32).astype(np.float64)


def default_tables(samples: int, bands: int) -> CalibrationTables:
    """Smooth, deterministic dark/coefficient grids for the synthetic sensor."""
    s = np.arange(samples, dtype=np.float64)[:, None] / max(samples, 1)
    b = np.arange(bands, dtype=np.float64)[None, :] / max(bands, 1)
    dark = 60.0 + 25.0 * np.sin(2 * np.pi * s) * np.cos(2 * np.pi * b)
    coeff = 1.0 + 0.3 * np.sin(2 * np.pi * (s + b))
    return CalibrationTables(dark.astype(np.float32), coeff.astype(np.float32))


def identity_tables(samples: int, bands: int) -> CalibrationTables:
    return CalibrationTables(
        np.zeros((samples, bands), np.float32), np.ones((samples, bands), np.float32)
    )


def _f32(x: float) -> float:
    return float(np.float32(x))


@dataclass(frozen=True)
class _FlightPath:
    """Smooth truth functions the generator and the INS both sample."""

    spec: FlightSpec
    start_east: float
    start_north: float
    phases: tuple[float, float, float, float]

    def position(self, t_s: float) -> tuple[float, float]:
        h = math.radians(self.spec.heading_deg)
        d = self.spec.speed_mps * t_s
        return self.start_east + d * math.sin(h), self.start_north + d * math.cos(h)

    def attitude(self, t_s: float) -> tuple[float, float, float]:
        sp = self.spec
        pr, pp, py, _ = self.phases

        def jit(amp, period, phase):
            if amp == 0.0:
                return 0.0
            return amp * math.sin(2 * math.pi * t_s / period + phase)

        roll = jit(sp.roll_jitter_deg, sp.roll_period_s, pr)
        pitch = jit(sp.pitch_jitter_deg, sp.pitch_period_s, pp)
        yaw = sp.heading_deg + jit(sp.yaw_jitter_deg, sp.yaw_period_s, py)
        return roll, pitch, yaw

    def gain(self, t_s: float) -> float:
        sp = self.spec
        if sp.fixed_gain is not None:
            return _f32(sp.fixed_gain)
        mid = (GAIN_MAX + GAIN_MIN) / 2.0
        amp = (GAIN_MAX - GAIN_MIN) / 2.0
        return _f32(
            mid + amp * math.sin(2 * math.pi * t_s / sp.gain_period_s + self.phases[3])
        )

    def ins_sample(self, t_us: int) -> InsSample:
        t_s = (t_us - EPOCH_US) / 1e6
        east, north = self.position(t_s)
        roll, pitch, yaw = self.attitude(t_s)
        lat, lon = local_to_latlon(
            east, north, self.spec.anchor_lat_deg, self.spec.anchor_lon_deg
        )
        return InsSample(
            timestamp_us=int(t_us),
            lat_deg=float(lat),
            lon_deg=float(lon),
            alt_m=_f32(self.spec.altitude_m),
            roll_deg=_f32(roll),
            pitch_deg=_f32(pitch),
            yaw_deg=_f32(yaw),
        )

    def pose(self, t_us: int) -> Pose:
        t_s = (t_us - EPOCH_US) / 1e6
        east, north = self.position(t_s)
        roll, pitch, yaw = self.attitude(t_s)
        return Pose(
            east_m=east,
            north_m=north,
            alt_m=self.spec.altitude_m,
            roll_deg=roll,
            pitch_deg=pitch,
            yaw_deg=yaw,
            time_us=int(t_us),
        )


def exposure_start_us(line: int, line_rate_hz: int = LINE_RATE_HZ) -> int:
    return EPOCH_US + round(line * 1_000_000 / line_rate_hz)


def generate_flight(
    scene: SceneSpec,
    flight: FlightSpec,
    seed: int,
    bands: int = 300,
    samples: int = 900,
    tables: CalibrationTables | None = None,
) -> tuple[list[RawCube], InsTrack, list[GroundTruthMask]]:
    """Synthesize the raw cubes, INS track, and truth masks of one flight.

    The ground track is centered on the scene and padded to whole cubes.
    Output is bit-identical for identical arguments.
    """
    scene.validate()
    flight.validate()
    if tables is None:
        tables = default_tables(samples, bands)
    if (tables.samples, tables.bands) != (samples, bands):
        raise ValueError("calibration tables do not match requested geometry")

    wavelengths = band_grid(bands)
    camera = CameraModel(samples=samples)

    lines_needed = max(
        1, math.ceil(scene.length_m / flight.speed_mps * flight.line_rate_hz)
    )
    n_cubes = math.ceil(lines_needed / flight.lines_per_cube)
    total_lines = n_cubes * flight.lines_per_cube
    track_len_m = total_lines / flight.line_rate_hz * flight.speed_mps

    h = math.radians(flight.heading_deg)
    center = (scene.width_m / 2.0, scene.length_m / 2.0)
    start = (
        center[0] - math.sin(h) * track_len_m / 2.0,
        center[1] - math.cos(h) * track_len_m / 2.0,
    )
    phase_rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 0x5CE5E])
    path = _FlightPath(
        spec=flight,
        start_east=start[0],
        start_north=start[1],
        phases=tuple(phase_rng.uniform(0, 2 * math.pi, 4)),
    )

    # INS track sampled at ins_rate with margin so every exposure is bracketed
    ins_dt_us = round(1_000_000 / flight.ins_rate_hz)
    last_exposure = exposure_start_us(total_lines - 1, flight.line_rate_hz)
    k_max = (last_exposure - EPOCH_US) // ins_dt_us + 3
    track = InsTrack(
        tuple(
            path.ins_sample(EPOCH_US + k * ins_dt_us) for k in range(-2, int(k_max))
        )
    )

    templates = np.stack(
        [scene.background.sample(wavelengths)]
        + [a.spectrum.sample(wavelengths) for a in scene.anomalies]
    ).astype(np.float32)
    templates *= np.float32(scene.illumination)

    inv_coeff = 1.0 / tables.coeff[None, :, :]
    dark = tables.dark[None, :, :]

    cubes: list[RawCube] = []
    masks: list[GroundTruthMask] = []
    lpc = flight.lines_per_cube
    for c in range(n_cubes):
        rng = np.random.default_rng((seed ^ c) & 0xFFFFFFFFFFFFFFFF)
        values = np.empty((lpc, samples, bands), dtype=np.uint16)
        mask = np.zeros((lpc, samples), dtype=bool)
        meta: list[LineMeta] = []
        class_map = np.zeros((lpc, samples), dtype=np.int16)
        gains = np.empty(lpc, dtype=np.float32)

        for i in range(lpc):
            line = c * lpc + i
            t_us = exposure_start_us(line, flight.line_rate_hz)
            pose = path.pose(t_us)
            pts, valid = project_line(pose, camera)
            for k, anomaly in enumerate(scene.anomalies, start=1):
                hit = valid & anomaly.contains(pts[:, 0], pts[:, 1])
                class_map[i, hit] = k
            gains[i] = path.gain((t_us - EPOCH_US) / 1e6)
            before, after = track.bracket(t_us)
            meta.append(
                LineMeta(
                    exposure_start_us=t_us,
                    gain=float(gains[i]),
                    ins_before=before,
                    ins_after=after,
                )
            )
        mask[:] = class_map > 0

        for lo in range(0, lpc, _SYNTH_CHUNK_LINES):
            hi = min(lo + _SYNTH_CHUNK_LINES, lpc)
            radiance = templates[class_map[lo:hi]]
            if scene.noise_sigma > 0:
                noise = rng.standard_normal(radiance.shape, dtype=np.float32)
                radiance = radiance * np.exp(np.float32(scene.noise_sigma) * noise)
            dn = radiance * (gains[lo:hi, None, None] * inv_coeff) + dark
            np.rint(dn, out=dn)
            np.clip(dn, 0.0, 65535.0, out=dn)
            values[lo:hi] = dn.astype(np.uint16)

        cubes.append(RawCube(values, wavelengths, tuple(meta)))
        masks.append(GroundTruthMask(mask))
    return cubes, track, masks


def demo_scene() -> SceneSpec:
    """Grass-like background with two high-contrast planted objects."""
    background = SpectrumTemplate(
        wavelengths_nm=(380.0, 450.0, 550.0, 680.0, 750.0, 1020.0),
        values=(60.0, 90.0, 170.0, 120.0, 300.0, 260.0),
    )
    tank = SpectrumTemplate(
        wavelengths_nm=(380.0, 500.0, 620.0, 800.0, 1020.0),
        values=(240.0, 420.0, 180.0, 520.0, 120.0),
    )
    tarp = SpectrumTemplate(
        wavelengths_nm=(380.0, 460.0, 560.0, 700.0, 1020.0),
        values=(400.0, 150.0, 460.0, 80.0, 380.0),
    )
    return SceneSpec(
        width_m=34.0,
        length_m=40.0,
        background=background,
        noise_sigma=0.02,
        anomalies=(
            AnomalySpec("rectangle", (13.0, 17.0), (2.0, 2.0), tank),
            AnomalySpec("ellipse", (22.0, 27.0), (3.0, 1.6), tarp),
        ),
    )


def demo_flight() -> FlightSpec:
    return FlightSpec(
        roll_jitter_deg=1.5,
        pitch_jitter_deg=1.0,
        yaw_jitter_deg=2.0,
    )


def spectrum_to_dict(t: SpectrumTemplate) -> dict:
    return {"wavelengths_nm": list(t.wavelengths_nm), "values": list(t.values)}


def spectrum_from_dict(d: dict) -> SpectrumTemplate:
    return SpectrumTemplate(tuple(d["wavelengths_nm"]), tuple(d["values"]))


def scene_to_dict(s: SceneSpec) -> dict:
    return {
        "width_m": s.width_m,
        "length_m": s.length_m,
        "background": spectrum_to_dict(s.background),
        "noise_sigma": s.noise_sigma,
        "illumination": s.illumination,
        "anomalies": [
            {
                "shape": a.shape,
                "center_m": list(a.center_m),
                "size_m": list(a.size_m),
                "spectrum": spectrum_to_dict(a.spectrum),
            }
            for a in s.anomalies
        ],
    }


def scene_from_dict(d: dict) -> SceneSpec:
    return SceneSpec(
        width_m=float(d["width_m"]),
        length_m=float(d["length_m"]),
        background=spectrum_from_dict(d["background"]),
        noise_sigma=float(d.get("noise_sigma", 0.0)),
        illumination=float(d.get("illumination", 1.0)),
        anomalies=tuple(
            AnomalySpec(
                shape=a["shape"],
                center_m=tuple(a["center_m"]),
                size_m=tuple(a["size_m"]),
                spectrum=spectrum_from_dict(a["spectrum"]),
            )
            for a in d.get("anomalies", ())
        ),
    )


def flight_to_dict(f: FlightSpec) -> dict:
    return {
        "altitude_m": f.altitude_m,
        "speed_mps": f.speed_mps,
        "heading_deg": f.heading_deg,
        "line_rate_hz": f.line_rate_hz,
        "lines_per_cube": f.lines_per_cube,
        "ins_rate_hz": f.ins_rate_hz,
        "roll_jitter_deg": f.roll_jitter_deg,
        "pitch_jitter_deg": f.pitch_jitter_deg,
        "yaw_jitter_deg": f.yaw_jitter_deg,
        "roll_period_s": f.roll_period_s,
        "pitch_period_s": f.pitch_period_s,
        "yaw_period_s": f.yaw_period_s,
        "gain_period_s": f.gain_period_s,
        "fixed_gain": f.fixed_gain,
        "anchor_lat_deg": f.anchor_lat_deg,
        "anchor_lon_deg": f.anchor_lon_deg,
    }


def flight_from_dict(d: dict) -> FlightSpec:
    kwargs = {k: d[k] for k in flight_to_dict(FlightSpec()) if k in d}
    return FlightSpec(**kwargs)
