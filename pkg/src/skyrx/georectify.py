"""Ground projection of scan lines and north-up rasterization.

Coordinate conventions used throughout:

* World frame: x = east (m), y = north (m), z = up (m), in a local tangent
  plane.  Latitude/longitude map to meters by equirectangular scaling about
  a fixed anchor point; the ground is the flat plane z = ground_alt.
* Body frame at zero attitude, heading 0: forward = +north, right = +east,
  boresight straight down.  Sample j of a line looks across-track at
  theta_j = fov * (j/(S-1) - 1/2), positive toward +east.
* Attitude: roll about the forward axis (right side down positive), pitch
  about the right axis (nose up positive), yaw clockwise from north.
  Body-to-world rotation applies roll, then pitch, then yaw.

Rasterization is nearest-cell splatting with last-writer-wins, so a valid
cell always holds an exact input value, never an interpolated one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cube import InsSample, wrap_angle_deg

EARTH_RADIUS_M = 6371008.8


def latlon_to_local(lat_deg, lon_deg, anchor_lat_deg: float, anchor_lon_deg: float):
    """(east, north) meters of a lat/lon relative to the anchor point."""
    k = math.pi / 180.0 * EARTH_RADIUS_M
    east = (np.asarray(lon_deg) - anchor_lon_deg) * k * math.cos(
        math.radians(anchor_lat_deg)
    )
    north = (np.asarray(lat_deg) - anchor_lat_deg) * k
    return east, north


def local_to_latlon(east_m, north_m, anchor_lat_deg: float, anchor_lon_deg: float):
    """Inverse of :func:`latlon_to_local`."""
    k = math.pi / 180.0 * EARTH_RADIUS_M
    lat = anchor_lat_deg + np.asarray(north_m) / k
    lon = anchor_lon_deg + np.asarray(east_m) / (
        k * math.cos(math.radians(anchor_lat_deg))
    )
    return lat, lon


@dataclass(frozen=True)
class CameraModel:
    """Across-track line camera: sample count and full field of view."""

    samples: int = 900
    fov_deg: float = 47.5

    def __post_init__(self):
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError(f"fov {self.fov_deg} outside (0, 180)")

    def across_track_angles_deg(self) -> np.ndarray:
        if self.samples == 1:
            return np.zeros(1)
        j = np.arange(self.samples, dtype=np.float64)
        return self.fov_deg * (j / (self.samples - 1) - 0.5)


@dataclass(frozen=True)
class Pose:
    """Imager position and attitude at one instant, in local meters."""

    east_m: float
    north_m: float
    alt_m: float
    roll_deg: float
    pitch_deg: float
    yaw_deg: float
    time_us: int


def attitude_matrix(roll_deg: float, pitch_deg: float, yaw_deg: float) -> np.ndarray:
    """Body-to-world rotation, roll then pitch then yaw."""
    r = math.radians(roll_deg)
    p = math.radians(pitch_deg)
    y = math.radians(yaw_deg)
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    roll = np.array([[cr, 0.0, sr], [0.0, 1.0, 0.0], [-sr, 0.0, cr]])
    pitch = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    yaw = np.array([[cy, sy, 0.0], [-sy, cy, 0.0], [0.0, 0.0, 1.0]])
    return yaw @ pitch @ roll


def _interp_angle_deg(a: float, b: float, frac: float) -> float:
    # shortest arc per axis; 350 -> 10 interpolates through 0, not 180
    return float(wrap_angle_deg(a + frac * wrap_angle_deg(b - a)))


def interpolate_pose(
    before: InsSample,
    after: InsSample,
    t_us: int,
    anchor_lat_deg: float,
    anchor_lon_deg: float,
) -> Pose:
    """Pose at time ``t_us`` between two INS samples.

    Position is linear in time (after conversion to local meters); each
    attitude angle follows the shortest arc between its endpoints.
    """
    if not before.timestamp_us <= t_us <= after.timestamp_us:
        raise ValueError(
            f"time {t_us} outside bracket "
            f"[{before.timestamp_us}, {after.timestamp_us}]"
        )
    span = after.timestamp_us - before.timestamp_us
    frac = 0.0 if span == 0 else (t_us - before.timestamp_us) / span
    e0, n0 = latlon_to_local(before.lat_deg, before.lon_deg, anchor_lat_deg, anchor_lon_deg)
    e1, n1 = latlon_to_local(after.lat_deg, after.lon_deg, anchor_lat_deg, anchor_lon_deg)
    return Pose(
        east_m=float(e0 + frac * (e1 - e0)),
        north_m=float(n0 + frac * (n1 - n0)),
        alt_m=before.alt_m + frac * (after.alt_m - before.alt_m),
        roll_deg=_interp_angle_deg(before.roll_deg, after.roll_deg, frac),
        pitch_deg=_interp_angle_deg(before.pitch_deg, after.pitch_deg, frac),
        yaw_deg=_interp_angle_deg(before.yaw_deg, after.yaw_deg, frac),
        time_us=int(t_us),
    )


def project_line(
    pose: Pose, camera: CameraModel, ground_alt_m: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Ground intersections of every sample ray of one line.

    Returns ``(points, valid)``: points is (samples, 2) east/north meters;
    samples whose ray does not descend toward the ground plane are invalid.
    """
    if pose.alt_m <= ground_alt_m:
        raise ValueError(
            f"pose altitude {pose.alt_m} not above ground {ground_alt_m}"
        )
    theta = np.radians(camera.across_track_angles_deg())
    dirs_body = np.stack(
        [np.sin(theta), np.zeros_like(theta), -np.cos(theta)], axis=1
    )
    dirs_world = dirs_body @ attitude_matrix(
        pose.roll_deg, pose.pitch_deg, pose.yaw_deg
    ).T
    dz = dirs_world[:, 2]
    valid = dz < -1e-12
    t = np.zeros(camera.samples)
    t[valid] = (pose.alt_m - ground_alt_m) / -dz[valid]
    points = np.empty((camera.samples, 2), dtype=np.float64)
    points[:, 0] = pose.east_m + t * dirs_world[:, 0]
    points[:, 1] = pose.north_m + t * dirs_world[:, 1]
    points[~valid] = np.nan
    return points, valid


@dataclass(frozen=True, eq=False)
class ProjectedLine:
    """One scan line after projection: ground points plus pixel values."""

    points: np.ndarray  # (S, 2) east/north m
    valid: np.ndarray  # (S,) bool
    rgb: np.ndarray  # (S, 3) float32
    score: np.ndarray  # (S,) float32


@dataclass(frozen=True, eq=False)
class Raster:
    """North-up grid; origin is the outer top-left corner (min east, max north).

    Row index grows southward.  A cell is valid only where some input pixel
    splatted into it; all other cells are zero-filled and invalid.
    """

    origin_east_m: float
    origin_north_m: float
    gsd_m: float
    rgb: np.ndarray  # (H, W, 3) float32
    score: np.ndarray  # (H, W) float32
    valid: np.ndarray  # (H, W) bool

    @property
    def height(self) -> int:
        return self.score.shape[0]

    @property
    def width(self) -> int:
        return self.score.shape[1]

    def bounds(self) -> tuple[float, float, float, float]:
        """(east0, north0, east1, north1) outer edges."""
        return (
            self.origin_east_m,
            self.origin_north_m - self.height * self.gsd_m,
            self.origin_east_m + self.width * self.gsd_m,
            self.origin_north_m,
        )


def default_gsd(lines: Sequence[ProjectedLine]) -> float:
    """Median distance between consecutive valid samples along lines."""
    spacings = []
    for ln in lines:
        pts = ln.points[ln.valid]
        if pts.shape[0] >= 2:
            spacings.append(np.linalg.norm(np.diff(pts, axis=0), axis=1))
    if not spacings:
        raise ValueError("cannot derive gsd: no line has two valid samples")
    return float(np.median(np.concatenate(spacings)))


def rasterize(lines: Sequence[ProjectedLine], gsd_m: float | None = None) -> Raster:
    """Splat projected lines into a north-up raster, last writer wins."""
    valid_lines = [ln for ln in lines if ln.valid.any()]
    if not valid_lines:
        raise ValueError("empty raster: no valid projected samples")
    if gsd_m is None:
        gsd_m = default_gsd(valid_lines)
    if gsd_m <= 0:
        raise ValueError(f"gsd {gsd_m} must be positive")

    pts = np.concatenate([ln.points[ln.valid] for ln in valid_lines])
    rgb = np.concatenate([ln.rgb[ln.valid] for ln in valid_lines])
    score = np.concatenate([ln.score[ln.valid] for ln in valid_lines])

    east0 = float(pts[:, 0].min())
    north1 = float(pts[:, 1].max())
    cols = np.floor((pts[:, 0] - east0) / gsd_m).astype(np.int64)
    rows = np.floor((north1 - pts[:, 1]) / gsd_m).astype(np.int64)
    width = int(cols.max()) + 1
    height = int(rows.max()) + 1

    out_rgb = np.zeros((height, width, 3), dtype=np.float32)
    out_score = np.zeros((height, width), dtype=np.float32)
    out_valid = np.zeros((height, width), dtype=bool)

    # last-writer-wins without a per-point loop: find, for every touched
    # cell, the final point index that lands in it
    keys = rows * width + cols
    uniq, first_in_reversed = np.unique(keys[::-1], return_index=True)
    last_idx = keys.shape[0] - 1 - first_in_reversed
    rr, cc = np.divmod(uniq, width)
    out_rgb[rr, cc] = rgb[last_idx]
    out_score[rr, cc] = score[last_idx]
    out_valid[rr, cc] = True
    return Raster(
        origin_east_m=east0,
        origin_north_m=north1,
        gsd_m=float(gsd_m),
        rgb=out_rgb,
        score=out_score,
        valid=out_valid,
    )


def render_rgb8(raster: Raster) -> np.ndarray:
    """8-bit displayable RGB; channels scale by the raster-wide maxima.

    Invalid cells render black.
    """
    maxima = raster.rgb.reshape(-1, 3).max(axis=0)
    maxima[maxima <= 0] = 1.0
    img = np.clip(raster.rgb / maxima * 255.0 + 0.5, 0.0, 255.0).astype(np.uint8)
    img[~raster.valid] = 0
    return img


def save_raster_png(raster: Raster, path) -> None:
    from PIL import Image

    Image.fromarray(render_rgb8(raster), mode="RGB").save(path, format="PNG")


def save_raster_f32(raster: Raster, prefix) -> None:
    """Raw float32 grids plus a text sidecar describing the geo-transform."""
    prefix = str(prefix)
    raster.score.astype("<f4").tofile(prefix + ".score.f32")
    raster.rgb.astype("<f4").tofile(prefix + ".rgb.f32")
    raster.valid.astype(np.uint8).tofile(prefix + ".valid.u8")
    with open(prefix + ".txt", "w") as f:
        f.write(f"origin_east_m {raster.origin_east_m!r}\n")
        f.write(f"origin_north_m {raster.origin_north_m!r}\n")
        f.write(f"gsd_m {raster.gsd_m!r}\n")
        f.write(f"width {raster.width}\n")
        f.write(f"height {raster.height}\n")
