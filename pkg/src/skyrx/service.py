"""HTTP service feeding the operator console.

Endpoints:

* ``GET /api/flight`` -> ``{"cubes": n, "completion": [..], "bounds":
  [e0, n0, e1, n1] | null, "gsd": m | null}``
* ``GET /api/tile?mode=rgb|score&bbox=e0,n0,e1,n1&w=..&h=..`` -> PNG.
  rgb tiles are 8-bit color; score tiles are 16-bit grayscale holding the
  normalized square-root score scaled to 0..65535.  A bbox outside the
  mosaic yields an empty (zero) tile, not an error.
* ``GET /api/events`` -> server-sent events; each event's data is one JSON
  object: ``{"type": "cube", "cube_id", "completion", "bounds"}`` or
  ``{"type": "line_batch", "cube_id", "count"}``.

Score tiles are quantized once here; thresholding anywhere (CLI or
browser) is defined on the quantized value as ``(v / 65535) > threshold``
so both sides produce identical masks.
"""

from __future__ import annotations

import io
import json
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np
from PIL import Image

from .georectify import Raster, render_rgb8
from .pipeline import GroundState

SCORE_TILE_MAX = 65535


def resample_indices(raster: Raster, bbox, w: int, h: int):
    """Nearest-cell row/col lookup for a w x h tile over bbox, or None."""
    e0, n0, e1, n1 = bbox
    if w < 1 or h < 1 or e1 <= e0 or n1 <= n0:
        raise ValueError("degenerate tile request")
    xs = e0 + (np.arange(w) + 0.5) * (e1 - e0) / w
    ys = n1 - (np.arange(h) + 0.5) * (n1 - n0) / h
    cols = np.floor((xs - raster.origin_east_m) / raster.gsd_m).astype(np.int64)
    rows = np.floor((raster.origin_north_m - ys) / raster.gsd_m).astype(np.int64)
    inside_c = (cols >= 0) & (cols < raster.width)
    inside_r = (rows >= 0) & (rows < raster.height)
    return rows, cols, inside_r[:, None] & inside_c[None, :]


def rgb_tile(raster: Raster | None, bbox, w: int, h: int) -> np.ndarray:
    """(h, w, 3) uint8 tile; missing data and out-of-bounds render black."""
    out = np.zeros((h, w, 3), dtype=np.uint8)
    if raster is None:
        return out
    rows, cols, inside = resample_indices(raster, bbox, w, h)
    img = render_rgb8(raster)
    rr = np.clip(rows, 0, raster.height - 1)
    cc = np.clip(cols, 0, raster.width - 1)
    tile = img[rr[:, None], cc[None, :]]
    tile[~inside] = 0
    return tile


def score_tile(raster: Raster | None, bbox, w: int, h: int) -> np.ndarray:
    """(h, w) uint16 tile of the normalized sqrt-score, 0 where invalid."""
    out = np.zeros((h, w), dtype=np.uint16)
    if raster is None:
        return out
    rows, cols, inside = resample_indices(raster, bbox, w, h)
    quantized = np.clip(
        np.round(raster.score.astype(np.float64) * SCORE_TILE_MAX), 0, SCORE_TILE_MAX
    ).astype(np.uint16)
    quantized[~raster.valid] = 0
    rr = np.clip(rows, 0, raster.height - 1)
    cc = np.clip(cols, 0, raster.width - 1)
    tile = quantized[rr[:, None], cc[None, :]]
    tile[~inside] = 0
    return tile


def threshold_mask(tile_u16: np.ndarray, threshold: float) -> np.ndarray:
    """Boolean anomaly mask from a quantized score tile.

    Shared definition with the browser console: anomalous iff
    (value / 65535) > threshold.
    """
    return (tile_u16.astype(np.float64) / SCORE_TILE_MAX) > threshold


def png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    if arr.dtype == np.uint16:
        Image.fromarray(arr).save(buf, format="PNG")
    else:
        Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


class EventHub:
    """Fan-out of ground events to any number of live subscribers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers: list[queue.Queue] = []

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=1024)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, event: dict) -> None:
        with self._lock:
            targets = list(self._subscribers)
        for q in targets:
            try:
                q.put_nowait(event)
            except queue.Full:
                pass


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, code: int, body: bytes, content_type: str):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, payload, code: int = 200):
        self._send(code, json.dumps(payload).encode(), "application/json")

    def do_GET(self):  # noqa: N802 - http.server API
        url = urlparse(self.path)
        try:
            if url.path == "/api/flight":
                self._flight()
            elif url.path == "/api/tile":
                self._tile(parse_qs(url.query))
            elif url.path == "/api/events":
                self._events()
            else:
                self._static(url.path)
        except BrokenPipeError:
            pass
        except ValueError as exc:
            self._send_json({"error": str(exc)}, code=400)

    def _flight(self):
        state: GroundState = self.server.state
        with state.lock:
            raster = state.raster
            completion = [state.cubes[c].completion for c in sorted(state.cubes)]
            cubes = len(state.cubes)
            gsd = raster.gsd_m if raster is not None else None
        bounds = list(raster.bounds()) if raster is not None else None
        self._send_json(
            {"cubes": cubes, "completion": completion, "bounds": bounds, "gsd": gsd}
        )

    def _tile(self, params):
        state: GroundState = self.server.state
        mode = params.get("mode", ["rgb"])[0]
        bbox = tuple(float(x) for x in params.get("bbox", [""])[0].split(","))
        if len(bbox) != 4:
            raise ValueError("bbox must be e0,n0,e1,n1")
        w = int(params.get("w", ["256"])[0])
        h = int(params.get("h", ["256"])[0])
        if not 1 <= w <= 4096 or not 1 <= h <= 4096:
            raise ValueError("tile size outside 1..4096")
        raster, _ = state.snapshot()
        if mode == "rgb":
            body = png_bytes(rgb_tile(raster, bbox, w, h))
        elif mode == "score":
            body = png_bytes(score_tile(raster, bbox, w, h))
        else:
            raise ValueError(f"unknown tile mode {mode!r}")
        self._send(200, body, "image/png")

    def _events(self):
        hub: EventHub = self.server.hub
        q = hub.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            while True:
                try:
                    event = q.get(timeout=5.0)
                except queue.Empty:
                    self.wfile.write(b": ping\n\n")
                    self.wfile.flush()
                    continue
                data = json.dumps(event).encode()
                self.wfile.write(b"data: " + data + b"\n\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            hub.unsubscribe(q)

    def _static(self, path: str):
        root: Path | None = self.server.static_dir
        if root is None:
            self._send_json({"error": "not found"}, code=404)
            return
        rel = "index.html" if path in ("", "/") else path.lstrip("/")
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_json({"error": "not found"}, code=404)
            return
        types = {
            ".html": "text/html",
            ".js": "text/javascript",
            ".css": "text/css",
            ".png": "image/png",
        }
        self._send(
            200, target.read_bytes(), types.get(target.suffix, "application/octet-stream")
        )


class GcsService:
    """Threaded HTTP server over a GroundState; raises if the port is busy."""

    def __init__(
        self,
        state: GroundState,
        port: int,
        hub: EventHub | None = None,
        static_dir: Path | None = None,
        host: str = "127.0.0.1",
    ):
        self.state = state
        self.hub = hub or EventHub()
        self.server = ThreadingHTTPServer((host, port), _Handler)
        self.server.daemon_threads = True
        self.server.state = state
        self.server.hub = self.hub
        self.server.static_dir = Path(static_dir) if static_dir else None
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    def start(self) -> "GcsService":
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def serve(
    state: GroundState,
    port: int,
    hub: EventHub | None = None,
    static_dir: Path | None = None,
) -> GcsService:
    """Start serving a ground state; returns the running service."""
    return GcsService(state, port, hub=hub, static_dir=static_dir).start()
