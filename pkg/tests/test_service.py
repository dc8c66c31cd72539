import io
import json
import urllib.error
import urllib.request

import numpy as np
import pytest
from PIL import Image

from skyrx.pipeline import GroundState, run_air, run_ground, synthesize
from skyrx.service import (
    EventHub,
    GcsService,
    SCORE_TILE_MAX,
    rgb_tile,
    score_tile,
    serve,
    threshold_mask,
)

from test_pipeline import small_config


def get(url, timeout=5):
    with urllib.request.urlopen(url, timeout=timeout) as r:
        return r.read(), r.headers.get("Content-Type")


@pytest.fixture(scope="module")
def ground_state():
    config = small_config()
    data = synthesize(config)
    result = run_air(config, data)
    state = run_ground(iter(result.frames), config)
    return config, state


class TestTiles:
    def test_score_tile_quantization(self, ground_state):
        _, state = ground_state
        raster = state.raster
        tile = score_tile(raster, raster.bounds(), raster.width, raster.height)
        assert tile.dtype == np.uint16
        # native-resolution tile reproduces the raster's quantized scores
        want = np.round(raster.score.astype(np.float64) * SCORE_TILE_MAX)
        want[~raster.valid] = 0
        assert np.array_equal(tile, want.astype(np.uint16))

    def test_out_of_bounds_tile_is_empty(self, ground_state):
        _, state = ground_state
        e0, n0, e1, n1 = state.raster.bounds()
        off = (e1 + 100, n1 + 100, e1 + 200, n1 + 200)
        assert not score_tile(state.raster, off, 32, 32).any()
        assert not rgb_tile(state.raster, off, 32, 32).any()

    def test_tile_without_raster(self):
        assert not score_tile(None, (0, 0, 1, 1), 8, 8).any()

    def test_threshold_mask_definition(self):
        tile = np.array([[0, 7208, 7209, 65535]], dtype=np.uint16)
        mask = threshold_mask(tile, 0.110)
        # 0.110 * 65535 = 7208.85: strictly-above wins
        assert mask.tolist() == [[False, False, True, True]]


class TestHttp:
    @pytest.fixture()
    def svc(self, ground_state):
        _, state = ground_state
        service = serve(state, port=0)
        yield service
        service.stop()

    def test_flight_endpoint_fields(self, svc, ground_state):
        _, state = ground_state
        body, ctype = get(f"http://127.0.0.1:{svc.port}/api/flight")
        assert ctype == "application/json"
        doc = json.loads(body)
        assert set(doc) == {"cubes", "completion", "bounds", "gsd"}
        assert doc["cubes"] == len(state.cubes)
        assert doc["completion"] == state.completion_list()
        assert len(doc["bounds"]) == 4
        assert doc["gsd"] == state.raster.gsd_m

    def test_flight_endpoint_fresh_state(self):
        svc = serve(GroundState(), port=0)
        try:
            doc = json.loads(get(f"http://127.0.0.1:{svc.port}/api/flight")[0])
            assert doc == {"cubes": 0, "completion": [], "bounds": None, "gsd": None}
        finally:
            svc.stop()

    def test_rgb_tile_endpoint(self, svc, ground_state):
        _, state = ground_state
        e0, n0, e1, n1 = state.raster.bounds()
        body, ctype = get(
            f"http://127.0.0.1:{svc.port}/api/tile?mode=rgb&bbox={e0},{n0},{e1},{n1}&w=64&h=48"
        )
        assert ctype == "image/png"
        img = Image.open(io.BytesIO(body))
        assert img.size == (64, 48)
        assert img.mode == "RGB"

    def test_score_tile_endpoint_16bit(self, svc, ground_state):
        _, state = ground_state
        e0, n0, e1, n1 = state.raster.bounds()
        body, _ = get(
            f"http://127.0.0.1:{svc.port}/api/tile?mode=score&bbox={e0},{n0},{e1},{n1}&w=64&h=48"
        )
        img = Image.open(io.BytesIO(body))
        arr = np.array(img)
        assert arr.dtype == np.uint16
        assert arr.max() > 255  # genuinely 16-bit payload

    def test_tile_out_of_bounds_not_error(self, svc):
        body, ctype = get(
            f"http://127.0.0.1:{svc.port}/api/tile?mode=score&bbox=9000,9000,9100,9100&w=16&h=16"
        )
        assert ctype == "image/png"
        assert not np.array(Image.open(io.BytesIO(body))).any()

    def test_bad_mode_is_400(self, svc):
        with pytest.raises(urllib.error.HTTPError) as err:
            get(f"http://127.0.0.1:{svc.port}/api/tile?mode=wat&bbox=0,0,1,1&w=8&h=8")
        assert err.value.code == 400

    def test_unknown_path_404(self, svc):
        with pytest.raises(urllib.error.HTTPError) as err:
            get(f"http://127.0.0.1:{svc.port}/api/nope")
        assert err.value.code == 404

    def test_port_busy_raises(self, svc):
        with pytest.raises(OSError):
            GcsService(GroundState(), port=svc.port)

    def test_event_stream_delivers_json_lines(self, svc):
        req = urllib.request.urlopen(
            f"http://127.0.0.1:{svc.port}/api/events", timeout=5
        )
        svc.hub.publish({"type": "cube", "cube_id": 4, "completion": 0.5, "bounds": [0, 0, 1, 1]})
        svc.hub.publish({"type": "line_batch", "cube_id": 4, "count": 50})
        seen = []
        while len(seen) < 2:
            line = req.readline().decode().strip()
            if line.startswith("data: "):
                seen.append(json.loads(line[6:]))
        req.close()
        assert seen[0] == {"type": "cube", "cube_id": 4, "completion": 0.5, "bounds": [0, 0, 1, 1]}
        assert seen[1] == {"type": "line_batch", "cube_id": 4, "count": 50}


class TestEventHub:
    def test_fanout(self):
        hub = EventHub()
        a, b = hub.subscribe(), hub.subscribe()
        hub.publish({"type": "cube"})
        assert a.get_nowait() == {"type": "cube"}
        assert b.get_nowait() == {"type": "cube"}
        hub.unsubscribe(b)
        hub.publish({"type": "line_batch"})
        assert a.get_nowait() == {"type": "line_batch"}
        assert b.empty()
