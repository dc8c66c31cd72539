"""Generate the browser-console test fixtures from a fixed replayed stream.

Produces, under frontend/test/fixtures/:

  stream.fst       the recorded 3-cube frame stream (kept for reference)
  score_tile.png   16-bit grayscale score tile over the mosaic bounds
  rgb_tile.png     8-bit RGB tile over the same bounds
  cli_mask.png     threshold mask at 0.110 (black = anomalous), the value
                   the console must reproduce pixel-for-pixel
  gray16_pattern.png, rgb8_pattern.png   formula patterns for decoder tests
  meta.json        tile geometry and threshold

Deterministic: fixed seed, fixed specs.  Re-run only when the pipeline's
encoding deliberately changes.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image

from skyrx import datalink, pipeline, service
from skyrx.scene import AnomalySpec, FlightSpec, SceneSpec, SpectrumTemplate

OUT = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"
THRESHOLD = 0.110
TILE_W, TILE_H = 240, 200


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    # one planted object per cube so every cube's normalization is
    # anomaly-driven, as in the staged flights the console is built for
    scene = SceneSpec(
        width_m=34.0,
        length_m=30.0,
        background=SpectrumTemplate((400.0, 1000.0), (150.0, 300.0)),
        noise_sigma=0.015,
        anomalies=(
            AnomalySpec(
                "rectangle", (15.0, 6.0), (0.5, 0.4),
                SpectrumTemplate((400.0, 1000.0), (700.0, 110.0)),
            ),
            AnomalySpec(
                "ellipse", (22.0, 15.0), (0.5, 0.4),
                SpectrumTemplate((400.0, 700.0, 1000.0), (90.0, 620.0, 200.0)),
            ),
            AnomalySpec(
                "rectangle", (12.0, 24.0), (0.5, 0.4),
                SpectrumTemplate((400.0, 1000.0), (60.0, 740.0)),
            ),
        ),
    )
    flight = FlightSpec(lines_per_cube=500, yaw_jitter_deg=1.0, roll_jitter_deg=0.6)
    config = pipeline.PipelineConfig(
        scene=scene, flight=flight, seed=1234, bands=48, samples=900,
        threshold=THRESHOLD,
    )
    data = pipeline.synthesize(config)
    result = pipeline.run_air(config, data)
    assert len(data.cubes) == 3, f"expected a 3-cube stream, got {len(data.cubes)}"
    datalink.write_stream(OUT / "stream.fst", result.frames)

    state = pipeline.run_ground(datalink.read_stream(OUT / "stream.fst"), config)
    raster = state.raster
    bbox = raster.bounds()
    score = service.score_tile(raster, bbox, TILE_W, TILE_H)
    rgb = service.rgb_tile(raster, bbox, TILE_W, TILE_H)
    mask = service.threshold_mask(score, THRESHOLD)

    Image.fromarray(score).save(OUT / "score_tile.png", format="PNG")
    Image.fromarray(rgb, mode="RGB").save(OUT / "rgb_tile.png", format="PNG")
    Image.fromarray(np.where(mask, 0, 255).astype(np.uint8), mode="L").save(
        OUT / "cli_mask.png", format="PNG"
    )

    # synthetic patterns with closed-form values for the PNG decoder tests
    w, h = 23, 17
    idx = np.arange(w * h, dtype=np.uint32).reshape(h, w)
    gray16 = ((idx * 2654435761) % 65536).astype(np.uint16)
    Image.fromarray(gray16).save(OUT / "gray16_pattern.png", format="PNG")
    rgb8 = np.stack(
        [(idx * 7) % 256, (idx * 13) % 256, (idx * 31) % 256], axis=2
    ).astype(np.uint8)
    Image.fromarray(rgb8, mode="RGB").save(OUT / "rgb8_pattern.png", format="PNG")

    meta = {
        "threshold": THRESHOLD,
        "tile_width": TILE_W,
        "tile_height": TILE_H,
        "bounds": list(bbox),
        "cubes": len(state.cubes),
        "completion": state.completion_list(),
        "anomalous_pixels": int(mask.sum()),
        "gray16_pattern": {"width": w, "height": h, "multiplier": 2654435761},
        "rgb8_pattern": {"width": w, "height": h, "multipliers": [7, 13, 31]},
    }
    (OUT / "meta.json").write_text(json.dumps(meta, indent=2))
    print(f"fixtures written to {OUT}")
    print(f"  anomalous pixels at {THRESHOLD}: {int(mask.sum())} / {TILE_W * TILE_H}")


if __name__ == "__main__":
    main()
