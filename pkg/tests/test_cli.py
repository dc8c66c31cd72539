import json

import numpy as np
import pytest
from PIL import Image

from skyrx.cli import main
from skyrx.scene import (
    AnomalySpec,
    FlightSpec,
    SceneSpec,
    SpectrumTemplate,
    flight_to_dict,
    scene_to_dict,
)


@pytest.fixture(scope="module")
def spec_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("specs")
    scene = SceneSpec(
        width_m=34.0,
        length_m=8.0,
        background=SpectrumTemplate((400.0, 1000.0), (150.0, 280.0)),
        noise_sigma=0.01,
        anomalies=(
            AnomalySpec(
                "rectangle", (16.0, 4.0), (2.0, 2.0),
                SpectrumTemplate((400.0, 1000.0), (650.0, 120.0)),
            ),
        ),
    )
    flight = FlightSpec(lines_per_cube=100)
    scene_path = root / "scene.json"
    flight_path = root / "flight.json"
    scene_path.write_text(json.dumps(scene_to_dict(scene)))
    flight_path.write_text(json.dumps(flight_to_dict(flight)))
    return scene_path, flight_path


def small_args(spec_files, extra):
    scene_path, flight_path = spec_files
    return [
        "--scene", str(scene_path),
        "--flight", str(flight_path),
        "--seed", "4",
        "--bands", "32",
    ] + extra


def test_synth_writes_artifacts(spec_files, tmp_path):
    out = tmp_path / "synth"
    assert main(["synth"] + small_args(spec_files, ["--out", str(out)])) == 0
    assert (out / "cube_0000.hsc").exists()
    assert (out / "mask_0000.hsm").exists()
    assert (out / "track.hst").exists()
    assert (out / "calibration.hsk").exists()
    assert (out / "scene.json").exists()


def test_air_ground_eval_chain(spec_files, tmp_path):
    air = tmp_path / "air"
    assert main(["air"] + small_args(spec_files, ["--out", str(air)])) == 0
    assert (air / "stream.fst").exists()
    assert (air / "timings.csv").exists()

    ground = tmp_path / "ground"
    assert main(
        ["ground"] + small_args(
            spec_files, ["--out", str(ground), "--replay", str(air / "stream.fst")]
        )
    ) == 0
    assert (ground / "mosaic_rgb.png").exists()
    assert (ground / "mosaic_score.png").exists()
    assert (ground / "mask.png").exists()
    assert (ground / "raster.txt").exists()
    received = sorted(ground.glob("received_*.npz"))
    assert received

    # the 16-bit score png must round-trip through PIL
    score = np.array(Image.open(ground / "mosaic_score.png"))
    assert score.dtype == np.uint16

    out = tmp_path / "eval"
    assert main(
        ["eval", "--received", str(ground), "--truth", str(air), "--out", str(out)]
    ) == 0
    assert (out / "roc.csv").exists()
    summary = (out / "summary.txt").read_text()
    assert summary.startswith("auc")
    assert float(summary.split()[1]) > 0.9


def test_run_end_to_end_with_loss(spec_files, tmp_path):
    out = tmp_path / "run"
    assert main(
        ["run"] + small_args(
            spec_files, ["--out", str(out), "--channel", "bernoulli:0.02"]
        )
    ) == 0
    assert (out / "stream.fst").exists()
    assert (out / "roc.csv").exists()
    summary = (out / "summary.txt").read_text()
    assert "auc" in summary and "reception" in summary and "latency" in summary
