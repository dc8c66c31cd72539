import json
import math

import numpy as np
import pytest

from skyrx.cube import cube_validate
from skyrx.scene import (
    EPOCH_US,
    AnomalySpec,
    FlightSpec,
    SceneSpec,
    SpectrumTemplate,
    band_grid,
    demo_flight,
    demo_scene,
    flight_from_dict,
    flight_to_dict,
    generate_flight,
    identity_tables,
    scene_from_dict,
    scene_to_dict,
)

BG = SpectrumTemplate((400.0, 1000.0), (200.0, 200.0))


def flat_scene(**kw):
    defaults = dict(width_m=20.0, length_m=4.0, background=BG, noise_sigma=0.0)
    defaults.update(kw)
    return SceneSpec(**defaults)


class TestBandGrid:
    def test_default_band_placement(self):
        grid = band_grid(300)
        assert grid.shape == (300,)
        assert (np.diff(grid) > 0).all()
        assert (grid < 400).sum() == 10
        assert (grid > 1000).sum() == 10
        inside = (grid >= 400) & (grid <= 1000)
        assert inside.sum() == 280

    def test_small_grid_placement(self):
        grid = band_grid(44)
        assert (grid < 400).sum() == 10
        assert (grid > 1000).sum() == 10

    def test_f32_exact(self):
        grid = band_grid(300)
        assert np.array_equal(grid, grid.astype(np.float32).astype(np.float64))


class TestGenerateFlight:
    def test_deterministic(self):
        scene = demo_scene()
        flight = FlightSpec(lines_per_cube=60, yaw_jitter_deg=2.0)
        a = generate_flight(scene, flight, seed=5, bands=30, samples=40)
        b = generate_flight(scene, flight, seed=5, bands=30, samples=40)
        for ca, cb in zip(a[0], b[0]):
            assert np.array_equal(ca.values, cb.values)
        assert a[1] == b[1]
        for ma, mb in zip(a[2], b[2]):
            assert np.array_equal(ma.values, mb.values)

    def test_seed_changes_output(self):
        scene = demo_scene()
        flight = FlightSpec(lines_per_cube=60)
        a = generate_flight(scene, flight, seed=5, bands=30, samples=40)
        b = generate_flight(scene, flight, seed=6, bands=30, samples=40)
        assert not np.array_equal(a[0][0].values, b[0][0].values)

    def test_cubes_are_valid(self):
        cubes, track, masks = generate_flight(
            demo_scene(), FlightSpec(lines_per_cube=60, roll_jitter_deg=1.0),
            seed=1, bands=30, samples=40,
        )
        for cube in cubes:
            assert cube_validate(cube) == []

    def test_exposure_times_on_line_rate_grid(self):
        cubes, _, _ = generate_flight(
            flat_scene(), FlightSpec(lines_per_cube=50), seed=0, bands=24, samples=10
        )
        k = 0
        for cube in cubes:
            for meta in cube.line_meta:
                assert meta.exposure_start_us - EPOCH_US == round(k * 1e6 / 249)
                k += 1

    def test_ins_brackets_every_exposure(self):
        cubes, _, _ = generate_flight(
            demo_scene(), FlightSpec(lines_per_cube=60, pitch_jitter_deg=1.0),
            seed=2, bands=24, samples=16,
        )
        for cube in cubes:
            for meta in cube.line_meta:
                assert meta.ins_before.timestamp_us <= meta.exposure_start_us
                assert meta.exposure_start_us <= meta.ins_after.timestamp_us

    def test_flat_world_identical_spectra_up_to_gain(self):
        cubes, _, masks = generate_flight(
            flat_scene(),
            FlightSpec(lines_per_cube=50, fixed_gain=2.0),
            seed=0,
            bands=24,
            samples=12,
            tables=identity_tables(12, 24),
        )
        cube = cubes[0]
        first = cube.values[0, 0]
        assert (cube.values == first[None, None, :]).all()
        assert not masks[0].values.any()

    def test_gain_sweeps_inside_limits_smoothly(self):
        cubes, _, _ = generate_flight(
            flat_scene(length_m=40.0), FlightSpec(lines_per_cube=400), seed=0,
            bands=24, samples=8,
        )
        gains = np.array([m.gain for c in cubes for m in c.line_meta])
        assert (gains >= 1.0).all() and (gains <= 8.0).all()
        assert np.abs(np.diff(gains)).max() < 0.02
        assert np.ptp(gains) > 0.5

    def test_mask_matches_point_in_rectangle_oracle(self):
        # nadir straight flight, no jitter: the projection has a closed form
        size = (2.0, 2.0)
        center = (10.0, 9.0)
        scene = flat_scene(
            width_m=20.0,
            length_m=18.0,
            anomalies=(
                AnomalySpec("rectangle", center, size, SpectrumTemplate((400.0, 1000.0), (900.0, 900.0))),
            ),
        )
        flight = FlightSpec(lines_per_cube=100, speed_mps=5.0, fixed_gain=1.0)
        samples = 60
        cubes, _, masks = generate_flight(scene, flight, seed=0, bands=24, samples=samples)
        total_lines = len(cubes) * 100
        track_len = total_lines / 249 * 5.0
        start_y = scene.length_m / 2 - track_len / 2
        fov = math.radians(47.5)
        got = np.concatenate([m.values for m in masks])
        for line in range(0, total_lines, 7):
            y = start_y + 5.0 * (round(line * 1e6 / 249) / 1e6)
            for s in range(samples):
                theta = fov * (s / (samples - 1) - 0.5)
                x = 10.0 + 40.0 * math.tan(theta)
                inside = (abs(x - center[0]) <= size[0] / 2) and (
                    abs(y - center[1]) <= size[1] / 2
                )
                assert got[line, s] == inside, (line, s)

    def test_mask_true_pixels_carry_anomaly_spectrum(self):
        scene = flat_scene(
            width_m=20.0,
            length_m=6.0,
            anomalies=(
                AnomalySpec(
                    "ellipse", (10.0, 3.0), (3.0, 1.5),
                    SpectrumTemplate((400.0, 1000.0), (900.0, 900.0)),
                ),
            ),
        )
        cubes, _, masks = generate_flight(
            scene, FlightSpec(lines_per_cube=100, fixed_gain=1.0),
            seed=0, bands=24, samples=30, tables=identity_tables(30, 24),
        )
        values = np.concatenate([c.values for c in cubes])
        mask = np.concatenate([m.values for m in masks])
        assert mask.any()
        assert (values[mask][:, 0] == 900).all()
        assert (values[~mask][:, 0] == 200).all()

    def test_anomaly_outside_scene_rejected(self):
        scene = flat_scene(
            anomalies=(AnomalySpec("rectangle", (19.5, 2.0), (2.0, 2.0), BG),),
        )
        with pytest.raises(ValueError, match="invalid spec"):
            generate_flight(scene, FlightSpec(lines_per_cube=50), seed=0, bands=24, samples=8)

    def test_track_covers_flight(self):
        cubes, track, _ = generate_flight(
            flat_scene(), FlightSpec(lines_per_cube=50), seed=0, bands=24, samples=8
        )
        ts = track.timestamps_us()
        assert ts[0] <= cubes[0].line_meta[0].exposure_start_us
        assert ts[-1] >= cubes[-1].line_meta[-1].exposure_start_us
        assert np.all(np.diff(ts) == 5000)  # 200 Hz


class TestSpecs:
    def test_scene_json_round_trip(self):
        scene = demo_scene()
        back = scene_from_dict(json.loads(json.dumps(scene_to_dict(scene))))
        assert back == scene

    def test_flight_json_round_trip(self):
        flight = demo_flight()
        back = flight_from_dict(json.loads(json.dumps(flight_to_dict(flight))))
        assert back == flight

    def test_template_validation(self):
        with pytest.raises(ValueError):
            SpectrumTemplate((400.0,), (1.0, 2.0))
        with pytest.raises(ValueError):
            SpectrumTemplate((400.0,), (-1.0,))

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            AnomalySpec("triangle", (0, 0), (1, 1), BG)

    def test_flight_validation(self):
        with pytest.raises(ValueError):
            FlightSpec(altitude_m=-1).validate()
        with pytest.raises(ValueError):
            FlightSpec(fixed_gain=9.0).validate()
