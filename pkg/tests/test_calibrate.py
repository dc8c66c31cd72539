import numpy as np
import pytest

from skyrx.calibrate import (
    CalibrationTables,
    apply_calibration,
    bin_bands,
    calibrate_bin_rgb,
    discard_oob_bands,
    extract_rgb,
    load_tables,
    save_tables,
)
from skyrx.cube import RawCube, band_nearest
from skyrx.errors import FormatError
from skyrx.scene import (
    FlightSpec,
    SceneSpec,
    SpectrumTemplate,
    band_grid,
    generate_flight,
    identity_tables,
)

from conftest import make_line_meta, make_radiance


def raw_cube(values, wavelengths=None, gain=1.0):
    values = np.asarray(values, dtype=np.uint16)
    if wavelengths is None:
        wavelengths = band_grid(values.shape[2]) if values.shape[2] >= 22 else np.linspace(400, 1000, values.shape[2])
    return RawCube(values, wavelengths, make_line_meta(values.shape[0], gain=gain))


class TestApplyCalibration:
    def test_identity_tables(self, rng):
        raw = raw_cube(rng.integers(0, 4096, (3, 4, 24), dtype=np.uint16))
        out = apply_calibration(raw, identity_tables(4, 24))
        assert out.values.dtype == np.float32
        assert np.array_equal(out.values, raw.values.astype(np.float32))

    def test_arithmetic_by_definition(self):
        raw = raw_cube(np.full((1, 1, 24), 100), gain=4.0)
        tables = CalibrationTables(
            np.full((1, 24), 10.0, np.float32), np.full((1, 24), 2.0, np.float32)
        )
        out = apply_calibration(raw, tables)
        assert out.values[0, 0, 0] == pytest.approx(45.0)

    def test_dark_clamps_to_zero(self):
        raw = raw_cube(np.full((1, 1, 24), 5))
        tables = CalibrationTables(
            np.full((1, 24), 10.0, np.float32), np.ones((1, 24), np.float32)
        )
        assert (apply_calibration(raw, tables).values == 0).all()

    def test_shape_mismatch(self, rng):
        raw = raw_cube(rng.integers(0, 10, (2, 3, 24), dtype=np.uint16))
        with pytest.raises(ValueError, match="invalid tables"):
            apply_calibration(raw, identity_tables(3, 23))

    def test_gain_divides_out_between_runs(self):
        # a noiseless constant integer spectrum digitizes exactly at any
        # integer gain, so runs pinned at gain 2 and 5 calibrate identically
        scene = SceneSpec(
            width_m=20.0,
            length_m=4.0,
            background=SpectrumTemplate((400.0, 1000.0), (240.0, 240.0)),
            noise_sigma=0.0,
        )
        out = {}
        for gain in (2.0, 5.0):
            flight = FlightSpec(lines_per_cube=50, fixed_gain=gain)
            cubes, _, _ = generate_flight(
                scene, flight, seed=7, bands=24, samples=30,
                tables=identity_tables(30, 24),
            )
            out[gain] = apply_calibration(cubes[0], identity_tables(30, 24))
        a, b = out[2.0].values, out[5.0].values
        assert np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-9)) < 1e-6

    def test_monotone_in_raw_value(self, rng):
        vals = rng.integers(0, 1000, (2, 3, 24), dtype=np.uint16)
        raw_lo = raw_cube(vals)
        bumped = vals.copy()
        bumped[1, 2, 3] += 17
        raw_hi = raw_cube(bumped)
        tables = CalibrationTables(
            rng.uniform(0, 50, (3, 24)).astype(np.float32),
            rng.uniform(0.5, 2.0, (3, 24)).astype(np.float32),
        )
        lo = apply_calibration(raw_lo, tables).values
        hi = apply_calibration(raw_hi, tables).values
        assert (hi >= lo).all()


class TestDiscard:
    def test_default_grid_drops_to_280(self, rng):
        cube = make_radiance(rng.random((2, 3, 300), dtype=np.float32), band_grid(300))
        out = discard_oob_bands(cube)
        assert out.bands == 280
        assert out.wavelengths_nm.min() >= 400.0
        assert out.wavelengths_nm.max() <= 1000.0

    def test_all_inside_unchanged(self, rng):
        cube = make_radiance(rng.random((2, 3, 8), dtype=np.float32), np.linspace(450, 900, 8))
        out = discard_oob_bands(cube)
        assert out.bands == 8
        assert np.array_equal(out.values, cube.values)

    def test_all_outside_empty(self, rng):
        cube = make_radiance(rng.random((2, 3, 4), dtype=np.float32), [300, 310, 1100, 1200])
        assert discard_oob_bands(cube).bands == 0


class TestBinning:
    def test_all_ones(self):
        cube = make_radiance(np.ones((2, 3, 280), dtype=np.float32), np.linspace(400, 1000, 280))
        out = bin_bands(cube, 4)
        assert out.bands == 70
        assert (out.values == 4.0).all()

    def test_shape_and_spacing_after_pipeline(self, rng):
        cube = make_radiance(rng.random((2, 3, 300), dtype=np.float32), band_grid(300))
        binned = bin_bands(discard_oob_bands(cube), 4)
        assert binned.bands == 70
        spacing = np.diff(binned.wavelengths_nm)
        # roughly 9 nm: 4x the ~2.15 nm grid spacing
        assert np.allclose(spacing, spacing[0], atol=1e-3)
        assert 8.0 < spacing.mean() < 10.0

    def test_sum_preserved_exactly(self, rng):
        # integer-valued f32 cubes sum exactly, making the oracle bit-tight
        vals = rng.integers(0, 256, (3, 4, 280)).astype(np.float32)
        cube = make_radiance(vals, np.linspace(400, 1000, 280))
        out = bin_bands(cube, 4)
        assert np.sum(out.values, dtype=np.float64) == np.sum(vals, dtype=np.float64)

    def test_non_divisible_rejected(self, rng):
        cube = make_radiance(rng.random((1, 2, 7), dtype=np.float32), np.linspace(400, 1000, 7))
        with pytest.raises(ValueError, match="divisible"):
            bin_bands(cube, 4)

    def test_commutes_with_scaling(self, rng):
        vals = rng.random((2, 3, 16), dtype=np.float32)
        cube = make_radiance(vals, np.linspace(400, 1000, 16))
        scaled = make_radiance(vals * 2.0, np.linspace(400, 1000, 16))
        assert np.array_equal(bin_bands(scaled, 4).values, bin_bands(cube, 4).values * 2.0)


class TestRgb:
    def standard_70(self):
        return bin_bands(
            discard_oob_bands(
                make_radiance(np.zeros((1, 1, 300), dtype=np.float32), band_grid(300))
            ),
            4,
        ).wavelengths_nm

    def test_band_indices_match_scan_oracle(self):
        centers = self.standard_70()

        def scan(target):
            best, dist = 0, abs(centers[0] - target)
            for i, w in enumerate(centers):
                if abs(w - target) < dist:
                    best, dist = i, abs(w - target)
            return best

        for target in (640.0, 550.0, 460.0):
            assert band_nearest(centers, target) == scan(target)

    def test_constant_band_plane(self):
        centers = self.standard_70()
        vals = np.zeros((2, 3, 70), dtype=np.float32)
        vals[:, :, band_nearest(centers, 640.0)] = 7.0
        cube = make_radiance(vals, centers)
        rgb = extract_rgb(cube)
        assert (rgb[:, :, 0] == 7.0).all()
        assert (rgb[:, :, 1:] == 0.0).all()

    def test_grayscale_scene(self, rng):
        base = rng.random((2, 3, 1), dtype=np.float32)
        cube = make_radiance(
            np.repeat(base, 70, axis=2), self.standard_70()
        )
        rgb = extract_rgb(cube)
        assert np.array_equal(rgb[:, :, 0], rgb[:, :, 1])
        assert np.array_equal(rgb[:, :, 1], rgb[:, :, 2])


class TestFusedPath:
    def test_matches_composition(self, rng):
        raw = raw_cube(rng.integers(0, 4096, (5, 6, 44), dtype=np.uint16), band_grid(44), gain=3.0)
        tables = CalibrationTables(
            rng.uniform(0, 40, (6, 44)).astype(np.float32),
            rng.uniform(0.5, 1.5, (6, 44)).astype(np.float32),
        )
        fused_cube, fused_rgb = calibrate_bin_rgb(raw, tables, factor=4, chunk_lines=2)
        composed = bin_bands(discard_oob_bands(apply_calibration(raw, tables)), 4)
        assert np.allclose(fused_cube.values, composed.values, rtol=1e-6, atol=1e-4)
        assert np.array_equal(fused_cube.wavelengths_nm, composed.wavelengths_nm)
        assert np.allclose(fused_rgb, extract_rgb(composed), rtol=1e-6, atol=1e-4)


class TestTablesFile:
    def test_round_trip(self, tmp_path, rng):
        tables = CalibrationTables(
            rng.uniform(0, 50, (5, 8)).astype(np.float32),
            rng.uniform(0.5, 2.0, (5, 8)).astype(np.float32),
        )
        path = tmp_path / "t.hsk"
        save_tables(path, tables)
        back = load_tables(path)
        assert np.array_equal(back.dark, tables.dark)
        assert np.array_equal(back.coeff, tables.coeff)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "t.hsk"
        path.write_bytes(b"NOPE" + bytes(16))
        with pytest.raises(FormatError, match="magic"):
            load_tables(path)

    def test_coeff_positive_enforced(self):
        with pytest.raises(ValueError, match="positive"):
            CalibrationTables(np.zeros((2, 2)), np.zeros((2, 2)))
