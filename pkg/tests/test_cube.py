import numpy as np
import pytest
from hypothesis import given, strategies as st

from skyrx.cube import (
    GroundTruthMask,
    InsSample,
    InsTrack,
    LineMeta,
    RawCube,
    ScoreMap,
    band_nearest,
    cube_validate,
    pixel_at,
    wrap_angle_deg,
)

from conftest import make_line_meta, make_radiance


def nearest_by_scan(wavelengths, target):
    # independent oracle: plain linear scan tracking the best index
    best, best_dist = 0, abs(wavelengths[0] - target)
    for i, w in enumerate(wavelengths):
        d = abs(w - target)
        if d < best_dist:
            best, best_dist = i, d
    return best


class TestBandNearest:
    def test_exact_match(self):
        assert band_nearest([500, 550, 600], 550) == 1

    def test_nearest(self):
        assert band_nearest([400, 410], 404) == 0

    def test_tie_breaks_low(self):
        assert band_nearest([500, 550, 600], 525) == 0

    def test_binned_grid_matches_scan_oracle(self):
        grid = [404.29 + 9.143 * k for k in range(70)]
        assert nearest_by_scan(grid, 550.0) == 16
        assert band_nearest(grid, 550.0) == 16
        for target in (380.0, 460.0, 550.0, 640.0, 999.0, 1200.0):
            assert band_nearest(grid, target) == nearest_by_scan(grid, target)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            band_nearest([], 550)

    @given(
        st.lists(
            st.floats(min_value=350, max_value=1100, allow_nan=False),
            unique=True,
            min_size=1,
            max_size=40,
        )
    )
    def test_identity_on_grid_points(self, ws):
        ws = sorted(ws)
        for i, w in enumerate(ws):
            assert band_nearest(ws, w) == i


class TestPixelAt:
    def test_constant_cube(self):
        cube = make_radiance(np.full((4, 5, 3), 7.0))
        assert np.array_equal(pixel_at(cube, 2, 3), [7.0, 7.0, 7.0])

    def test_constructed_values(self):
        l, s, b = np.meshgrid(np.arange(4), np.arange(5), np.arange(3), indexing="ij")
        cube = make_radiance(l + s + b)
        assert pixel_at(cube, 2, 3).tolist() == [5.0, 6.0, 7.0]

    def test_write_read_round_trip(self):
        vals = np.zeros((3, 3, 2), dtype=np.float32)
        vals[1, 2, 1] = 42.5
        cube = make_radiance(vals)
        assert pixel_at(cube, 1, 2)[1] == 42.5

    @pytest.mark.parametrize("line,sample", [(-1, 0), (0, -1), (4, 0), (0, 5)])
    def test_bounds(self, line, sample):
        cube = make_radiance(np.zeros((4, 5, 3)))
        with pytest.raises(IndexError):
            pixel_at(cube, line, sample)

    def test_index_bijection(self, rng):
        cube = make_radiance(rng.random((6, 7, 4)))
        seen = np.stack(
            [pixel_at(cube, l, s) for l in range(6) for s in range(7)]
        ).reshape(6, 7, 4)
        assert np.array_equal(seen, cube.values)


class TestCubeValidate:
    def test_well_formed(self):
        raw = RawCube(
            np.zeros((3, 4, 5), dtype=np.uint16),
            np.linspace(400, 1000, 5),
            make_line_meta(3),
        )
        assert cube_validate(raw) == []

    def test_decreasing_wavelengths_named(self):
        raw = RawCube(
            np.zeros((3, 4, 5), dtype=np.uint16),
            [400, 500, 450, 600, 700],
            make_line_meta(3),
        )
        violations = cube_validate(raw)
        assert len(violations) == 1
        assert "wavelengths" in violations[0]

    def test_zero_gain_named(self):
        meta = list(make_line_meta(3))
        meta[1] = LineMeta(meta[1].exposure_start_us, 0.0, meta[1].ins_before, meta[1].ins_after)
        raw = RawCube(
            np.zeros((3, 4, 5), dtype=np.uint16), np.linspace(400, 1000, 5), meta
        )
        violations = cube_validate(raw)
        assert len(violations) == 1
        assert "gain" in violations[0]

    def test_radiance_negative_flagged(self):
        cube = make_radiance(np.full((2, 2, 2), -1.0))
        assert any("negative" in v for v in cube_validate(cube))

    def test_unbracketed_exposure_flagged(self):
        meta = list(make_line_meta(2))
        bad = LineMeta(
            meta[0].ins_after.timestamp_us + 999, 1.0, meta[0].ins_before, meta[0].ins_after
        )
        raw = RawCube(
            np.zeros((2, 2, 2), dtype=np.uint16), [500.0, 600.0], (meta[0], bad)
        )
        assert any("bracketed" in v for v in cube_validate(raw))

    def test_idempotent_and_pure(self):
        cube = make_radiance(np.ones((2, 3, 2)))
        before = cube.values.copy()
        first = cube_validate(cube)
        second = cube_validate(cube)
        assert first == second
        assert np.array_equal(cube.values, before)


class TestTypes:
    def test_score_map_max(self):
        sm = ScoreMap(np.array([[0.5, 8.0], [1.0, 2.0]]))
        assert sm.max_score == 8.0

    def test_score_map_zero(self):
        assert ScoreMap(np.zeros((2, 2))).max_score == 0.0

    def test_mask_shape(self):
        m = GroundTruthMask(np.zeros((3, 4), dtype=bool))
        assert (m.lines, m.samples) == (3, 4)

    def test_track_sorts_and_brackets(self):
        a = InsSample(100, 0, 0, 40, 0, 0, 0)
        b = InsSample(0, 0, 0, 40, 0, 0, 0)
        track = InsTrack((a, b))
        assert [s.timestamp_us for s in track.samples] == [0, 100]
        lo, hi = track.bracket(50)
        assert (lo.timestamp_us, hi.timestamp_us) == (0, 100)
        lo, hi = track.bracket(100)
        assert lo.timestamp_us == hi.timestamp_us == 100
        with pytest.raises(ValueError):
            track.bracket(101)

    @given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    def test_wrap_angle_range(self, a):
        w = wrap_angle_deg(a)
        assert -180.0 <= w < 180.0
        assert abs((a - w) % 360.0) < 1e-6 or abs((a - w) % 360.0 - 360.0) < 1e-6
