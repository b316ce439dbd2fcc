import math

import numpy as np
import pytest

from conftest import random_image
from sdpf.descriptor import (
    DEFAULT_CONFIG,
    DescriptorConfig,
    OrientationFrame,
    SdpfDescriptor,
    angle_bins,
    build_descriptor,
    centroid,
    distance_bins,
    dominant_orientation,
    extract,
    extract_detailed,
    point_coordinates,
    read_descriptors_csv,
    write_descriptors_csv,
    _resolve_theta0,
)
from sdpf.dithering import DEFAULT_PALETTE
from sdpf.imaging import Image
from sdpf.patterns import DitherPattern
from sdpf.saliency import SdpfPoint


def make_point(i, j, pattern=(1, 2, 3, 4), strength=1.0):
    return SdpfPoint(i=i, j=j, x=2 * i + 1, y=2 * j + 1, strength=strength,
                     pattern=DitherPattern(tuple(sorted(pattern))))


class TestConfig:
    def test_default_length_is_256(self):
        assert DEFAULT_CONFIG.length == 256
        assert (DEFAULT_CONFIG.k_d, DEFAULT_CONFIG.k_a, DEFAULT_CONFIG.k_c) == (4, 8, 8)

    def test_custom_length(self):
        assert DescriptorConfig(k_d=2, k_a=4, k_c=8).length == 64

    def test_rejects_nonpositive_bins(self):
        with pytest.raises(ValueError):
            DescriptorConfig(k_d=0)
        with pytest.raises(ValueError):
            DescriptorConfig(k_a=-1)


class TestPointCoordinates:
    def test_from_sdpf_points(self):
        pts = [make_point(2, 1), make_point(0, 3)]
        assert np.array_equal(point_coordinates(pts), [[5, 3], [1, 7]])

    def test_from_pairs(self):
        xy = point_coordinates([(1.5, 2.0), (3.0, 4.0)])
        assert np.array_equal(xy, [[1.5, 2.0], [3.0, 4.0]])

    def test_empty(self):
        assert point_coordinates([]).shape == (0, 2)

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            point_coordinates([(1.0, 2.0, 3.0)])


class TestCentroid:
    def test_mean_of_coordinates(self):
        assert centroid([(0.0, 0.0), (4.0, 2.0)]) == (2.0, 1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            centroid([])


class TestDistanceBins:
    def test_equal_ranges_of_squared_distance(self):
        # squared distances 1, 4, 9, 16 -> edges (4, 8, 12, 16)
        pts = [(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]
        bins = distance_bins(pts, (0.0, 0.0), 4)
        assert bins.tolist() == [0, 0, 2, 3]

    def test_boundary_goes_to_lower_bin(self):
        # squared distances 2 and 4 split into edges (2, 4); the point
        # sitting exactly on the first edge belongs to the lower bin
        pts = [(1.0, 1.0), (2.0, 0.0)]
        bins = distance_bins(pts, (0.0, 0.0), 2)
        assert bins.tolist() == [0, 1]

    def test_zero_distance_in_bin_zero_max_in_last(self):
        pts = [(0.0, 0.0), (5.0, 0.0)]
        bins = distance_bins(pts, (0.0, 0.0), 4)
        assert bins.tolist() == [0, 3]

    def test_all_coincident_points(self):
        pts = [(2.0, 2.0)] * 5
        assert distance_bins(pts, (2.0, 2.0), 4).tolist() == [0] * 5

    def test_single_bin(self):
        pts = [(1.0, 0.0), (9.0, 0.0)]
        assert distance_bins(pts, (0.0, 0.0), 1).tolist() == [0, 0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            distance_bins([], (0.0, 0.0), 4)


class TestDominantOrientation:
    def test_slope_matches_polyfit(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 60))
            xy = rng.normal(0.0, 10.0, (n, 2))
            xy[:, 1] += 0.7 * xy[:, 0]
            frame = dominant_orientation(xy)
            fit = np.polyfit(xy[:, 0] - frame.x_c, xy[:, 1] - frame.y_c, 1)
            assert frame.slope == pytest.approx(fit[0], rel=1e-8, abs=1e-10)

    def test_vertical_cloud(self):
        frame = dominant_orientation([(2.0, 0.0), (2.0, 1.0), (2.0, 5.0)])
        assert frame.vertical
        # two of three points lie below the centroid: second branch
        assert frame.theta0 == pytest.approx(270.0)

    def test_vertical_cloud_first_branch(self):
        frame = dominant_orientation([(2.0, 0.0), (2.0, 4.0), (2.0, 5.0)])
        assert frame.theta0 == pytest.approx(90.0)

    def test_horizontal_cloud(self):
        frame = dominant_orientation([(0.0, 2.0), (1.0, 2.0), (5.0, 2.0)])
        assert frame.slope == 0.0
        assert frame.theta0 == pytest.approx(180.0)

    def test_explicit_center_overrides_centroid(self):
        frame = dominant_orientation([(1.0, 1.0), (3.0, 3.0)], center=(0.0, 0.0))
        assert (frame.x_c, frame.y_c) == (0.0, 0.0)

    def test_on_perpendicular_points_count_for_neither_side(self):
        xy = np.array([(1.0, 1.0), (-1.0, -1.0), (3.0, -3.0)])
        assert _resolve_theta0(xy, 0.0, 0.0, 1.0) == pytest.approx(45.0)

    def test_side_two_majority_takes_second_branch(self):
        xy = np.array([(1.0, 1.0), (-1.0, -1.0), (-2.0, -2.0), (3.0, -3.0)])
        assert _resolve_theta0(xy, 0.0, 0.0, 1.0) == pytest.approx(225.0)

    def test_wrap_guard_returns_zero_not_360(self):
        xy = np.array([(1.0, 0.0), (-1.0, 0.0), (2.0, 0.0), (-2.0, 0.0)])
        theta0 = _resolve_theta0(xy, 0.0, 0.0, -1e-18)
        assert theta0 == 0.0

    def test_theta0_always_in_range(self, rng):
        for _ in range(100):
            xy = rng.normal(0.0, 5.0, (int(rng.integers(2, 30)), 2))
            frame = dominant_orientation(xy)
            assert 0.0 <= frame.theta0 < 360.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dominant_orientation([])


class TestAngleBins:
    def test_quadrant_assignment(self):
        frame = OrientationFrame(x_c=0.0, y_c=0.0, slope=0.0, theta0=0.0)
        pts = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
        assert angle_bins(pts, frame, 4).tolist() == [0, 1, 2, 3]

    def test_theta0_shifts_bins(self):
        frame = OrientationFrame(x_c=0.0, y_c=0.0, slope=0.0, theta0=90.0)
        pts = [(1.0, 0.0), (0.0, 1.0)]
        assert angle_bins(pts, frame, 4).tolist() == [3, 0]

    def test_bin_boundary_goes_up(self):
        frame = OrientationFrame(x_c=0.0, y_c=0.0, slope=0.0, theta0=0.0)
        # 45 degrees with k_a=8 sits exactly on the bin 0/1 boundary
        assert angle_bins([(1.0, 1.0)], frame, 8).tolist() == [1]

    def test_clamp_to_last_bin(self):
        frame = OrientationFrame(x_c=0.0, y_c=0.0, slope=0.0, theta0=0.0)
        # tiny negative angle wraps to just under 360
        assert angle_bins([(1.0, -1e-12)], frame, 8).tolist() == [7]


class TestGeometryInvariances:
    def test_integer_translation_preserves_bins(self, rng):
        for _ in range(50):
            xy = rng.integers(-20, 21, (int(rng.integers(3, 40)), 2)).astype(np.float64)
            moved = xy + np.array([37.0, -53.0])
            c0, c1 = centroid(xy), centroid(moved)
            assert distance_bins(xy, c0, 4).tolist() == distance_bins(moved, c1, 4).tolist()
            f0, f1 = dominant_orientation(xy), dominant_orientation(moved)
            assert angle_bins(xy, f0, 8).tolist() == angle_bins(moved, f1, 8).tolist()

    def test_power_of_two_scaling_preserves_bins(self, rng):
        for _ in range(50):
            xy = rng.normal(0.0, 5.0, (int(rng.integers(3, 40)), 2))
            cx, cy = centroid(xy)
            scaled = np.column_stack([cx + 4.0 * (xy[:, 0] - cx),
                                      cy + 4.0 * (xy[:, 1] - cy)])
            assert distance_bins(xy, (cx, cy), 4).tolist() == \
                distance_bins(scaled, centroid(scaled), 4).tolist()
            f0, f1 = dominant_orientation(xy), dominant_orientation(scaled)
            assert angle_bins(xy, f0, 8).tolist() == angle_bins(scaled, f1, 8).tolist()

    def test_half_turn_preserves_bins_when_sides_differ(self, rng):
        checked = 0
        for _ in range(200):
            xy = rng.normal(0.0, 5.0, (int(rng.integers(3, 30)), 2))
            f = dominant_orientation(xy)
            # reimplement the side rule to filter out tied clouds, where
            # both orientations legitimately pick the same branch
            if f.vertical:
                side = xy[:, 1] - f.y_c
            elif f.slope == 0.0:
                side = xy[:, 0] - f.x_c
            else:
                side = xy[:, 1] + (xy[:, 0] - f.x_c) / f.slope - f.y_c
            if np.count_nonzero(side > 0) == np.count_nonzero(side < 0):
                continue
            checked += 1
            c = np.array([f.x_c, f.y_c])
            flipped = 2.0 * c - xy
            f2 = dominant_orientation(flipped)
            assert angle_bins(xy, f, 8).tolist() == angle_bins(flipped, f2, 8).tolist()
        assert checked > 100


class TestBuildDescriptor:
    def test_fully_hand_computed_histogram(self):
        config = DescriptorConfig(k_d=2, k_a=4, k_c=8, normalize=False)
        points = [
            make_point(2, 1, pattern=(1, 1, 2, 2)),
            make_point(0, 1, pattern=(3, 3, 3, 3)),
            make_point(1, 0, pattern=(4, 5, 6, 7)),
            make_point(1, 2, pattern=(8, 8, 8, 8)),
        ]
        xy = point_coordinates(points)
        center = centroid(points)
        assert center == (3.0, 3.0)
        b_d = distance_bins(points, center, config.k_d)
        assert b_d.tolist() == [1, 1, 1, 1]      # all at max squared distance
        frame = dominant_orientation(points)
        assert frame.slope == 0.0
        assert frame.theta0 == 0.0               # tied sides, first branch
        b_a = angle_bins(points, frame, config.k_a)
        assert b_a.tolist() == [0, 2, 3, 1]
        desc = build_descriptor(points, b_d, b_a, config)
        assert desc.values.sum() == 16.0
        assert desc.cell(1, 0, 1) == 2.0
        assert desc.cell(1, 0, 2) == 2.0
        assert desc.cell(1, 2, 3) == 4.0
        assert desc.cell(1, 1, 8) == 4.0
        for color in (4, 5, 6, 7):
            assert desc.cell(1, 3, color) == 1.0
        # nothing else is populated
        assert np.count_nonzero(desc.values) == 8

    def test_each_point_contributes_four(self, rng):
        points = [make_point(int(i), int(j), pattern=tuple(sorted(rng.integers(1, 9, 4))))
                  for i, j in rng.integers(0, 30, (25, 2))]
        config = DescriptorConfig(normalize=False)
        b_d = distance_bins(points, centroid(points), config.k_d)
        b_a = angle_bins(points, dominant_orientation(points), config.k_a)
        desc = build_descriptor(points, b_d, b_a, config)
        assert desc.values.sum() == 4.0 * len(points)

    def test_normalization_sums_to_one(self, rng):
        points = [make_point(int(i), int(j)) for i, j in rng.integers(0, 30, (10, 2))]
        config = DescriptorConfig(normalize=True)
        b_d = distance_bins(points, centroid(points), config.k_d)
        b_a = angle_bins(points, dominant_orientation(points), config.k_a)
        desc = build_descriptor(points, b_d, b_a, config)
        assert desc.values.sum() == pytest.approx(1.0, abs=1e-12)

    def test_color_above_k_c_rejected(self):
        config = DescriptorConfig(k_c=4, normalize=False)
        points = [make_point(0, 0, pattern=(8, 8, 8, 8))]
        with pytest.raises(ValueError):
            build_descriptor(points, np.array([0]), np.array([0]), config)

    def test_misaligned_bins_rejected(self):
        with pytest.raises(ValueError):
            build_descriptor([make_point(0, 0)], np.array([0, 1]), np.array([0]))

    def test_empty_points_give_zero_vector(self):
        desc = build_descriptor([], np.array([], dtype=np.int64),
                                np.array([], dtype=np.int64))
        assert np.all(desc.values == 0.0)


class TestSdpfDescriptor:
    def test_rejects_negative_values(self):
        with pytest.raises(ValueError):
            SdpfDescriptor(values=np.full(256, -1.0), k_d=4, k_a=8, k_c=8,
                           normalized=False)

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            SdpfDescriptor(values=np.zeros(255), k_d=4, k_a=8, k_c=8, normalized=False)

    def test_len_and_readonly(self):
        desc = SdpfDescriptor(values=np.zeros(256), k_d=4, k_a=8, k_c=8, normalized=True)
        assert len(desc) == 256
        with pytest.raises(ValueError):
            desc.values[0] = 1.0


class TestExtract:
    def test_default_dimensionality(self, rng):
        desc = extract(random_image(rng, 32, 32))
        assert len(desc) == 256

    def test_no_square_roots_anywhere(self, rng, monkeypatch):
        img = random_image(rng, 40, 40)
        expected = extract(img).values

        def bomb(*a, **k):
            raise AssertionError("square root used in the extraction path")

        monkeypatch.setattr(math, "sqrt", bomb)
        monkeypatch.setattr(np, "sqrt", bomb)
        monkeypatch.setattr(np.linalg, "norm", bomb)
        got = extract(img).values
        assert np.array_equal(got, expected)

    def test_uniform_palette_image_yields_zero_vector(self):
        img = Image(np.full((24, 24, 3), DEFAULT_PALETTE.colors[4], dtype=np.uint8))
        desc = extract(img)
        assert np.all(desc.values == 0.0)

    def test_minimum_size_enforced(self, rng):
        with pytest.raises(ValueError):
            extract(random_image(rng, 5, 40))
        with pytest.raises(ValueError):
            extract(random_image(rng, 40, 5))
        extract(random_image(rng, 6, 6))

    def test_detailed_matches_plain(self, rng):
        img = random_image(rng, 48, 48)
        plain = extract(img)
        detailed = extract_detailed(img)
        assert np.array_equal(plain.values, detailed.descriptor.values)
        assert detailed.frame is not None
        assert len(detailed.points) > 0

    def test_detailed_empty_image(self):
        img = Image(np.zeros((16, 16, 3), dtype=np.uint8))
        res = extract_detailed(img)
        assert res.points == []
        assert res.frame is None
        assert np.all(res.descriptor.values == 0.0)

    def test_unnormalized_mass_counts_points(self, rng):
        img = random_image(rng, 40, 40)
        res = extract_detailed(img, DescriptorConfig(normalize=False))
        assert res.descriptor.values.sum() == 4.0 * len(res.points)

    def test_custom_config_changes_length(self, rng):
        img = random_image(rng, 32, 32)
        assert len(extract(img, DescriptorConfig(k_d=2, k_a=4, k_c=8))) == 64

    def test_deterministic(self, rng):
        img = random_image(rng, 32, 32)
        assert np.array_equal(extract(img).values, extract(img).values)


class TestDescriptorCsv:
    def test_round_trip(self, rng, tmp_path):
        config = DescriptorConfig(k_d=2, k_a=2, k_c=8, normalize=False)
        rows = [
            ("images/a.ppm", "cat", rng.integers(0, 50, config.length).astype(np.float64)),
            ("images/b.ppm", "dog", rng.integers(0, 50, config.length).astype(np.float64)),
        ]
        path = tmp_path / "desc.csv"
        write_descriptors_csv(path, rows, config)
        got_config, got_rows = read_descriptors_csv(path)
        assert got_config == config
        for (p0, l0, v0), (p1, l1, v1) in zip(rows, got_rows):
            assert (p0, l0) == (p1, l1)
            assert np.array_equal(v0, v1)

    def test_header_format(self, tmp_path):
        path = tmp_path / "desc.csv"
        write_descriptors_csv(path, [], DescriptorConfig(k_d=2, k_a=4, k_c=8))
        assert path.read_text().splitlines()[0] == "SDPF1,2,4,8,1"

    def test_path_with_commas(self, rng, tmp_path):
        config = DescriptorConfig(k_d=1, k_a=1, k_c=8, normalize=False)
        values = rng.integers(0, 9, 8).astype(np.float64)
        path = tmp_path / "desc.csv"
        write_descriptors_csv(path, [("dir,with,commas/img.ppm", "x", values)], config)
        _, rows = read_descriptors_csv(path)
        assert rows[0][0] == "dir,with,commas/img.ppm"
        assert rows[0][1] == "x"
        assert np.array_equal(rows[0][2], values)

    def test_label_with_comma_rejected(self, tmp_path):
        config = DescriptorConfig(k_d=1, k_a=1, k_c=8)
        with pytest.raises(ValueError):
            write_descriptors_csv(tmp_path / "x.csv", [("a.ppm", "bad,label", np.zeros(8))], config)

    def test_fractional_values_survive_at_nine_digits(self, tmp_path):
        config = DescriptorConfig(k_d=1, k_a=1, k_c=8, normalize=True)
        values = np.array([1 / 3, 1 / 7, 0.125, 2 / 3, 1e-4, 0.0, 0.25, 1e-9])
        path = tmp_path / "desc.csv"
        write_descriptors_csv(path, [("a.ppm", "x", values)], config)
        _, rows = read_descriptors_csv(path)
        assert rows[0][2] == pytest.approx(values, rel=1e-8)

    def test_write_read_write_is_idempotent(self, rng, tmp_path):
        config = DescriptorConfig(k_d=2, k_a=4, k_c=8, normalize=True)
        values = rng.random(config.length)
        values /= values.sum()
        first = tmp_path / "one.csv"
        second = tmp_path / "two.csv"
        write_descriptors_csv(first, [("a.ppm", "x", values)], config)
        got_config, got_rows = read_descriptors_csv(first)
        write_descriptors_csv(second, [(r[0], r[1], r[2]) for r in got_rows], got_config)
        assert first.read_text() == second.read_text()

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_descriptors_csv(tmp_path / "absent.csv")

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("NOPE,4,8,8,1\n")
        with pytest.raises(ValueError):
            read_descriptors_csv(path)

    def test_short_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("SDPF1,1,1,8,0\na.ppm,x,1,2,3\n")
        with pytest.raises(ValueError):
            read_descriptors_csv(path)

    def test_non_numeric_value_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        row = "a.ppm,x," + ",".join(["1"] * 7) + ",oops\n"
        path.write_text("SDPF1,1,1,8,0\n" + row)
        with pytest.raises(ValueError):
            read_descriptors_csv(path)
