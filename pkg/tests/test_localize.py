"""Representative-point localization: range, azimuth, median rule."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probfusion.errors import EmptyCluster, OriginPoint
from probfusion.localize import (azimuth_of, localize, range_of,
                                 representative_point)


class TestRangeOf:
    def test_ignores_height(self):
        assert range_of(3.0, 4.0, 10.0) == pytest.approx(5.0)

    def test_origin(self):
        assert range_of(0.0, 0.0, 7.0) == 0.0

    def test_unit(self):
        assert range_of(1.0, 0.0, 0.0) == 1.0


class TestAzimuthOf:
    def test_forward_is_zero(self):
        assert azimuth_of(1.0, 0.0) == 0.0

    def test_diagonal(self):
        assert azimuth_of(1.0, 1.0) == pytest.approx(45.0)

    def test_rightward_is_negative(self):
        assert azimuth_of(0.0, -2.0) == pytest.approx(-90.0)

    def test_origin_raises(self):
        with pytest.raises(OriginPoint):
            azimuth_of(0.0, 0.0)

    @given(x=st.floats(-100, 100), y=st.floats(0.001, 100))
    @settings(max_examples=50, deadline=None)
    def test_mirror_antisymmetry(self, x, y):
        assert azimuth_of(x, y) == pytest.approx(-azimuth_of(x, -y))

    @given(x=st.floats(-100, 100), y=st.floats(-100, 100))
    @settings(max_examples=50, deadline=None)
    def test_range_convention(self, x, y):
        if x == 0.0 and y == 0.0:
            return
        a = azimuth_of(x, y)
        assert -180.0 < a <= 180.0


class TestRepresentativePoint:
    def test_odd_median(self):
        assert representative_point([9.8, 10.0, 10.2]) == 1

    def test_majority_inliers_beat_stragglers(self):
        # 60 % of ranges near 10 m; median stays in the near group.
        idx = representative_point([9.8, 10.0, 10.2, 30.1, 30.2])
        assert idx == 2

    def test_even_lower_middle(self):
        assert representative_point([10.0, 12.0]) == 0

    def test_empty_raises(self):
        with pytest.raises(EmptyCluster):
            representative_point([])

    def test_unsorted_input(self):
        assert representative_point([30.1, 10.0, 9.8, 30.2, 10.2]) == 4

    @given(st.lists(st.floats(0.1, 100.0), min_size=1, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_median_membership(self, ranges):
        idx = representative_point(ranges)
        r = np.asarray(ranges)
        # At least half the values on each side of the representative.
        assert (r <= r[idx]).sum() >= (len(r) + 1) // 2
        assert (r >= r[idx]).sum() >= len(r) - (len(r) - 1) // 2

    def test_majority_band_guarantee(self):
        # If > 50 % of points lie within +-g of the true range, so does
        # the representative.
        rng = np.random.default_rng(0)
        for _ in range(50):
            true_r, g = 20.0, 0.5
            n_in = rng.integers(11, 20)
            n_out = rng.integers(0, n_in)  # strictly fewer contaminants
            inliers = rng.uniform(true_r - g, true_r + g, n_in)
            outliers = rng.uniform(1.0, 60.0, n_out)
            ranges = rng.permutation(np.concatenate([inliers, outliers]))
            rep = ranges[representative_point(ranges)]
            assert true_r - g <= rep <= true_r + g


class TestLocalize:
    def test_singleton(self):
        loc = localize(3, 7, "pedestrian", np.array([[3.0, 4.0, 1.0]]))
        assert loc.range_m == pytest.approx(5.0)
        assert loc.azimuth_deg == pytest.approx(np.degrees(np.arctan2(4, 3)))
        assert (loc.x_m, loc.y_m) == (3.0, 4.0)
        assert (loc.frame_id, loc.object_id, loc.class_label) == \
            (3, 7, "pedestrian")

    def test_identical_points(self):
        cluster = np.tile([[6.0, -8.0, 0.5]], (9, 1))
        loc = localize(0, 1, "car", cluster)
        assert loc.range_m == pytest.approx(10.0)
        assert loc.x_m == 6.0 and loc.y_m == -8.0

    def test_empty_raises(self):
        with pytest.raises(EmptyCluster):
            localize(0, 1, "car", np.zeros((0, 3)))

    def test_internal_consistency(self):
        rng = np.random.default_rng(5)
        cluster = rng.uniform([5, -5, -1], [40, 5, 2], size=(31, 3))
        loc = localize(0, 1, "car", cluster)
        assert loc.range_m == pytest.approx(np.hypot(loc.x_m, loc.y_m),
                                            abs=1e-9)
        assert -180.0 < loc.azimuth_deg <= 180.0
        assert np.any(np.all(cluster[:, :2] == [loc.x_m, loc.y_m], axis=1))
