import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trainfractal.colorize import (
    DEEP_BLUE,
    DEEP_RED,
    colorize,
    normalized_intensity,
    percentile,
)


class TestPercentile:
    def test_constant_list(self):
        for q in (0.0, 0.3, 0.5, 1.0):
            assert percentile([4.2] * 7, q) == 4.2

    def test_interpolation(self):
        assert percentile([0.0, 10.0], 0.5) == 5.0

    def test_extremes(self):
        values = [9.0, -3.0, 5.0, 1.0]
        assert percentile(values, 0.0) == -3.0
        assert percentile(values, 1.0) == 9.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            percentile([], 0.5)

    def test_bad_fraction_rejected(self):
        with pytest.raises(ValueError):
            percentile([1.0], 1.5)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40),
           st.floats(0, 1))
    def test_within_range(self, values, q):
        p = percentile(values, q)
        assert min(values) <= p <= max(values)


class TestNormalizedIntensity:
    def test_degenerate_class_is_full_intensity(self, make_field):
        field = make_field([[0, 0], [0, 0]], accumulator=[7.0, 7.0, 7.0, 7.0])
        assert np.array_equal(normalized_intensity(field), np.ones(4))

    def test_two_value_class_spans_unit_interval(self, make_field):
        field = make_field([[0, 0]],
                           accumulator=[math.e - 1.0, math.e**3 - 1.0])
        v = normalized_intensity(field)
        assert v[0] == pytest.approx(0.0, abs=1e-12)
        assert v[1] == pytest.approx(1.0, abs=1e-12)

    def test_clamped_above_upper_percentile(self, make_field):
        acc = np.concatenate([np.linspace(1, 100, 99), [1e12]])
        field = make_field(np.zeros((10, 10)), accumulator=acc)
        v = normalized_intensity(field)
        assert v[-1] == 1.0
        q98 = percentile(np.log1p(acc), 0.98)
        above = np.log1p(acc) >= q98
        assert np.all(v[above] == 1.0)

    def test_classes_normalized_independently(self, make_field):
        field = make_field(
            [[0, 0, 1, 1]],
            accumulator=[1.0, 50.0, 1e6, 5e7])
        v = normalized_intensity(field)
        # each class spans its own [0, 1]
        assert v[0] == 0.0 and v[1] == 1.0
        assert v[2] == 0.0 and v[3] == 1.0

    @given(st.lists(st.floats(0, 1e12), min_size=2, max_size=30, unique=True))
    def test_monotone_within_class(self, accs):
        from fieldutil import build_field
        field = build_field(np.zeros((1, len(accs))), accumulator=accs)
        v = normalized_intensity(field)
        order = np.argsort(accs)
        assert np.all(np.diff(v[order]) >= 0)

    def test_scale_invariance_for_large_accumulators(self, make_field):
        accs = np.exp(np.linspace(10, 24, 50))
        a = make_field(np.zeros((1, 50)), accumulator=accs)
        b = make_field(np.zeros((1, 50)), accumulator=7.0 * accs)
        va, vb = normalized_intensity(a), normalized_intensity(b)
        assert np.max(np.abs(va - vb)) < 1e-2


class TestColorize:
    def test_fastest_run_is_white(self, make_field):
        field = make_field([[0, 0]], accumulator=[0.0, 100.0])
        img = colorize(field)
        assert tuple(img.pixels[0, 0]) == (255, 255, 255)

    def test_deep_blue_endpoint(self, make_field):
        field = make_field([[0, 0]], accumulator=[0.0, 100.0])
        img = colorize(field)
        assert tuple(img.pixels[0, 1]) == tuple(int(c) for c in DEEP_BLUE)

    def test_diverged_midpoint_rounding(self, make_field):
        # three diverged pixels with v = 0, 0.5, 1 via accumulators
        # chosen so ln(1+acc) = 0, 1, 2
        accs = [0.0, math.e - 1.0, math.e**2 - 1.0]
        field = make_field([[1, 1, 1]], accumulator=accs)
        img = colorize(field)
        assert tuple(img.pixels[0, 0]) == (255, 255, 255)
        assert tuple(img.pixels[0, 1]) == (236, 147, 141)
        assert tuple(img.pixels[0, 2]) == tuple(int(c) for c in DEEP_RED)

    def test_class_decides_palette(self, make_field):
        rng = np.random.default_rng(1)
        grid = rng.integers(0, 2, size=(8, 8))
        field = make_field(grid, accumulator=rng.uniform(0, 1e6, 64))
        img = colorize(field)
        flipped = img.pixels[::-1].reshape(64, 3)
        diverged = grid.reshape(64) == 1
        # red palette keeps R >= B, blue palette keeps B >= R
        assert np.all(flipped[diverged, 0] >= flipped[diverged, 2])
        assert np.all(flipped[~diverged, 2] >= flipped[~diverged, 0])

    def test_rows_flip_so_top_is_high_y(self, make_field):
        field = make_field([[0, 0], [1, 1]], accumulator=[1.0, 1.0, 1e6, 1e6])
        img = colorize(field)
        # field row 1 (diverged) is the high-y row, so it lands on image row 0
        assert img.pixels[0, 0, 0] >= img.pixels[0, 0, 2]  # reddish
        assert img.pixels[1, 0, 2] >= img.pixels[1, 0, 0]  # blueish

    def test_image_shape_and_dtype(self, make_field):
        field = make_field(np.zeros((3, 5)))
        img = colorize(field)
        assert img.pixels.shape == (3, 5, 3)
        assert img.pixels.dtype == np.uint8
        assert img.width == 5 and img.height == 3
        assert len(img.tobytes()) == 45
