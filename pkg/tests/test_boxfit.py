"""boxfit module: weighted moment fitting, scoring, corner/clamp geometry."""

import math

import numpy as np
import pytest

from cambox.boxfit import PseudoBox, clamp_to_image, enforce_min_size, fit_box, score_box, to_corner
from cambox.errors import DegenerateBox, EmptyComponent
from cambox.region import Component

from .oracles import moment_box


def comp(pixels):
    xs, ys, ws = zip(*pixels)
    return Component(np.array(xs), np.array(ys), np.array(ws, dtype=float))


def box(x_c=0.0, y_c=0.0, w=1.0, h=1.0, score=0.5):
    return PseudoBox(x_c=x_c, y_c=y_c, w=w, h=h, score=score, class_id=1)


class TestFitBox:
    def test_horizontal_strip(self):
        c = comp([(x, 0, 1.0) for x in range(10)])
        x_c, y_c, w, h = fit_box(c)
        assert x_c == pytest.approx(4.5)
        assert y_c == 0.0
        # Discrete uniform variance (n^2 - 1) / 12 with n = 10.
        assert w == pytest.approx(math.sqrt(99.0), abs=1e-12)
        assert h == 0.0

    def test_strip_with_unit_square_correction(self):
        c = comp([(x, 0, 1.0) for x in range(10)])
        _, _, w, h = fit_box(c, moment_correction=True)
        assert w == pytest.approx(10.0, abs=1e-9)
        assert h == pytest.approx(1.0, abs=1e-12)

    def test_two_weighted_pixels(self):
        c = comp([(0, 0, 0.6), (1, 0, 0.3)])
        x_c, _, w, _ = fit_box(c)
        assert x_c == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert w == pytest.approx(math.sqrt(8.0 / 3.0), abs=1e-12)  # 12 * 2/9

    def test_rectangle_recovery_exact_with_correction(self):
        for a, b in [(8, 12), (31, 9), (200, 57)]:
            pixels = [(x, y, 1.0) for x in range(a) for y in range(b)]
            _, _, w, h = fit_box(comp(pixels), moment_correction=True)
            assert w == pytest.approx(a, abs=1e-6)
            assert h == pytest.approx(b, abs=1e-6)

    def test_rectangle_recovery_point_mass(self):
        for a, b in [(8, 8), (40, 16)]:
            pixels = [(x, y, 1.0) for x in range(a) for y in range(b)]
            _, _, w, h = fit_box(comp(pixels))
            assert w == pytest.approx(math.sqrt(a * a - 1), abs=1e-9)
            assert h == pytest.approx(math.sqrt(b * b - 1), abs=1e-9)
            assert abs(w - a) < 1.0 and abs(h - b) < 1.0

    def test_translation_equivariance(self):
        rng = np.random.Generator(np.random.PCG64(3))
        pixels = [(int(x), int(y), float(w)) for x, y, w in zip(
            rng.integers(0, 20, 30), rng.integers(0, 20, 30), rng.random(30) * 0.9 + 0.1
        )]
        base = fit_box(comp(pixels))
        shifted = fit_box(comp([(x + 7, y - 3, w) for x, y, w in pixels]))
        assert shifted[0] == pytest.approx(base[0] + 7, abs=1e-9)
        assert shifted[1] == pytest.approx(base[1] - 3, abs=1e-9)
        assert shifted[2] == pytest.approx(base[2], abs=1e-9)
        assert shifted[3] == pytest.approx(base[3], abs=1e-9)

    def test_weight_scaling_leaves_box_unchanged(self):
        pixels = [(0, 0, 0.2), (3, 1, 0.5), (1, 4, 0.8)]
        base = fit_box(comp(pixels))
        scaled = fit_box(comp([(x, y, 4.0 * w) for x, y, w in pixels]))
        assert scaled == pytest.approx(base, abs=1e-12)

    def test_matches_double_loop_oracle(self):
        rng = np.random.Generator(np.random.PCG64(17))
        for _ in range(100):
            n = int(rng.integers(1, 60))
            pixels = [
                (int(x), int(y), float(w))
                for x, y, w in zip(rng.integers(0, 32, n), rng.integers(0, 32, n), rng.random(n) * 0.99 + 0.01)
            ]
            got = fit_box(comp(pixels))
            want = moment_box(pixels)
            for g, w_ in zip(got, want):
                assert g == pytest.approx(w_, rel=1e-9, abs=1e-9)

    def test_empty_component_rejected(self):
        c = comp([(0, 0, 1.0)])
        object.__setattr__(c, "weights", np.zeros(1))
        with pytest.raises(EmptyComponent):
            fit_box(c)


class TestScoreBox:
    def test_uniform_weights(self):
        assert score_box(comp([(0, 0, 1.0), (1, 0, 1.0)])) == 1.0

    def test_mean_of_weights(self):
        assert score_box(comp([(0, 0, 0.6), (1, 0, 0.3)])) == pytest.approx(0.45)

    def test_single_pixel(self):
        assert score_box(comp([(5, 5, 0.7)])) == pytest.approx(0.7)


class TestGeometry:
    def test_to_corner(self):
        assert to_corner(box(x_c=5, y_c=5, w=4, h=2)) == (3.0, 4.0, 4.0, 2.0)

    def test_clamp_inside_is_identity(self):
        b = box(x_c=50, y_c=40, w=10, h=8)
        assert clamp_to_image(b, 100, 100) == b

    def test_clamp_at_origin(self):
        b = clamp_to_image(box(x_c=0, y_c=0, w=10, h=10), 100, 100)
        assert to_corner(b) == (-0.5, -0.5, 5.5, 5.5)

    def test_clamp_fully_outside_degenerate(self):
        with pytest.raises(DegenerateBox):
            clamp_to_image(box(x_c=-50, y_c=-50, w=4, h=4), 100, 100)

    def test_enforce_min_size_grows_flat_box(self):
        b = enforce_min_size(box(x_c=3, y_c=0, w=5, h=0), 1.0, 64, 64)
        assert b.h == 1.0
        assert b.w == 5.0
        x_min, y_min, w, h = to_corner(b)
        assert y_min >= -0.5 and y_min + h <= 63.5

    def test_enforce_min_size_keeps_box_in_image(self):
        b = enforce_min_size(box(x_c=63.4, y_c=0, w=0, h=2), 3.0, 64, 64)
        x_min, _, w, _ = to_corner(b)
        assert w == 3.0
        assert x_min >= -0.5 and x_min + w <= 63.5
