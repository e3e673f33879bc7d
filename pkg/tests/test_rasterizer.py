import math
import xml.etree.ElementTree as etree

import numpy as np
from django.test import SimpleTestCase, override_settings

from django_strokefit.exceptions import CanvasMismatchError, InvalidConfigError
from django_strokefit.geometry import AffineMap, CanvasSpec, Stroke, StrokeSet, apply_affine_strokes
from django_strokefit.rasterizer import (
    COMPOSITION_COLOR_REPLACE, COMPOSITION_OVER, RenderConfig, composite_fields, export_svg, max_abs_difference,
    render, stroke_field
)
from django_strokefit.utils.test_utils import StrokefitTestCaseMixin


def dot_stroke(x=0.0, y=0.0, color=(0.0,), width=0.1):
    # a stroke whose curve is a single point
    return Stroke([[x, y]] * 4, color, width)


class TestRenderConfig(SimpleTestCase):

    def test_defaults(self):
        config = RenderConfig()
        self.assertEqual(config.anneal_tau, 1.0)
        self.assertEqual(config.composition, COMPOSITION_COLOR_REPLACE)
        self.assertEqual(config.background, (1.0,))

    def test_validation(self):
        with self.assertRaises(InvalidConfigError):
            RenderConfig(anneal_tau=1.5)
        with self.assertRaises(InvalidConfigError):
            RenderConfig(composition='multiply')
        with self.assertRaises(InvalidConfigError):
            RenderConfig(intensity_clamp=1.0)
        with self.assertRaises(InvalidConfigError):
            RenderConfig(supersample=0)
        with self.assertRaises(InvalidConfigError):
            RenderConfig(background=(1.0, 1.0))

    def test_with_tau(self):
        self.assertEqual(RenderConfig().with_tau(0.25).anneal_tau, 0.25)

    def test_background_channels(self):
        config = RenderConfig(background=(0.1, 0.2, 0.3))
        with self.assertRaises(CanvasMismatchError):
            config.background_for(1)


class TestStrokeField(StrokefitTestCaseMixin, SimpleTestCase):

    def test_field_of_a_dot(self):
        canvas = CanvasSpec(4, 4)
        field = stroke_field(dot_stroke(width=0.5), canvas)
        xs, ys = canvas.pixel_centers()
        expected = np.exp(-np.hypot(xs, ys) ** 2 / 0.25)
        np.testing.assert_allclose(field.alpha, expected, rtol=1e-12)

    def test_annealing_exponent_and_width(self):
        canvas = CanvasSpec(4, 4)
        config = RenderConfig(anneal_tau=0.0)
        field = stroke_field(dot_stroke(width=0.25), canvas, config)
        xs, ys = canvas.pixel_centers()
        # tau = 0 gives exponent 1 and an effective width of 2w
        expected = np.exp(-np.hypot(xs, ys) / 0.25)
        np.testing.assert_allclose(field.alpha, expected, rtol=1e-12)

    def test_field_in_unit_interval(self):
        canvas = self.make_canvas(16)
        for stroke in self.make_strokes(n=4):
            alpha = stroke_field(stroke, canvas).alpha
            self.assertTrue(np.all(alpha >= 0.0) and np.all(alpha < 1.0))

    def test_far_field_vanishes(self):
        canvas = CanvasSpec(16, 16)
        alpha = stroke_field(dot_stroke(-0.9, -0.9, width=0.02), canvas).alpha
        self.assertLess(alpha[-1, -1], 1e-12)


class TestRender(StrokefitTestCaseMixin, SimpleTestCase):

    def test_shape_and_range(self):
        canvas = self.make_canvas(24, channels=3)
        image = render(self.make_strokes(n=5, channels=3), canvas, workers=1)
        self.assertEqual(image.pixels.shape, (24, 24, 3))
        self.assertTrue(np.all(image.pixels >= 0.0) and np.all(image.pixels <= 1.0))

    def test_channel_mismatch(self):
        with self.assertRaises(CanvasMismatchError):
            render(self.make_strokes(n=2, channels=3), self.make_canvas(8, channels=1))

    def test_black_dot_on_white(self):
        canvas = CanvasSpec(5, 5)
        image = render(dot_stroke(width=0.3), canvas, workers=1)
        clamp = RenderConfig().intensity_clamp
        # the center pixel is clamped, so the background still shows through a little
        self.assertAlmostEqual(image.pixels[2, 2, 0], 1.0 - clamp, places=12)
        self.assertGreater(image.pixels[0, 0, 0], 0.99)

    def test_color_replace_single_stroke(self):
        canvas = CanvasSpec(8, 8)
        stroke = dot_stroke(color=(0.25,), width=0.3)
        alpha = stroke_field(stroke, canvas).alpha
        image = render(stroke, canvas, workers=1)
        np.testing.assert_allclose(image.pixels[..., 0], alpha * 0.25 + (1.0 - alpha), atol=1e-12)

    def test_over_single_stroke(self):
        canvas = CanvasSpec(8, 8)
        stroke = dot_stroke(color=(0.25,), width=0.3)
        alpha = stroke_field(stroke, canvas).alpha
        image = render(stroke, canvas, RenderConfig(composition=COMPOSITION_OVER), workers=1)
        np.testing.assert_allclose(image.pixels[..., 0], alpha * 0.25 + (1.0 - alpha * 0.25), atol=1e-12)

    def test_index_zero_on_top(self):
        canvas = CanvasSpec(9, 9)
        black = dot_stroke(color=(0.0,), width=0.3)
        gray = dot_stroke(color=(0.5,), width=0.3)
        black_on_top = render(StrokeSet([black, gray]), canvas, workers=1)
        gray_on_top = render(StrokeSet([gray, black]), canvas, workers=1)
        self.assertLess(black_on_top.pixels[4, 4, 0], gray_on_top.pixels[4, 4, 0])

    def test_background(self):
        canvas = CanvasSpec(8, 8, 3)
        config = RenderConfig(background=(0.0, 0.5, 1.0))
        image = render(dot_stroke(-0.9, -0.9, color=(1.0, 1.0, 1.0), width=0.01), canvas, config, workers=1)
        np.testing.assert_allclose(image.pixels[7, 7], [0.0, 0.5, 1.0], atol=1e-12)

    def test_composite_matches_sequential_blending(self):
        rng = self.rng(3)
        alpha = rng.uniform(0.0, 0.99, size=(3, 2, 2))
        colors = rng.uniform(0.0, 1.0, size=(3, 1))
        background = np.array([1.0])
        raw = composite_fields(alpha, colors, background, COMPOSITION_COLOR_REPLACE).raw
        # paint from the bottom stroke up
        expected = np.ones((2, 2, 1))
        for i in reversed(range(3)):
            expected = alpha[i][..., np.newaxis] * colors[i] + (1.0 - alpha[i][..., np.newaxis]) * expected
        np.testing.assert_allclose(raw, expected, atol=1e-12)

    def test_supersample(self):
        canvas = CanvasSpec(8, 8)
        strokes = self.make_strokes(n=2)
        coarse = render(strokes, canvas, workers=1)
        fine = render(strokes, canvas, RenderConfig(supersample=2), workers=1)
        self.assertEqual(fine.pixels.shape, coarse.pixels.shape)
        self.assertFalse(np.array_equal(fine.pixels, coarse.pixels))

    def test_deterministic(self):
        canvas = self.make_canvas(32)
        strokes = self.make_strokes(n=4)
        self.assertEqual(max_abs_difference(render(strokes, canvas), render(strokes, canvas)), 0.0)

    @override_settings(STROKEFIT_THREADS=0)
    def test_workers_do_not_change_the_result(self):
        canvas = self.make_canvas(48)
        strokes = self.make_strokes(n=4, seed=2)
        single = render(strokes, canvas, workers=1)
        threaded = render(strokes, canvas, workers=3)
        np.testing.assert_array_equal(single.pixels, threaded.pixels)


class TestToroidalRender(StrokefitTestCaseMixin, SimpleTestCase):

    def test_pixel_translation_rolls_the_image(self):
        canvas = self.make_canvas(32, topology='toroidal')
        strokes = StrokeSet.from_arrays(
            self.rng(4).integers(-20, 20, size=(2, 4, 2)) * 2.0 / 64.0 + 1.0 / 64.0,
            [[0.0], [0.5]], [0.08, 0.1])
        image = render(strokes, canvas, workers=1)
        moved = render(apply_affine_strokes(AffineMap.pixel_translation(canvas, 5, -3), strokes), canvas, workers=1)
        np.testing.assert_array_equal(moved.pixels, np.roll(image.pixels, (-3, 5), axis=(0, 1)))

    def test_wraps_across_the_border(self):
        canvas = self.make_canvas(16, topology='toroidal')
        image = render(dot_stroke(0.99, 0.0, width=0.2), canvas, workers=1)
        # the stroke sits on the right border, so both edge columns are dark
        self.assertLess(image.pixels[8, 0, 0], 0.5)
        self.assertLess(image.pixels[8, 15, 0], 0.5)


class TestExportSvg(StrokefitTestCaseMixin, SimpleTestCase):

    def test_paths(self):
        canvas = CanvasSpec(64, 32, 3)
        strokes = StrokeSet([
            Stroke([[-1.0, -1.0], [0.0, 0.0], [0.5, 0.5], [1.0, 1.0]], [1.0, 0.0, 0.0], 0.1),
            Stroke([[0.0, 0.0]] * 4, [0.0, 0.0, 1.0], 0.2),
        ])
        root = etree.fromstring(export_svg(strokes, canvas).split('\n', 1)[1])
        self.assertEqual(root.attrib['viewBox'], '0 0 64 32')
        paths = root.findall('{http://www.w3.org/2000/svg}path')
        self.assertEqual(len(paths), 2)
        # bottom stroke first
        self.assertEqual(paths[0].attrib['id'], 'stroke-1')
        top = paths[1]
        self.assertEqual(top.attrib['d'], 'M 0 0 C 32 16, 48 24, 64 32')
        self.assertEqual(top.attrib['stroke'], '#ff0000')
        self.assertEqual(float(top.attrib['stroke-width']), 1.6)

    def test_grayscale_color(self):
        svg = export_svg(StrokeSet([dot_stroke(color=(0.5,))]), CanvasSpec(8, 8))
        self.assertIn('#808080', svg)


class TestMaxAbsDifference(SimpleTestCase):

    def test_difference(self):
        self.assertEqual(max_abs_difference(np.zeros((2, 2)), np.full((2, 2), 0.5)), 0.5)
        self.assertTrue(math.isfinite(max_abs_difference(np.zeros(0), np.zeros(0))))
