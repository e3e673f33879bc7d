import numpy as np
from django.test import SimpleTestCase

from django_strokefit.exceptions import (
    CanvasMismatchError, InvalidAffineMapError, InvalidCanvasError, InvalidStrokeError
)
from django_strokefit.geometry import (
    TOPOLOGY_TOROIDAL, AffineMap, CanvasSpec, Image, Point, Stroke, StrokeSet, apply_affine_point,
    apply_affine_stroke, apply_affine_strokes, bernstein_basis, bernstein_derivatives, bezier_point, closest_points,
    stroke_distance
)
from django_strokefit.utils.test_utils import StrokefitTestCaseMixin

# a straight stroke with evenly spaced control points, so s is proportional to arc length
HORIZONTAL = [[-0.5, 0.0], [-1.0 / 6.0, 0.0], [1.0 / 6.0, 0.0], [0.5, 0.0]]


def horizontal_stroke(width=0.1):
    return Stroke(HORIZONTAL, [0.0], width)


class TestStroke(SimpleTestCase):

    def test_valid_stroke(self):
        stroke = Stroke(HORIZONTAL, [0.25, 0.5, 0.75], 0.1)
        self.assertEqual(stroke.channels, 3)
        self.assertEqual(stroke.control_points.shape, (4, 2))

    def test_wrong_number_of_control_points(self):
        with self.assertRaises(InvalidStrokeError):
            Stroke(HORIZONTAL[:3], [0.0], 0.1)

    def test_color_out_of_range(self):
        with self.assertRaises(InvalidStrokeError):
            Stroke(HORIZONTAL, [1.5], 0.1)

    def test_width_out_of_range(self):
        for width in (0.0, -0.1, 1.5, float('nan')):
            with self.assertRaises(InvalidStrokeError, msg="width {}".format(width)):
                Stroke(HORIZONTAL, [0.0], width)

    def test_wide_strokes_need_allow_wide(self):
        self.assertEqual(Stroke(HORIZONTAL, [0.0], 1.5, allow_wide=True).width, 1.5)

    def test_immutable(self):
        stroke = horizontal_stroke()
        with self.assertRaises(AttributeError):
            stroke.width = 0.2
        with self.assertRaises(ValueError):
            stroke.control_points[0, 0] = 1.0

    def test_reversed(self):
        stroke = horizontal_stroke()
        np.testing.assert_array_equal(stroke.reversed().control_points, stroke.control_points[::-1])
        self.assertEqual(stroke.reversed().reversed(), stroke)


class TestStrokeSet(StrokefitTestCaseMixin, SimpleTestCase):

    def test_empty_set_rejected(self):
        with self.assertRaises(InvalidStrokeError):
            StrokeSet([])

    def test_mixed_channels_rejected(self):
        with self.assertRaises(CanvasMismatchError):
            StrokeSet([Stroke(HORIZONTAL, [0.0], 0.1), Stroke(HORIZONTAL, [0.0, 0.0, 0.0], 0.1)])

    def test_from_arrays_round_trip(self):
        strokes = self.make_strokes(n=4, channels=3)
        rebuilt = StrokeSet.from_arrays(strokes.control_points, strokes.colors, strokes.widths)
        self.assertEqual(rebuilt, strokes)

    def test_permuted(self):
        strokes = self.make_strokes(n=3)
        permuted = strokes.permuted([2, 0, 1])
        self.assertEqual(permuted[0], strokes[2])
        self.assertEqual(permuted[1], strokes[0])
        with self.assertRaises(InvalidStrokeError):
            strokes.permuted([0, 0, 1])

    def test_check_canvas(self):
        strokes = self.make_strokes(n=2, channels=1)
        strokes.check_canvas(CanvasSpec(8, 8, 1))
        with self.assertRaises(CanvasMismatchError):
            strokes.check_canvas(CanvasSpec(8, 8, 3))


class TestCanvasSpec(SimpleTestCase):

    def test_validation(self):
        with self.assertRaises(InvalidCanvasError):
            CanvasSpec(0, 8)
        with self.assertRaises(InvalidCanvasError):
            CanvasSpec(8, 8, channels=2)
        with self.assertRaises(InvalidCanvasError):
            CanvasSpec(8, 8, topology='spherical')

    def test_pixel_centers(self):
        canvas = CanvasSpec(4, 2)
        xs, ys = canvas.pixel_centers()
        np.testing.assert_array_equal(xs[0], [-0.75, -0.25, 0.25, 0.75])
        np.testing.assert_array_equal(ys[:, 0], [-0.5, 0.5])

    def test_pixel_centers_symmetric(self):
        canvas = CanvasSpec(33, 33)
        centers = canvas.column_centers()
        np.testing.assert_array_equal(centers, -centers[::-1])

    def test_point_to_pixel(self):
        canvas = CanvasSpec(8, 8)
        self.assertEqual(canvas.point_to_pixel(canvas.pixel_to_point(3, 5)), (3, 5))
        self.assertEqual(canvas.point_to_pixel(Point(5.0, -5.0)), (0, 7))
        toroidal = CanvasSpec(8, 8, topology=TOPOLOGY_TOROIDAL)
        self.assertEqual(toroidal.point_to_pixel(Point(1.125, 0.125)), (4, 0))


class TestBezier(StrokefitTestCaseMixin, SimpleTestCase):

    def test_endpoint_interpolation(self):
        for stroke in self.make_strokes(n=5, seed=3):
            start = bezier_point(stroke, 0.0)
            end = bezier_point(stroke, 1.0)
            self.assertEqual((start.x, start.y), tuple(stroke.control_points[0]))
            self.assertEqual((end.x, end.y), tuple(stroke.control_points[3]))

    def test_parameter_out_of_range(self):
        with self.assertRaises(InvalidStrokeError):
            bezier_point(horizontal_stroke(), 1.5)

    def test_midpoint(self):
        point = bezier_point(horizontal_stroke(), 0.5)
        self.assertAlmostEqual(point.x, 0.0, places=12)
        self.assertEqual(point.y, 0.0)

    def test_convex_hull(self):
        rng = self.rng(7)
        for stroke in self.make_strokes(n=10, seed=7):
            low = stroke.control_points.min(axis=0)
            high = stroke.control_points.max(axis=0)
            for s in rng.uniform(0.0, 1.0, size=20):
                point = bezier_point(stroke, s).as_array()
                self.assertTrue(np.all(point >= low - 1e-12) and np.all(point <= high + 1e-12))

    def test_basis_partition_of_unity(self):
        s = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(bernstein_basis(s).sum(axis=-1), 1.0, atol=1e-15)
        first, second = bernstein_derivatives(s)
        np.testing.assert_allclose(first.sum(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(second.sum(axis=-1), 0.0, atol=1e-12)

    def test_basis_derivatives_match_differences(self):
        s = np.linspace(0.1, 0.9, 9)
        h = 1e-6
        first, second = bernstein_derivatives(s)
        numeric_first = (bernstein_basis(s + h) - bernstein_basis(s - h)) / (2.0 * h)
        np.testing.assert_allclose(first, numeric_first, atol=1e-8)
        first_plus, _ = bernstein_derivatives(s + h)
        first_minus, _ = bernstein_derivatives(s - h)
        np.testing.assert_allclose(second, (first_plus - first_minus) / (2.0 * h), atol=1e-6)


class TestStrokeDistance(StrokefitTestCaseMixin, SimpleTestCase):

    def test_point_above_line(self):
        distance, s_star = stroke_distance(horizontal_stroke(), Point(0.0, 0.3))
        self.assertAlmostEqual(distance, 0.3, places=9)
        self.assertAlmostEqual(s_star, 0.5, places=6)

    def test_point_beyond_endpoint(self):
        distance, s_star = stroke_distance(horizontal_stroke(), Point(0.8, 0.0))
        self.assertAlmostEqual(distance, 0.3, places=9)
        self.assertEqual(s_star, 1.0)

    def test_matches_dense_sampling(self):
        rng = self.rng(11)
        dense = np.linspace(0.0, 1.0, 20001)
        for stroke in self.make_strokes(n=5, seed=11):
            basis = bernstein_basis(dense)
            curve = basis @ stroke.control_points
            for x, y in rng.uniform(-1.0, 1.0, size=(5, 2)):
                distance, _ = stroke_distance(stroke, Point(x, y))
                oracle = np.min(np.hypot(curve[:, 0] - x, curve[:, 1] - y))
                self.assertLessEqual(distance, oracle + 1e-9)
                self.assertAlmostEqual(distance, oracle, places=5)

    def test_reversal_symmetry(self):
        rng = self.rng(5)
        for stroke in self.make_strokes(n=5, seed=5):
            x, y = rng.uniform(-1.0, 1.0, size=2)
            forward, _ = stroke_distance(stroke, Point(x, y))
            backward, _ = stroke_distance(stroke.reversed(), Point(x, y))
            self.assertAlmostEqual(forward, backward, places=9)

    def test_toroidal_wraps(self):
        stroke = Stroke([[0.9, 0.0], [0.9166, 0.0], [0.9333, 0.0], [0.95, 0.0]], [0.0], 0.1)
        planar, _ = stroke_distance(stroke, Point(-0.95, 0.0))
        toroidal, _ = stroke_distance(stroke, Point(-0.95, 0.0), TOPOLOGY_TOROIDAL)
        self.assertAlmostEqual(planar, 1.85, places=9)
        self.assertAlmostEqual(toroidal, 0.1, places=9)

    def test_unknown_topology(self):
        with self.assertRaises(InvalidCanvasError):
            stroke_distance(horizontal_stroke(), Point(0.0, 0.0), 'klein')

    def test_closest_points_vectorized(self):
        px = np.array([[0.0, 0.8]])
        py = np.array([[0.3, 0.0]])
        distance, s_star, diff_x, diff_y = closest_points(np.array(HORIZONTAL), px, py)
        np.testing.assert_allclose(distance, [[0.3, 0.3]], atol=1e-9)
        np.testing.assert_allclose(diff_y, [[-0.3, 0.0]], atol=1e-9)
        np.testing.assert_allclose(diff_x, [[0.0, -0.3]], atol=1e-9)
        self.assertEqual(s_star[0, 1], 1.0)


class TestAffineMap(StrokefitTestCaseMixin, SimpleTestCase):

    def test_singular_rejected(self):
        with self.assertRaises(InvalidAffineMapError):
            AffineMap([[1.0, 2.0], [2.0, 4.0]])
        with self.assertRaises(InvalidAffineMapError):
            AffineMap([[float('inf'), 0.0], [0.0, 1.0]])

    def test_quarter_turns_are_exact(self):
        quarter = AffineMap.rotation(90.0)
        np.testing.assert_array_equal(quarter.linear, [[0.0, -1.0], [1.0, 0.0]])
        self.assertEqual(AffineMap.rotation(360.0), AffineMap.identity())
        self.assertEqual(quarter.compose(quarter).compose(quarter).compose(quarter), AffineMap.identity())

    def test_apply_point(self):
        affine = AffineMap([[2.0, 0.0], [0.0, 3.0]], (0.5, -0.5))
        self.assertEqual(apply_affine_point(affine, Point(1.0, 1.0)), Point(2.5, 2.5))

    def test_compose_and_inverse(self):
        a = AffineMap.similarity(30.0, 1.2, 0.1, -0.2)
        b = AffineMap([[1.0, 0.5], [0.0, 2.0]], (0.3, 0.0))
        points = self.rng(1).uniform(-1.0, 1.0, size=(10, 2))
        np.testing.assert_allclose(a.compose(b).apply(points), a.apply(b.apply(points)), atol=1e-12)
        np.testing.assert_allclose(a.inverse().apply(a.apply(points)), points, atol=1e-12)

    def test_similarity(self):
        affine = AffineMap.similarity(37.0, 1.5)
        self.assertTrue(affine.is_similarity())
        self.assertAlmostEqual(affine.similarity_scale, 1.5, places=12)
        self.assertFalse(AffineMap.scaling(1.0, 2.0).is_similarity())

    def test_pixel_translation(self):
        canvas = CanvasSpec(32, 16)
        affine = AffineMap.pixel_translation(canvas, 2, -1)
        np.testing.assert_array_equal(affine.translation, [0.125, -0.125])

    def test_stroke_width_scales_with_similarities_only(self):
        stroke = horizontal_stroke(width=0.1)
        scaled = apply_affine_stroke(AffineMap.scaling(2.0), stroke)
        self.assertAlmostEqual(scaled.width, 0.2, places=12)
        sheared = apply_affine_stroke(AffineMap([[1.0, 0.5], [0.0, 1.0]]), stroke)
        self.assertEqual(sheared.width, 0.1)
        np.testing.assert_array_equal(sheared.color, stroke.color)

    def test_homomorphism_on_stroke_sets(self):
        strokes = self.make_strokes(n=3)
        a = AffineMap.similarity(15.0, 0.9, 0.1, 0.0)
        b = AffineMap.similarity(-40.0, 1.1, 0.0, 0.2)
        composed = apply_affine_strokes(a.compose(b), strokes)
        stepwise = apply_affine_strokes(a, apply_affine_strokes(b, strokes))
        np.testing.assert_allclose(composed.control_points, stepwise.control_points, atol=1e-12)
        np.testing.assert_allclose(composed.widths, stepwise.widths, atol=1e-12)

    def test_isometry_invariance(self):
        rng = self.rng(9)
        isometry = AffineMap.similarity(73.0, 1.0, 0.2, -0.1)
        for stroke in self.make_strokes(n=5, seed=9):
            point = Point(*rng.uniform(-1.0, 1.0, size=2))
            before, _ = stroke_distance(stroke, point)
            after, _ = stroke_distance(apply_affine_stroke(isometry, stroke), apply_affine_point(isometry, point))
            self.assertAlmostEqual(before, after, places=9)


class TestImage(SimpleTestCase):

    def test_grayscale_pixels_get_a_channel_axis(self):
        image = Image(CanvasSpec(3, 2), np.zeros((2, 3)))
        self.assertEqual(image.pixels.shape, (2, 3, 1))

    def test_out_of_range_rejected(self):
        from django_strokefit.exceptions import InvalidImageError
        with self.assertRaises(InvalidImageError):
            Image(CanvasSpec(2, 2), np.full((2, 2, 1), 1.5))
        with self.assertRaises(InvalidImageError):
            Image(CanvasSpec(2, 2), np.zeros((3, 2, 1)))

    def test_filled(self):
        image = Image.filled(CanvasSpec(2, 2, 3), 0.25)
        self.assertTrue(np.all(image.pixels == 0.25))
