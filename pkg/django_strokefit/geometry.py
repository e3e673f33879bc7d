# -*- coding: utf-8 -*-
"""
Strokes, canvases and affine maps, plus cubic Bezier evaluation and
closest-point queries.

Canvas coordinates cover [-1, 1]^2; x grows with the column index and
y grows with the row index. A toroidal canvas identifies opposite borders,
so its period is 2 in both directions.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Tuple

import numpy as np

from django_strokefit.exceptions import (
    CanvasMismatchError, InvalidAffineMapError, InvalidCanvasError, InvalidImageError, InvalidStrokeError
)

TOPOLOGY_PLANAR = 'planar'
TOPOLOGY_TOROIDAL = 'toroidal'
TOPOLOGIES = (TOPOLOGY_PLANAR, TOPOLOGY_TOROIDAL)

NUM_CONTROL_POINTS = 4
CLOSEST_POINT_SAMPLES = 32
CLOSEST_POINT_NEWTON_ITERATIONS = 8

# the 9 copies of a curve visible from the base cell of a toroidal canvas
TOROIDAL_OFFSETS = tuple((ox, oy) for ox in (-2.0, 0.0, 2.0) for oy in (-2.0, 0.0, 2.0))


def _readonly(array):
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidStrokeError("Point coordinates must be finite, got ({}, {})".format(self.x, self.y))

    def as_array(self):
        return np.array([self.x, self.y], dtype=np.float64)


@dataclass(frozen=True)
class CanvasSpec:
    width: int
    height: int
    channels: int = 1
    topology: str = TOPOLOGY_PLANAR

    def __post_init__(self):
        for name in ('width', 'height', 'channels'):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise InvalidCanvasError("Canvas {} must be an integer, got {!r}".format(name, value))
            object.__setattr__(self, name, int(value))
        if self.width <= 0 or self.height <= 0:
            raise InvalidCanvasError("Canvas size must be positive, got {}x{}".format(self.width, self.height))
        if self.channels not in (1, 3):
            raise InvalidCanvasError("Canvas channels must be 1 or 3, got {}".format(self.channels))
        if self.topology not in TOPOLOGIES:
            raise InvalidCanvasError("Canvas topology must be one of {}, got {!r}".format(TOPOLOGIES, self.topology))

    @property
    def toroidal(self):
        return self.topology == TOPOLOGY_TOROIDAL

    @property
    def shape(self):
        return self.height, self.width, self.channels

    def resized(self, width, height):
        return CanvasSpec(width, height, self.channels, self.topology)

    def column_centers(self):
        # (2j + 1 - W) / W has an exact integer numerator, so the grid is
        # exactly symmetric under negation
        return (2.0 * np.arange(self.width) + 1.0 - self.width) / self.width

    def row_centers(self):
        return (2.0 * np.arange(self.height) + 1.0 - self.height) / self.height

    def pixel_centers(self):
        """
        Return ``(xs, ys)``: H x W arrays with the canvas coordinates of every pixel center.
        """
        return np.meshgrid(self.column_centers(), self.row_centers())

    def pixel_to_point(self, row, col):
        return Point((2.0 * col + 1.0 - self.width) / self.width, (2.0 * row + 1.0 - self.height) / self.height)

    def point_to_pixel(self, point):
        """
        Nearest pixel ``(row, col)`` to a point; wrapped on toroidal canvases, clipped otherwise.
        """
        col = int(np.rint((point.x * self.width + self.width - 1.0) / 2.0))
        row = int(np.rint((point.y * self.height + self.height - 1.0) / 2.0))
        if self.toroidal:
            return row % self.height, col % self.width
        return min(max(row, 0), self.height - 1), min(max(col, 0), self.width - 1)


class Stroke(object):
    """
    A cubic Bezier stroke: control points t1..t4, a color per channel and a width.

    Strokes are immutable. ``allow_wide`` admits widths above 1, which only
    arise as images of valid strokes under enlarging similarity maps.
    """

    __slots__ = ('control_points', 'color', 'width')

    def __init__(self, control_points, color, width, allow_wide=False):
        points = np.array(control_points, dtype=np.float64)
        if points.shape != (NUM_CONTROL_POINTS, 2):
            raise InvalidStrokeError(
                "A stroke needs exactly {} control points, got shape {}".format(NUM_CONTROL_POINTS, points.shape))
        if not np.all(np.isfinite(points)):
            raise InvalidStrokeError("Stroke control points must be finite")

        colors = np.atleast_1d(np.array(color, dtype=np.float64))
        if colors.ndim != 1 or colors.shape[0] not in (1, 3):
            raise InvalidStrokeError("Stroke color must have 1 or 3 components, got shape {}".format(colors.shape))
        if not np.all(np.isfinite(colors)) or np.any(colors < 0.0) or np.any(colors > 1.0):
            raise InvalidStrokeError("Stroke color components must lie in [0, 1], got {}".format(colors.tolist()))

        width = float(width)
        if not math.isfinite(width) or width <= 0.0 or (width > 1.0 and not allow_wide):
            raise InvalidStrokeError("Stroke width must lie in (0, 1], got {}".format(width))

        object.__setattr__(self, 'control_points', _readonly(points))
        object.__setattr__(self, 'color', _readonly(colors))
        object.__setattr__(self, 'width', width)

    def __setattr__(self, key, value):
        raise AttributeError("Stroke is immutable")

    def __eq__(self, other):
        if not isinstance(other, Stroke):
            return NotImplemented
        return (
            np.array_equal(self.control_points, other.control_points)
            and np.array_equal(self.color, other.color)
            and self.width == other.width
        )

    def __hash__(self):
        return hash((self.control_points.tobytes(), self.color.tobytes(), self.width))

    def __repr__(self):
        return 'Stroke(control_points={}, color={}, width={!r})'.format(
            self.control_points.tolist(), self.color.tolist(), self.width)

    @property
    def channels(self):
        return self.color.shape[0]

    def reversed(self):
        """
        The same curve traversed from t4 to t1.
        """
        return Stroke(self.control_points[::-1], self.color, self.width, allow_wide=True)

    def replace(self, control_points=None, color=None, width=None, allow_wide=False):
        return Stroke(
            self.control_points if control_points is None else control_points,
            self.color if color is None else color,
            self.width if width is None else width,
            allow_wide=allow_wide,
        )


class StrokeSet(object):
    """
    An ordered, nonempty sequence of strokes with a common channel count.
    Index 0 is composited on top.
    """

    __slots__ = ('strokes',)

    def __init__(self, strokes: Iterable[Stroke]):
        strokes = tuple(strokes)
        if not strokes:
            raise InvalidStrokeError("A stroke set needs at least one stroke")
        for stroke in strokes:
            if not isinstance(stroke, Stroke):
                raise InvalidStrokeError("Expected a Stroke, got {!r}".format(stroke))
        channels = {stroke.channels for stroke in strokes}
        if len(channels) != 1:
            raise CanvasMismatchError("All strokes in a set must have the same number of color channels")
        object.__setattr__(self, 'strokes', strokes)

    def __setattr__(self, key, value):
        raise AttributeError("StrokeSet is immutable")

    @classmethod
    def from_arrays(cls, control_points, colors, widths, allow_wide=False):
        """
        Build a set from ``(n, 4, 2)`` control points, ``(n, C)`` colors and ``(n,)`` widths.
        """
        control_points = np.asarray(control_points, dtype=np.float64)
        colors = np.asarray(colors, dtype=np.float64)
        widths = np.asarray(widths, dtype=np.float64)
        if not (control_points.shape[0] == colors.shape[0] == widths.shape[0]):
            raise InvalidStrokeError("Stroke arrays disagree on the number of strokes")
        return cls(
            Stroke(points, color, width, allow_wide=allow_wide)
            for points, color, width in zip(control_points, colors, widths)
        )

    def __len__(self):
        return len(self.strokes)

    def __iter__(self) -> Iterator[Stroke]:
        return iter(self.strokes)

    def __getitem__(self, index):
        return self.strokes[index]

    def __eq__(self, other):
        if not isinstance(other, StrokeSet):
            return NotImplemented
        return self.strokes == other.strokes

    def __hash__(self):
        return hash(self.strokes)

    def __repr__(self):
        return 'StrokeSet({} strokes)'.format(len(self.strokes))

    @property
    def channels(self):
        return self.strokes[0].channels

    @property
    def control_points(self):
        return np.stack([stroke.control_points for stroke in self.strokes])

    @property
    def colors(self):
        return np.stack([stroke.color for stroke in self.strokes])

    @property
    def widths(self):
        return np.array([stroke.width for stroke in self.strokes], dtype=np.float64)

    def permuted(self, order: Sequence[int]):
        """
        Return a set whose i-th stroke is ``self[order[i]]``.
        """
        if sorted(order) != list(range(len(self))):
            raise InvalidStrokeError("{} is not a permutation of the stroke indexes".format(list(order)))
        return StrokeSet(self.strokes[i] for i in order)

    def check_canvas(self, canvas: CanvasSpec):
        if self.channels != canvas.channels:
            raise CanvasMismatchError(
                "Strokes have {} color channels but the canvas has {}".format(self.channels, canvas.channels))


class AffineMap(object):
    """
    ``p -> linear @ p + translation`` on canvas coordinates.
    Maps compose like functions: ``a.compose(b)`` applies b first.
    """

    __slots__ = ('linear', 'translation')

    def __init__(self, linear, translation=(0.0, 0.0)):
        linear = np.array(linear, dtype=np.float64)
        translation = np.array(translation, dtype=np.float64)
        if linear.shape != (2, 2) or translation.shape != (2,):
            raise InvalidAffineMapError(
                "An affine map needs a 2x2 linear part and a 2-vector translation, "
                "got {} and {}".format(linear.shape, translation.shape))
        if not (np.all(np.isfinite(linear)) and np.all(np.isfinite(translation))):
            raise InvalidAffineMapError()
        if _det(linear) == 0.0:
            raise InvalidAffineMapError()
        object.__setattr__(self, 'linear', _readonly(linear))
        object.__setattr__(self, 'translation', _readonly(translation))

    def __setattr__(self, key, value):
        raise AttributeError("AffineMap is immutable")

    def __eq__(self, other):
        if not isinstance(other, AffineMap):
            return NotImplemented
        return np.array_equal(self.linear, other.linear) and np.array_equal(self.translation, other.translation)

    def __hash__(self):
        return hash((self.linear.tobytes(), self.translation.tobytes()))

    def __repr__(self):
        return 'AffineMap(linear={}, translation={})'.format(self.linear.tolist(), self.translation.tolist())

    @classmethod
    def identity(cls):
        return cls(np.eye(2))

    @classmethod
    def translation_by(cls, dx, dy):
        return cls(np.eye(2), (dx, dy))

    @classmethod
    def rotation(cls, degrees):
        """
        Counterclockwise rotation about the origin (x toward y).
        Multiples of 90 degrees are exact.
        """
        quarter, remainder = divmod(float(degrees), 90.0)
        if remainder == 0.0:
            return cls.quarter_turn(int(quarter))
        radians = math.radians(degrees)
        c, s = math.cos(radians), math.sin(radians)
        return cls([[c, -s], [s, c]])

    @classmethod
    def quarter_turn(cls, k=1):
        c, s = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[k % 4]
        return cls([[c, -s], [s, c]])

    @classmethod
    def scaling(cls, sx, sy=None):
        return cls([[sx, 0.0], [0.0, sx if sy is None else sy]])

    @classmethod
    def similarity(cls, degrees=0.0, scale=1.0, dx=0.0, dy=0.0):
        """
        Scale, then rotate, then translate.
        """
        return cls.translation_by(dx, dy).compose(cls.rotation(degrees)).compose(cls.scaling(scale))

    @classmethod
    def pixel_translation(cls, canvas: CanvasSpec, cols, rows):
        """
        Translation by whole pixels: ``cols`` to the right and ``rows`` down.
        """
        return cls.translation_by(2.0 * cols / canvas.width, 2.0 * rows / canvas.height)

    def compose(self, other):
        """
        ``(self o other)(p) = self(other(p))``
        """
        return AffineMap(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def inverse(self):
        (a, b), (c, d) = self.linear
        det = _det(self.linear)
        # closed form keeps signed permutation matrices exact
        inverse_linear = np.array([[d, -b], [-c, a]]) / det
        return AffineMap(inverse_linear, -(inverse_linear @ self.translation))

    @property
    def determinant(self):
        return _det(self.linear)

    def is_similarity(self, tolerance=1e-12):
        gram = self.linear.T @ self.linear
        scale_sq = abs(self.determinant)
        return bool(np.all(np.abs(gram - scale_sq * np.eye(2)) <= tolerance * max(1.0, scale_sq)))

    @property
    def similarity_scale(self):
        return math.sqrt(abs(self.determinant))

    def apply(self, points):
        """
        Apply the map to an ``(..., 2)`` array of points.
        """
        points = np.asarray(points, dtype=np.float64)
        x, y = points[..., 0], points[..., 1]
        (a, b), (c, d) = self.linear
        tx, ty = self.translation
        return np.stack([a * x + b * y + tx, c * x + d * y + ty], axis=-1)


def _det(linear):
    return float(linear[0, 0] * linear[1, 1] - linear[0, 1] * linear[1, 0])


@dataclass(frozen=True, eq=False)
class Image:
    canvas: CanvasSpec
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64)
        if pixels.ndim == 2:
            pixels = pixels[:, :, np.newaxis]
        if pixels.shape != self.canvas.shape:
            raise InvalidImageError(
                "Image pixels have shape {} but the canvas is {}".format(pixels.shape, self.canvas.shape))
        if not np.all(np.isfinite(pixels)) or np.any(pixels < 0.0) or np.any(pixels > 1.0):
            raise InvalidImageError("Image pixels must be finite values in [0, 1]")
        object.__setattr__(self, 'pixels', _readonly(pixels))

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.canvas == other.canvas and np.array_equal(self.pixels, other.pixels)

    @classmethod
    def filled(cls, canvas, value=1.0):
        return cls(canvas, np.full(canvas.shape, value, dtype=np.float64))


"""
Bezier evaluation
"""


def bernstein_basis(s):
    """
    Cubic Bernstein basis at ``s``: an array of shape ``s.shape + (4,)``.
    """
    s = np.asarray(s, dtype=np.float64)
    u = 1.0 - s
    return np.stack([u * u * u, 3.0 * s * u * u, 3.0 * s * s * u, s * s * s], axis=-1)


def bernstein_derivatives(s):
    """
    First and second derivatives of the cubic Bernstein basis at ``s``,
    each of shape ``s.shape + (4,)``.
    """
    s = np.asarray(s, dtype=np.float64)
    u = 1.0 - s
    first = np.stack([-3.0 * u * u, 3.0 * u * (u - 2.0 * s), 3.0 * s * (2.0 * u - s), 3.0 * s * s], axis=-1)
    second = np.stack([6.0 * u, 6.0 * (3.0 * s - 2.0), 6.0 * (1.0 - 3.0 * s), 6.0 * s], axis=-1)
    return first, second


def _curve(control_points, s):
    """
    Evaluate curves at parameters ``s``. ``control_points`` is ``(..., 4, 2)``
    and broadcasts against ``s``; the sum order is fixed.
    """
    basis = bernstein_basis(s)
    t = control_points
    x = ((basis[..., 0] * t[..., 0, 0] + basis[..., 1] * t[..., 1, 0])
         + basis[..., 2] * t[..., 2, 0]) + basis[..., 3] * t[..., 3, 0]
    y = ((basis[..., 0] * t[..., 0, 1] + basis[..., 1] * t[..., 1, 1])
         + basis[..., 2] * t[..., 2, 1]) + basis[..., 3] * t[..., 3, 1]
    return x, y


def _curve_derivatives(control_points, s):
    """
    First and second derivatives of the curve, as ``((dx, dy), (ddx, ddy))``.
    """
    t = control_points
    u = 1.0 - s
    d1 = t[1] - t[0]
    d2 = t[2] - t[1]
    d3 = t[3] - t[2]
    first = [3.0 * (u * u * d1[k] + 2.0 * s * u * d2[k] + s * s * d3[k]) for k in (0, 1)]
    e1 = d2 - d1
    e2 = d3 - d2
    second = [6.0 * (u * e1[k] + s * e2[k]) for k in (0, 1)]
    return first, second


def bezier_point(stroke: Stroke, s: float) -> Point:
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise InvalidStrokeError("Curve parameter must lie in [0, 1], got {}".format(s))
    x, y = _curve(stroke.control_points, s)
    return Point(float(x), float(y))


def closest_points(control_points, px, py, toroidal=False):
    """
    Closest points on one cubic curve to many query points.

    ``control_points`` is ``(4, 2)``; ``px`` and ``py`` are arrays of the same shape.
    Returns ``(distance, s_star, diff_x, diff_y)`` where ``diff`` is the vector
    from the query point to the closest curve point (on the nearest copy of the
    curve for toroidal canvases).

    The search takes the best of 32 uniform samples, then 8 Newton steps on the
    derivative of the squared distance, clamped to [0, 1]; a step is only
    accepted if it lowers the squared distance.
    """
    control_points = np.asarray(control_points, dtype=np.float64)
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    offsets = TOROIDAL_OFFSETS if toroidal else ((0.0, 0.0),)

    best = None
    for ox, oy in offsets:
        copy = control_points + np.array([ox, oy])
        candidate = _closest_on_curve(copy, px, py)
        if best is None:
            best = candidate
        else:
            closer = candidate[0] < best[0]
            best = tuple(np.where(closer, new, old) for new, old in zip(candidate, best))

    dist_sq, s_star, diff_x, diff_y = best
    return np.sqrt(dist_sq), s_star, diff_x, diff_y


def _closest_candidates(control_points, px, py):
    """
    Squared distances and parameters of the two best refined sample minima, as
    ``(..., 2)`` arrays; both entries are the same minimum when there is only one.
    """
    samples = np.linspace(0.0, 1.0, CLOSEST_POINT_SAMPLES)
    cx, cy = _curve(control_points, samples)
    dx = cx - px[..., np.newaxis]
    dy = cy - py[..., np.newaxis]
    sample_dist_sq = dx * dx + dy * dy

    # refine the two best local minima among the samples; the squared
    # distance to a cubic can have several basins of nearly equal depth
    local = np.ones(sample_dist_sq.shape, dtype=bool)
    local[..., 1:] &= sample_dist_sq[..., 1:] <= sample_dist_sq[..., :-1]
    local[..., :-1] &= sample_dist_sq[..., :-1] <= sample_dist_sq[..., 1:]
    masked = np.where(local, sample_dist_sq, np.inf)
    order = np.argsort(masked, axis=-1, kind='stable')[..., :2]
    runner_up_missing = np.isinf(np.take_along_axis(masked, order[..., 1:], axis=-1)[..., 0])
    order[..., 1] = np.where(runner_up_missing, order[..., 0], order[..., 1])

    s = samples[order]
    dist_sq = np.take_along_axis(sample_dist_sq, order, axis=-1)
    return _newton_refine(control_points, s, dist_sq, px[..., np.newaxis], py[..., np.newaxis])


def _closest_on_curve(control_points, px, py):
    dist_sq, s = _closest_candidates(control_points, px, py)
    second = dist_sq[..., 1] < dist_sq[..., 0]
    s = np.where(second, s[..., 1], s[..., 0])
    dist_sq = np.where(second, dist_sq[..., 1], dist_sq[..., 0])
    cx, cy = _curve(control_points, s)
    return dist_sq, s, cx - px, cy - py


def closest_point_gap(control_points, px, py, toroidal=False, separation=1e-3):
    """
    Distance gap between the two nearest distinct local minima of the distance
    to the curve (inf when there is only one). On toroidal canvases minima on
    different copies of the curve are always distinct. Where the gap is near
    zero the closest point jumps and the distance is not differentiable.
    """
    control_points = np.asarray(control_points, dtype=np.float64)
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    offsets = TOROIDAL_OFFSETS if toroidal else ((0.0, 0.0),)

    dist_sq, s, copy = [], [], []
    for index, (ox, oy) in enumerate(offsets):
        candidate_dist_sq, candidate_s = _closest_candidates(control_points + np.array([ox, oy]), px, py)
        dist_sq.append(candidate_dist_sq)
        s.append(candidate_s)
        copy.append(np.full(candidate_s.shape, index))
    dist_sq = np.concatenate(dist_sq, axis=-1)
    s = np.concatenate(s, axis=-1)
    copy = np.concatenate(copy, axis=-1)

    best = np.argmin(dist_sq, axis=-1)[..., np.newaxis]
    best_dist_sq = np.take_along_axis(dist_sq, best, axis=-1)
    distinct = ((copy != np.take_along_axis(copy, best, axis=-1))
                | (np.abs(s - np.take_along_axis(s, best, axis=-1)) > separation))
    runner_up = np.min(np.where(distinct, dist_sq, np.inf), axis=-1)
    return np.sqrt(runner_up) - np.sqrt(best_dist_sq[..., 0])


def _newton_refine(control_points, s, dist_sq, px, py):
    for _ in range(CLOSEST_POINT_NEWTON_ITERATIONS):
        cx, cy = _curve(control_points, s)
        (d1x, d1y), (d2x, d2y) = _curve_derivatives(control_points, s)
        ex = cx - px
        ey = cy - py
        slope = ex * d1x + ey * d1y
        curvature = (d1x * d1x + d1y * d1y) + (ex * d2x + ey * d2y)
        usable = curvature > 0.0
        step = np.divide(slope, curvature, out=np.zeros_like(slope), where=usable)
        s_new = np.clip(s - step, 0.0, 1.0)
        nx, ny = _curve(control_points, s_new)
        fx = nx - px
        fy = ny - py
        new_dist_sq = fx * fx + fy * fy
        better = usable & (new_dist_sq < dist_sq)
        s = np.where(better, s_new, s)
        dist_sq = np.where(better, new_dist_sq, dist_sq)
    return dist_sq, s


def stroke_distance(stroke: Stroke, point: Point, topology: str = TOPOLOGY_PLANAR) -> Tuple[float, float]:
    """
    Distance from ``point`` to the curve of ``stroke`` and the minimizing parameter.
    """
    if topology not in TOPOLOGIES:
        raise InvalidCanvasError("Unknown topology {!r}".format(topology))
    distance, s_star, _, _ = closest_points(
        stroke.control_points, np.array([point.x]), np.array([point.y]), toroidal=topology == TOPOLOGY_TOROIDAL)
    return float(distance[0]), float(s_star[0])


"""
Affine actions
"""


def apply_affine_point(affine: AffineMap, point: Point) -> Point:
    x, y = affine.apply(point.as_array())
    return Point(float(x), float(y))


def apply_affine_stroke(affine: AffineMap, stroke: Stroke) -> Stroke:
    """
    Map the control points; widths scale with similarities and are kept otherwise.
    """
    width = stroke.width
    if affine.is_similarity():
        width = width * affine.similarity_scale
    return Stroke(affine.apply(stroke.control_points), stroke.color, width, allow_wide=True)


def apply_affine_strokes(affine: AffineMap, strokes: StrokeSet) -> StrokeSet:
    return StrokeSet(apply_affine_stroke(affine, stroke) for stroke in strokes)
