# -*- coding: utf-8 -*-
"""
Scalar objectives over images and stroke sets, with the gradients the
optimizer needs, and the assignment solver behind the guidance loss.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from django_strokefit import get_external_metric, get_logger
from django_strokefit.exceptions import (
    CanvasMismatchError, InvalidConfigError, InvalidCostMatrixError, ShapeMismatchError
)
from django_strokefit.geometry import AffineMap, CanvasSpec, Image, Stroke, StrokeSet, apply_affine_strokes
from django_strokefit.gradients import render_and_backward
from django_strokefit.rasterizer import RenderConfig, as_stroke_set, render_arrays
from django_strokefit.transforms import ImageTransformSpec, transform_image

logger = get_logger()

METRIC_L1 = 'l1'
METRIC_EXTERNAL = 'external'
METRIC_KINDS = (METRIC_L1, METRIC_EXTERNAL)

# relative slack when deciding whether a lexicographically earlier assignment is still optimal
ASSIGNMENT_TIE_TOLERANCE = 1e-9


class ExternalMetric(Protocol):
    """
    A metric supplied by the host project. Called on (target, sketch) H x W x C
    arrays in [0, 1]; an optional ``adjoint(target, sketch)`` returning the
    gradient with respect to the sketch lets the optimizer use it.
    """

    def __call__(self, target: np.ndarray, sketch: np.ndarray) -> float:
        ...


def _check_range(name, bounds, positive=False):
    lo, hi = (float(v) for v in bounds)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise InvalidConfigError("{} must be a finite (low, high) pair with low <= high, got {!r}".format(name, bounds))
    if positive and lo <= 0.0:
        raise InvalidConfigError("{} must be positive, got {!r}".format(name, bounds))
    return lo, hi


@dataclass(frozen=True)
class AugmentRanges:
    """
    Uniform ranges of the random similarity maps used for augmentation.
    Translations are in canvas units; with ``pixel_snap`` they are rounded
    onto whole pixels.
    """
    rotation_degrees: Tuple[float, float] = (-10.0, 10.0)
    translation: Tuple[float, float] = (-0.1, 0.1)
    scale: Tuple[float, float] = (0.9, 1.1)
    pixel_snap: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'rotation_degrees', _check_range('rotation_degrees', self.rotation_degrees))
        object.__setattr__(self, 'translation', _check_range('translation', self.translation))
        object.__setattr__(self, 'scale', _check_range('scale', self.scale, positive=True))
        object.__setattr__(self, 'pixel_snap', bool(self.pixel_snap))

    @classmethod
    def isometries(cls, pixel_snap=False):
        return cls(scale=(1.0, 1.0), pixel_snap=pixel_snap)


@dataclass(frozen=True)
class MetricSpec:
    kind: str = METRIC_L1
    augment_samples: int = 0
    augment_ranges: AugmentRanges = field(default_factory=AugmentRanges)
    # for kind 'external'; falls back to the STROKEFIT_EXTERNAL_METRIC setting
    external: Optional[ExternalMetric] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise InvalidConfigError("metric kind must be one of {}, got {!r}".format(METRIC_KINDS, self.kind))
        if isinstance(self.augment_samples, bool) or int(self.augment_samples) != self.augment_samples \
                or self.augment_samples < 0:
            raise InvalidConfigError("augment_samples must be an integer >= 0, got {!r}".format(self.augment_samples))
        object.__setattr__(self, 'augment_samples', int(self.augment_samples))

    def external_metric(self):
        metric = self.external if self.external is not None else get_external_metric()
        if metric is None:
            raise InvalidConfigError(
                "metric kind 'external' needs a metric object; pass one or set STROKEFIT_EXTERNAL_METRIC")
        return metric


@dataclass(frozen=True, eq=False)
class CostMatrix:
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidCostMatrixError("cost matrix must be square, got shape {}".format(values.shape))
        if values.shape[0] == 0:
            raise InvalidCostMatrixError("cost matrix must not be empty")
        if not np.all(np.isfinite(values)):
            raise InvalidCostMatrixError("cost matrix entries must be finite")
        if np.any(values < 0.0):
            raise InvalidCostMatrixError("cost matrix entries must be nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def size(self):
        return self.values.shape[0]

    def total(self, permutation):
        return math.fsum(self.values[i, j] for i, j in enumerate(permutation))


@dataclass(frozen=True)
class Assignment:
    """
    ``permutation[i]`` is the column matched to row i (0-based).
    """
    permutation: Tuple[int, ...]
    total_cost: float

    def __post_init__(self):
        permutation = tuple(int(j) for j in self.permutation)
        if sorted(permutation) != list(range(len(permutation))):
            raise InvalidCostMatrixError("{} is not a permutation".format(permutation))
        object.__setattr__(self, 'permutation', permutation)
        object.__setattr__(self, 'total_cost', float(self.total_cost))


"""
Pixel metrics
"""


def _pixels(image):
    return image.pixels if isinstance(image, Image) else np.asarray(image, dtype=np.float64)


def l1_image_loss(a, b):
    """
    Mean absolute difference over all pixels and channels.
    """
    a, b = _pixels(a), _pixels(b)
    if a.shape != b.shape:
        raise ShapeMismatchError("cannot compare images of shape {} and {}".format(a.shape, b.shape))
    # fsum makes the value independent of pixel order
    return math.fsum(np.abs(a - b).ravel().tolist()) / a.size


def l1_image_adjoint(target, sketch):
    """
    Derivative of the mean L1 loss with respect to the sketch pixels; 0 where they agree.
    """
    target, sketch = _pixels(target), _pixels(sketch)
    return np.sign(sketch - target) / sketch.size


def evaluate_metric(metric: MetricSpec, target, sketch):
    if metric.kind == METRIC_L1:
        return l1_image_loss(target, sketch)
    return float(metric.external_metric()(_pixels(target), _pixels(sketch)))


def metric_adjoint(metric: MetricSpec, target, sketch):
    if metric.kind == METRIC_L1:
        return l1_image_adjoint(target, sketch)
    external = metric.external_metric()
    adjoint = getattr(external, 'adjoint', None)
    if adjoint is None:
        raise InvalidConfigError("the external metric {!r} has no adjoint(target, sketch) method".format(external))
    return np.asarray(adjoint(_pixels(target), _pixels(sketch)), dtype=np.float64)


"""
Stroke penalties
"""


def _control_points(strokes):
    if isinstance(strokes, np.ndarray):
        return strokes
    return as_stroke_set(strokes).control_points


def boundary_penalty(strokes):
    """
    Sum over control points of how far their max-norm exceeds 1.
    """
    points = _control_points(strokes)
    return math.fsum(np.maximum(0.0, np.max(np.abs(points), axis=-1) - 1.0).ravel())


def boundary_penalty_grad(control_points):
    control_points = np.asarray(control_points, dtype=np.float64)
    magnitude = np.abs(control_points)
    # the first coordinate wins ties of the max-norm
    use_y = magnitude[..., 1] > magnitude[..., 0]
    outside = np.max(magnitude, axis=-1) > 1.0
    grad = np.zeros_like(control_points)
    grad[..., 0] = np.where(outside & ~use_y, np.sign(control_points[..., 0]), 0.0)
    grad[..., 1] = np.where(outside & use_y, np.sign(control_points[..., 1]), 0.0)
    return grad


def align_penalty(strokes):
    """
    Sum over strokes of ``max(0, t1.x - t4.x)``: strokes should run left to right.
    """
    points = _control_points(strokes)
    return math.fsum(np.maximum(0.0, points[:, 0, 0] - points[:, 3, 0]))


def align_penalty_grad(control_points):
    control_points = np.asarray(control_points, dtype=np.float64)
    violating = (control_points[:, 0, 0] - control_points[:, 3, 0]) > 0.0
    grad = np.zeros_like(control_points)
    grad[:, 0, 0] = np.where(violating, 1.0, 0.0)
    grad[:, 3, 0] = np.where(violating, -1.0, 0.0)
    return grad


"""
Assignment
"""


def _optimal_total(values, rows, cols):
    if not rows:
        return []
    sub = values[np.ix_(rows, cols)]
    row_ind, col_ind = linear_sum_assignment(sub)
    return [sub[r, c] for r, c in zip(row_ind, col_ind)]


def hungarian(cost) -> Assignment:
    """
    Minimum-cost assignment of rows to columns. Among optimal assignments the
    lexicographically smallest permutation is returned.
    """
    cost = cost if isinstance(cost, CostMatrix) else CostMatrix(cost)
    values = cost.values
    n = cost.size
    optimum = math.fsum(_optimal_total(values, list(range(n)), list(range(n))))
    tolerance = ASSIGNMENT_TIE_TOLERANCE * (1.0 + abs(optimum))

    chosen = []
    prefix = []
    remaining = list(range(n))
    for row in range(n):
        later_rows = list(range(row + 1, n))
        best_col, best_total = None, None
        for col in remaining:
            others = [c for c in remaining if c != col]
            total = math.fsum(prefix + [values[row, col]] + _optimal_total(values, later_rows, others))
            if total <= optimum + tolerance:
                best_col = col
                break
            if best_total is None or total < best_total:
                best_col, best_total = col, total
        else:
            logger.warning(
                "No column for row {} reaches the optimal assignment cost {!r} within tolerance; "
                "using the cheapest completion {!r}".format(row, optimum, best_total))
        chosen.append(best_col)
        prefix.append(values[row, best_col])
        remaining.remove(best_col)

    return Assignment(tuple(chosen), cost.total(chosen))


"""
Guidance loss
"""


def stroke_l1(a: Stroke, b: Stroke, include_width=False):
    """
    L1 distance over the 8 control-point coordinates and the color channels,
    plus the width when ``include_width`` is set.
    """
    if a.channels != b.channels:
        raise ShapeMismatchError("strokes have {} and {} color channels".format(a.channels, b.channels))
    terms = list(np.abs(a.control_points - b.control_points).ravel()) + list(np.abs(a.color - b.color))
    if include_width:
        terms.append(abs(a.width - b.width))
    return math.fsum(terms)


def guidance_cost_matrix(pred: StrokeSet, gt: StrokeSet, include_width=False) -> CostMatrix:
    """
    ``cost[i][j] = stroke_l1(gt[i], pred[j])``
    """
    if len(pred) != len(gt):
        raise ShapeMismatchError("cannot match {} predicted strokes to {} guidance strokes".format(len(pred), len(gt)))
    return CostMatrix([[stroke_l1(g, p, include_width) for p in pred] for g in gt])


def guidance_loss(pred, gt, include_width=False) -> Tuple[float, Assignment]:
    """
    Permutation-invariant distance between two stroke sets: the minimum over
    matchings of the summed stroke_l1 costs. ``assignment.permutation[i]`` is
    the index in ``pred`` matched to ``gt[i]``.
    """
    pred, gt = as_stroke_set(pred), as_stroke_set(gt)
    assignment = hungarian(guidance_cost_matrix(pred, gt, include_width))
    return assignment.total_cost, assignment


"""
Augmentation
"""


def sample_similarity_maps(metric: MetricSpec, canvas: CanvasSpec, seed, step=0):
    """
    ``metric.augment_samples`` random similarity maps drawn from a Philox stream
    keyed on ``(seed, step)``.
    """
    ranges = metric.augment_ranges
    rng = np.random.Generator(np.random.Philox([int(seed), int(step)]))
    maps = []
    for _ in range(metric.augment_samples):
        degrees = rng.uniform(*ranges.rotation_degrees)
        scale = rng.uniform(*ranges.scale)
        dx = rng.uniform(*ranges.translation)
        dy = rng.uniform(*ranges.translation)
        if ranges.pixel_snap:
            dx = 2.0 * np.rint(dx * canvas.width / 2.0) / canvas.width
            dy = 2.0 * np.rint(dy * canvas.height / 2.0) / canvas.height
        maps.append(AffineMap.similarity(degrees, scale, dx, dy))
    return maps


def _check_target(target: Image, canvas: CanvasSpec):
    if target.canvas.shape != canvas.shape:
        raise CanvasMismatchError(
            "target image has shape {} but the canvas is {}".format(target.canvas.shape, canvas.shape))


def augmented_loss(metric: MetricSpec, image: Image, strokes, canvas: CanvasSpec, config: Optional[RenderConfig] = None,
                   rng_seed=0, step=0, workers=None):
    """
    Average of the metric over random similarity maps applied to both the image
    and the strokes; the plain metric when ``metric.augment_samples`` is 0.
    """
    config = config or RenderConfig()
    strokes = as_stroke_set(strokes)
    strokes.check_canvas(canvas)
    _check_target(image, canvas)

    def value(target, stroke_set):
        sketch = render_arrays(stroke_set.control_points, stroke_set.colors, stroke_set.widths, canvas, config, workers)
        return evaluate_metric(metric, target, sketch)

    if metric.augment_samples == 0:
        return value(image, strokes)
    values = []
    for affine in sample_similarity_maps(metric, canvas, rng_seed, step):
        target = transform_image(image, ImageTransformSpec.for_canvas(affine, canvas))
        values.append(value(target, apply_affine_strokes(affine, strokes)))
    return math.fsum(values) / len(values)


def _metric_and_grad(metric, target_pixels, control_points, colors, widths, canvas, config, workers):
    losses = []

    def adjoint(pixels):
        losses.append(evaluate_metric(metric, target_pixels, pixels))
        return metric_adjoint(metric, target_pixels, pixels)

    _, d_cp, d_colors, d_widths = render_and_backward(
        control_points, colors, widths, canvas, config, adjoint, workers)
    return losses[0], d_cp, d_colors, d_widths


def augmented_loss_and_grad(metric: MetricSpec, target: Image, control_points, colors, widths, canvas: CanvasSpec,
                            config: RenderConfig, seed=0, step=0, workers=None):
    """
    augmented_loss on raw parameter arrays together with its gradient.
    Returns ``(loss, d_control_points, d_colors, d_widths)``.
    """
    _check_target(target, canvas)
    control_points = np.asarray(control_points, dtype=np.float64)
    colors = np.asarray(colors, dtype=np.float64)
    widths = np.asarray(widths, dtype=np.float64)
    if metric.augment_samples == 0:
        return _metric_and_grad(metric, target.pixels, control_points, colors, widths, canvas, config, workers)

    losses = []
    d_cp = np.zeros_like(control_points)
    d_colors = np.zeros_like(colors)
    d_widths = np.zeros_like(widths)
    for affine in sample_similarity_maps(metric, canvas, seed, step):
        moved_target = transform_image(target, ImageTransformSpec.for_canvas(affine, canvas))
        scale = affine.similarity_scale
        loss, g_cp, g_colors, g_widths = _metric_and_grad(
            metric, moved_target.pixels, affine.apply(control_points), colors, widths * scale, canvas, config, workers)
        losses.append(loss)
        # pull the gradient back through p -> A p + t and w -> s w
        d_cp = d_cp + g_cp @ affine.linear
        d_colors = d_colors + g_colors
        d_widths = d_widths + g_widths * scale
    count = len(losses)
    return math.fsum(losses) / count, d_cp / count, d_colors / count, d_widths / count
