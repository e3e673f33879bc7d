# -*- coding: utf-8 -*-
"""
Executable properties of the renderer, its gradients, the losses and the
optimizer, run by ./manage.py strokefit_verify.

Every property draws its corpus from a Philox stream keyed on the run seed
and the property name, measures a defect and compares it with a threshold;
a property passes when ``measured <= threshold``. Informational properties
are reported but never fail a run.
"""

import functools
import itertools
import math
import zlib
from collections import OrderedDict
from decimal import Decimal, getcontext
from typing import NamedTuple

import numpy as np
from texttable import Texttable

from django_strokefit import get_logger
from django_strokefit.equivariance import check_loss_condition, check_render_equivariance, loss_condition_ratio
from django_strokefit.exceptions import InvalidConfigError
from django_strokefit.geometry import (
    AffineMap, CanvasSpec, Image, Point, StrokeSet, apply_affine_point, apply_affine_stroke, stroke_distance
)
from django_strokefit.gradients import (
    finite_diff_grad, gradient_relative_error, non_smooth_mask, render_with_grad
)
from django_strokefit.initialization import InitConfig, SaliencyMap, adjust_color, greedy_init
from django_strokefit.losses import (
    AugmentRanges, MetricSpec, align_penalty, augmented_loss, boundary_penalty, guidance_loss, hungarian,
    l1_image_loss, stroke_l1
)
from django_strokefit.optimizer import AdamState, OptimizeConfig, adam_step, optimize
from django_strokefit.rasterizer import (
    COMPOSITION_COLOR_REPLACE, RenderConfig, composite_fields, max_abs_difference, render
)
from django_strokefit.transforms import ImageTransformSpec, transform_image
from django_strokefit.utils.multiprocessing_utils import USE_ALL_WORKERS, StrokefitMultiProcess, Timer

logger = get_logger()

REPORT_VERSION = 1

GROUPS = (
    'geometry', 'rasterizer', 'gradients', 'hungarian', 'guidance', 'losses', 'equivariance', 'init', 'optimizer',
    'recovery',
)


class PropertyResult(NamedTuple):
    name: str
    group: str
    measured: float
    threshold: float
    passed: bool
    informational: bool
    detail: str

    def to_dict(self):
        return {
            'name': self.name,
            'group': self.group,
            'measured': _json_number(self.measured),
            'threshold': _json_number(self.threshold),
            'passed': self.passed,
            'informational': self.informational,
            'detail': self.detail,
        }


def _json_number(value):
    value = float(value)
    return value if math.isfinite(value) else repr(value)


class Property(NamedTuple):
    name: str
    group: str
    func: object
    informational: bool


PROPERTIES = OrderedDict()


def register(group, informational=False):
    """
    Register ``func(rng, quick) -> (measured, threshold, detail)`` as ``<group>.<name>``.
    """
    def decorator(func):
        name = '{}.{}'.format(group, func.__name__.lstrip('_'))
        PROPERTIES[name] = Property(name, group, func, informational)
        return func
    return decorator


def property_rng(seed, name):
    return np.random.Generator(np.random.Philox([int(seed), zlib.crc32(name.encode('utf-8'))]))


"""
Corpus builders
"""


def random_strokes(rng, n, channels=1, spread=0.5, width_range=(0.05, 0.12), dyadic=False):
    """
    A random stroke set. ``dyadic`` scenes have control points on odd multiples
    of 1/64, never on a half pixel of a 32 x 32 canvas, so whole-pixel moves and
    quarter turns of such canvases are exact.
    """
    if dyadic:
        control_points = (2 * rng.integers(-16, 16, size=(n, 4, 2)) + 1) / 64.0
        widths = rng.integers(4, 9, size=n) / 64.0
    else:
        anchors = rng.uniform(-spread, spread, size=(n, 1, 2))
        control_points = anchors + rng.normal(0.0, 0.25, size=(n, 4, 2))
        widths = rng.uniform(width_range[0], width_range[1], size=n)
    colors = rng.uniform(0.1, 0.9, size=(n, channels))
    return StrokeSet.from_arrays(control_points, colors, widths)


def arc_strokes(rng, channels=1):
    """
    Four clearly curved strokes, one per quadrant of the canvas, each a cubic
    fitted to a circular arc of 130 to 170 degrees. No two strokes overlap.
    """
    control_points = []
    for cx, cy in ((-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)):
        center = np.array([cx, cy]) + rng.uniform(-0.05, 0.05, size=2)
        radius = rng.uniform(0.16, 0.22)
        start = rng.uniform(0.0, 2.0 * math.pi)
        sweep = math.radians(rng.uniform(130.0, 170.0))
        handle = 4.0 / 3.0 * math.tan(sweep / 4.0) * radius
        a, b = start, start + sweep
        t1 = center + radius * np.array([math.cos(a), math.sin(a)])
        t4 = center + radius * np.array([math.cos(b), math.sin(b)])
        t2 = t1 + handle * np.array([-math.sin(a), math.cos(a)])
        t3 = t4 - handle * np.array([-math.sin(b), math.cos(b)])
        control_points.append([t1, t2, t3, t4])
    colors = rng.uniform(0.1, 0.4, size=(4, channels))
    widths = rng.uniform(0.07, 0.1, size=4)
    return StrokeSet.from_arrays(control_points, colors, widths)


def matched_control_point_error(recovered, truth):
    """
    Largest control point error after matching recovered strokes to the truth
    with ``hungarian``; each pair is compared in whichever direction is closer.
    """
    costs = [
        [min(float(np.max(np.abs(r.control_points - t.control_points))),
             float(np.max(np.abs(r.reversed().control_points - t.control_points))))
         for t in truth]
        for r in recovered
    ]
    assignment = hungarian(costs)
    return max(costs[i][j] for i, j in enumerate(assignment.permutation))


def random_cost_matrix(rng, n, ties=False):
    if ties:
        return rng.integers(0, 4, size=(n, n)).astype(np.float64)
    return rng.uniform(0.0, 10.0, size=(n, n))


def brute_force_assignment(values):
    """
    Lexicographically first permutation of minimal ``fsum`` cost.
    """
    values = np.asarray(values)
    n = values.shape[0]
    best, best_cost = None, None
    for permutation in itertools.permutations(range(n)):
        cost = math.fsum(values[i, j] for i, j in enumerate(permutation))
        if best_cost is None or cost < best_cost:
            best, best_cost = permutation, cost
    return best, best_cost


"""
geometry
"""


@register('geometry')
def _closest_point_oracle(rng, quick):
    samples = np.linspace(0.0, 1.0, 10000 if quick else 100000)
    worst = 0.0
    for _ in range(5 if quick else 20):
        stroke = random_strokes(rng, 1)[0]
        basis = np.stack([(1 - samples) ** 3, 3 * samples * (1 - samples) ** 2, 3 * samples ** 2 * (1 - samples),
                          samples ** 3], axis=-1)
        curve = basis @ stroke.control_points
        for px, py in rng.uniform(-1.0, 1.0, size=(20, 2)):
            distance, _ = stroke_distance(stroke, Point(px, py))
            dense = float(np.min(np.hypot(curve[:, 0] - px, curve[:, 1] - py)))
            worst = max(worst, distance - dense)
    return worst, 1e-4, "closest-point distance minus dense-sampling distance"


@register('geometry')
def _reversal_symmetry(rng, quick):
    worst = 0.0
    for _ in range(10 if quick else 50):
        stroke = random_strokes(rng, 1)[0]
        point = Point(*rng.uniform(-1.0, 1.0, size=2))
        worst = max(worst, abs(stroke_distance(stroke, point)[0] - stroke_distance(stroke.reversed(), point)[0]))
    return worst, 1e-12, "distance difference after reversing t1..t4"


@register('geometry')
def _isometry_invariance(rng, quick):
    worst = 0.0
    for _ in range(10 if quick else 50):
        stroke = random_strokes(rng, 1)[0]
        point = Point(*rng.uniform(-1.0, 1.0, size=2))
        isometry = AffineMap.similarity(rng.uniform(-180.0, 180.0), 1.0, *rng.uniform(-0.5, 0.5, size=2))
        moved = stroke_distance(apply_affine_stroke(isometry, stroke), apply_affine_point(isometry, point))[0]
        worst = max(worst, abs(moved - stroke_distance(stroke, point)[0]))
    return worst, 1e-10, "distance change under rigid motions"


@register('geometry')
def _affine_homomorphism(rng, quick):
    worst = 0.0
    for _ in range(10 if quick else 50):
        stroke = random_strokes(rng, 1)[0]
        a = AffineMap.similarity(rng.uniform(-180.0, 180.0), rng.uniform(0.5, 1.5), *rng.normal(0.0, 0.3, size=2))
        b = AffineMap.similarity(rng.uniform(-90.0, 90.0), rng.uniform(0.5, 1.5), *rng.normal(0.0, 0.3, size=2))
        composed = apply_affine_stroke(a.compose(b), stroke)
        stepwise = apply_affine_stroke(a, apply_affine_stroke(b, stroke))
        worst = max(worst, float(np.max(np.abs(composed.control_points - stepwise.control_points))),
                    abs(composed.width - stepwise.width))
    return worst, 1e-12, "stroke difference between (a o b) p and a (b p) for similarities"


"""
rasterizer
"""


@register('rasterizer')
def _composition_hand_cases(rng, quick):
    white, black = np.ones(1), np.zeros(1)
    cases = [
        (composite_fields([[[0.6]]], [[1.0]], white, COMPOSITION_COLOR_REPLACE).raw, 1.0),
        (composite_fields([[[0.6]]], [[1.0]], black, COMPOSITION_COLOR_REPLACE).raw, 0.6),
        (composite_fields([[[0.6]], [[0.8]]], [[1.0], [0.5]], black, COMPOSITION_COLOR_REPLACE).raw, 0.76),
    ]
    worst = max(abs(float(raw.ravel()[0]) - expected) for raw, expected in cases)
    return worst, 1e-12, "single stroke over white/black and the two-stroke color-replace case"


@register('rasterizer')
def _occlusion(rng, quick):
    canvas = CanvasSpec(32, 32)
    y = canvas.row_centers()[16]
    line = [[-0.5, y], [-1.0 / 6.0, y], [1.0 / 6.0, y], [0.5, y]]
    worst = 0.0
    for _ in range(5 if quick else 20):
        top, below = rng.uniform(0.0, 1.0, size=2)
        lower = random_strokes(rng, 1)[0]
        strokes = StrokeSet.from_arrays([line, lower.control_points], [[top], [below]], [0.1, lower.width])
        pixel = render(strokes, canvas, RenderConfig(), workers=1).pixels[16, 16, 0]
        worst = max(worst, abs(pixel - top))
    return worst, 1e-5, "pixel under a full-intensity top stroke minus its color"


@register('rasterizer')
def _thread_determinism(rng, quick):
    canvas = CanvasSpec(48, 40, 3, 'toroidal')
    worst = 0.0
    for _ in range(2 if quick else 5):
        strokes = random_strokes(rng, 5, channels=3)
        serial = render(strokes, canvas, RenderConfig(), workers=1)
        threaded = render(strokes, canvas, RenderConfig(), workers=4)
        worst = max(worst, max_abs_difference(serial, threaded))
    return worst, 0.0, "difference between 1-thread and 4-thread renders"


@register('rasterizer')
def _anneal_continuity(rng, quick):
    canvas = CanvasSpec(32, 32)
    worst = 0.0
    for _ in range(3 if quick else 10):
        strokes = random_strokes(rng, 3)
        tau = rng.uniform(0.0, 0.99)
        a = render(strokes, canvas, RenderConfig(anneal_tau=tau))
        b = render(strokes, canvas, RenderConfig(anneal_tau=tau + 0.01))
        worst = max(worst, max_abs_difference(a, b))
    return worst, 0.1, "render change for a 0.01 step of the annealing parameter"


"""
gradients
"""


@register('gradients')
def _finite_difference(rng, quick):
    size = 16 if quick else 32
    canvas = CanvasSpec(size, size)
    config = RenderConfig(anneal_tau=1.0)
    worst = 0.0
    for _ in range(10 if quick else 100):
        strokes = random_strokes(rng, 3, width_range=(0.08, 0.2))
        adjoint = rng.normal(0.0, 1.0, size=canvas.shape)
        adjoint[non_smooth_mask(strokes, canvas, config)] = 0.0
        _, analytic = render_with_grad(strokes, canvas, config, adjoint)
        numeric = finite_diff_grad(strokes, canvas, config, adjoint, h=1e-4)
        worst = max(worst, gradient_relative_error(analytic, numeric))
    return worst, 1e-3, "relative error of analytic against central-difference gradients"


@register('gradients')
def _adjoint_linearity(rng, quick):
    canvas = CanvasSpec(16, 16, 3)
    worst = 0.0
    for _ in range(3 if quick else 10):
        strokes = random_strokes(rng, 3, channels=3)
        first = rng.normal(size=canvas.shape)
        second = rng.normal(size=canvas.shape)
        a, b = rng.normal(size=2)
        _, combined = render_with_grad(strokes, canvas, RenderConfig(), a * first + b * second)
        _, g1 = render_with_grad(strokes, canvas, RenderConfig(), first)
        _, g2 = render_with_grad(strokes, canvas, RenderConfig(), second)
        expected = np.concatenate([a * x.as_array() + b * y.as_array() for x, y in zip(g1, g2)])
        worst = max(worst, gradient_relative_error(combined, expected))
    return worst, 1e-10, "relative deviation from linearity in the pixel adjoint"


"""
hungarian and guidance
"""


@register('hungarian')
def _brute_force(rng, quick):
    mismatches = 0
    count = 40 if quick else 200
    for index in range(count):
        n = int(rng.integers(1, 6 if quick else 8))
        values = random_cost_matrix(rng, n, ties=index % 4 == 0)
        expected, expected_cost = brute_force_assignment(values)
        assignment = hungarian(values)
        if assignment.permutation != expected or assignment.total_cost != expected_cost:
            mismatches += 1
    return mismatches, 0, "matrices where the assignment differs from exhaustive enumeration ({} tried)".format(count)


@register('hungarian')
def _identity_bound(rng, quick):
    violations = 0
    for _ in range(20 if quick else 100):
        values = random_cost_matrix(rng, int(rng.integers(1, 10)))
        if hungarian(values).total_cost > math.fsum(np.diag(values)):
            violations += 1
    return violations, 0, "matrices whose optimum exceeds the identity assignment"


@register('guidance')
def _enumeration_oracle(rng, quick):
    mismatches = 0
    count = 20 if quick else 100
    for _ in range(count):
        n = int(rng.integers(1, 6))
        pred, gt = random_strokes(rng, n), random_strokes(rng, n)
        loss, _ = guidance_loss(pred, gt)
        _, expected = brute_force_assignment([[stroke_l1(g, p) for p in pred] for g in gt])
        if loss != expected:
            mismatches += 1
    return mismatches, 0, "stroke-set pairs where the guidance loss differs from enumeration ({} tried)".format(count)


@register('guidance')
def _permutation_invariance(rng, quick):
    violations = 0
    for _ in range(20 if quick else 100):
        n = int(rng.integers(1, 8))
        pred, gt = random_strokes(rng, n), random_strokes(rng, n)
        shuffled = pred.permuted([int(i) for i in rng.permutation(n)])
        if guidance_loss(shuffled, gt)[0] != guidance_loss(pred, gt)[0]:
            violations += 1
    return violations, 0, "permutations that change the guidance loss"


@register('guidance')
def _symmetry(rng, quick):
    violations = 0
    for _ in range(20 if quick else 100):
        n = int(rng.integers(1, 8))
        a, b = random_strokes(rng, n), random_strokes(rng, n)
        if guidance_loss(a, b)[0] != guidance_loss(b, a)[0]:
            violations += 1
    return violations, 0, "pairs where swapping the arguments changes the guidance loss"


"""
losses
"""


@register('losses')
def _closed_forms(rng, quick):
    def one(points):
        return StrokeSet.from_arrays([points], [[0.0]], [0.05])

    def two(first, second):
        return StrokeSet.from_arrays([first, second], [[0.0], [0.0]], [0.05, 0.05])

    inside = [[-0.5, 0.0], [0.0, 0.5], [0.5, 0.0], [0.9, -0.9]]
    canvas = CanvasSpec(2, 2)
    cases = [
        (boundary_penalty(one(inside)), 0.0),
        (boundary_penalty(one([[1.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]])), 0.5),
        (boundary_penalty(one([[1.5, 0.0], [0.0, -2.0], [0.0, 0.0], [0.5, 0.0]])), 1.5),
        (align_penalty(one([[-0.3, 0.0], [0.0, 0.0], [0.0, 0.0], [0.2, 0.0]])), 0.0),
        (align_penalty(one([[0.2, 0.0], [0.0, 0.0], [0.0, 0.0], [-0.3, 0.0]])), 0.5),
        (align_penalty(two([[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
                           [[0.1, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])), 0.6),
        (l1_image_loss(Image.filled(canvas, 0.0), Image.filled(canvas, 1.0)), 1.0),
        (l1_image_loss(Image(canvas, [[0.0, 0.5], [1.0, 0.5]]), Image(canvas, [[0.5, 0.5], [0.5, 0.5]])), 0.25),
    ]
    worst = max(abs(value - expected) for value, expected in cases)
    return worst, 0.0, "deviation from hand-computed penalty and L1 values"


@register('losses')
def _augmented_isometry(rng, quick):
    canvas = CanvasSpec(32, 32, 1, 'toroidal')
    metric = MetricSpec(augment_samples=4, augment_ranges=AugmentRanges.isometries())
    worst = 0.0
    for _ in range(2 if quick else 5):
        strokes = random_strokes(rng, 4, width_range=(0.08, 0.15))
        image = render(strokes, canvas)
        worst = max(worst, augmented_loss(metric, image, strokes, canvas, rng_seed=int(rng.integers(2 ** 31))))
    return worst, 5e-2, "augmented L1 of a sketch against its own render under random rigid motions"


"""
equivariance
"""


@register('equivariance')
def _integer_translation(rng, quick):
    canvas = CanvasSpec(32, 32, 1, 'toroidal')
    worst = 0.0
    for _ in range(10 if quick else 50):
        strokes = random_strokes(rng, 3, dyadic=True)
        cols, rows = (int(v) for v in rng.integers(-32, 33, size=2))
        worst = max(worst, check_render_equivariance(strokes, AffineMap.pixel_translation(canvas, cols, rows), canvas))
    return worst, 0.0, "render defect for whole-pixel translations on a toroidal canvas"


@register('equivariance')
def _quarter_turn(rng, quick):
    canvas = CanvasSpec(32, 32, 1, 'toroidal')
    worst = 0.0
    for _ in range(10 if quick else 50):
        strokes = random_strokes(rng, 3, dyadic=True)
        turn = AffineMap.quarter_turn(int(rng.integers(1, 4)))
        worst = max(worst, check_render_equivariance(strokes, turn, canvas))
    return worst, 0.0, "render defect for quarter turns of a square toroidal canvas"


@register('equivariance')
def _similarity(rng, quick):
    size = 64 if quick else 128
    canvas = CanvasSpec(size, size, 1, 'toroidal')
    worst = 0.0
    for _ in range(5 if quick else 50):
        strokes = random_strokes(rng, 3, width_range=(0.05, 0.1))
        affine = AffineMap.similarity(rng.uniform(-180.0, 180.0), rng.uniform(0.9, 1.1), *rng.uniform(-0.3, 0.3, 2))
        worst = max(worst, check_render_equivariance(strokes, affine, canvas))
    return worst, 0.05, "render defect for arbitrary similarities with bilinear resampling"


@register('equivariance')
def _group_law(rng, quick):
    canvas = CanvasSpec(16, 16, 3, 'toroidal')
    worst = 0.0
    for _ in range(10 if quick else 50):
        image = Image(canvas, rng.uniform(0.0, 1.0, size=canvas.shape))
        a = AffineMap.pixel_translation(canvas, *(int(v) for v in rng.integers(-16, 17, size=2)))
        b = AffineMap.quarter_turn(int(rng.integers(0, 4)))
        stepwise = transform_image(transform_image(image, ImageTransformSpec.for_canvas(b, canvas)),
                                   ImageTransformSpec.for_canvas(a, canvas))
        composed = transform_image(image, ImageTransformSpec.for_canvas(a.compose(b), canvas))
        worst = max(worst, max_abs_difference(stepwise, composed))
    return worst, 0.0, "difference between a (b I) and (a o b) I for pixel permutations"


@register('equivariance')
def _loss_condition(rng, quick):
    canvas = CanvasSpec(32, 32, 1, 'toroidal')
    metric = MetricSpec()
    worst = 0.0
    for _ in range(5 if quick else 20):
        strokes = random_strokes(rng, 3, dyadic=True)
        image = Image(canvas, rng.uniform(0.0, 1.0, size=canvas.shape))
        for affine in (AffineMap.pixel_translation(canvas, *(int(v) for v in rng.integers(-32, 33, size=2))),
                       AffineMap.quarter_turn(int(rng.integers(1, 4)))):
            moved, base = check_loss_condition(metric, image, strokes, affine, canvas)
            worst = max(worst, abs(loss_condition_ratio(moved, base) - 1.0))
    return worst, 1e-12, "deviation of L(gI, gS) / L(I, S) from 1 for pixel permutations"


@register('equivariance', informational=True)
def _general_affine_ratio(rng, quick):
    canvas = CanvasSpec(64, 64, 1, 'toroidal')
    metric = MetricSpec()
    ratios = []
    for _ in range(3 if quick else 10):
        strokes = random_strokes(rng, 3)
        image = Image(canvas, rng.uniform(0.0, 1.0, size=canvas.shape))
        shear = AffineMap([[1.0, rng.uniform(0.1, 0.3)], [0.0, 1.0]])
        ratios.append(loss_condition_ratio(*check_loss_condition(metric, image, strokes, shear, canvas)))
    spread = max(ratios) - min(ratios)
    return spread, 0.05, "spread of L(gI, gS) / L(I, S) across inputs for shears: {}".format(
        ', '.join('{:.4f}'.format(r) for r in ratios))


"""
init
"""


def _logistic(x):
    return 1 / (1 + (-x).exp())


@register('init')
def _adjust_color(rng, quick):
    getcontext().prec = 50
    beta = Decimal(5)
    c = Decimal('0.75')
    exact = (_logistic((2 * c - 1) * beta) - _logistic(-beta)) / (_logistic(beta) - _logistic(-beta))
    deviations = [
        abs(float(adjust_color(0.75, 5.0)) - float(exact)),
        abs(float(adjust_color(0.0, 5.0)) - 0.0),
        abs(float(adjust_color(0.5, 5.0)) - 0.5),
        abs(float(adjust_color(1.0, 5.0)) - 1.0),
    ]
    values = adjust_color(np.linspace(0.0, 1.0, 1001), float(rng.uniform(0.5, 10.0)))
    monotone_violations = int(np.sum(np.diff(values) <= 0.0))
    return max(deviations) + monotone_violations, 1e-9, "closed-form deviation plus monotonicity violations"


@register('init')
def _determinism(rng, quick):
    canvas = CanvasSpec(32, 32, 3)
    differences = 0
    for _ in range(2 if quick else 5):
        image = Image(canvas, rng.uniform(0.0, 1.0, size=canvas.shape))
        saliency = SaliencyMap.for_image(image, rng.uniform(0.0, 1.0, size=(32, 32)))
        cfg = InitConfig(n_strokes=8, seed=int(rng.integers(2 ** 31)))
        first = greedy_init(saliency, image, cfg)
        second = greedy_init(saliency, image, cfg)
        if first.strokes != second.strokes or np.any(first.saliency.weights < 0.0):
            differences += 1
    return differences, 0, "repeated initializations that differ or leave negative saliency"


"""
optimizer
"""


@register('optimizer')
def _adam_quadratic(rng, quick):
    state = AdamState(lr=0.1)
    x = np.array([1.0])
    for _ in range(100):
        x = adam_step(state, x, 2.0 * x)
    return float(abs(x[0])), 0.1, "|x| after 100 Adam steps on x^2 from x = 1"


@register('optimizer')
def _fixed_point(rng, quick):
    canvas = CanvasSpec(24, 24)
    strokes = random_strokes(rng, 3, spread=0.3)
    cfg = OptimizeConfig(iterations=10 if quick else 50, lr=0.05, anneal=False, lambda_p=0.0)
    target = render(strokes, canvas)
    trace = optimize(target, strokes, cfg)
    change = float(np.max(np.abs(trace.final.strokes.control_points - strokes.control_points)))
    return max(change, max(entry.loss for entry in trace.entries)), 1e-8, \
        "parameter change and loss when the target is the render of the initial strokes"


@register('optimizer')
def _penalty_efficacy(rng, quick):
    canvas = CanvasSpec(8, 8)
    points = [[0.0, 0.2], [0.3, 0.1], [0.6, -0.1], [1.5, 0.0]]
    strokes = StrokeSet.from_arrays([points], [[0.0]], [0.05])
    cfg = OptimizeConfig(iterations=500, lr=0.01, metric_weight=0.0, lambda_p=0.1)
    trace = optimize(Image.filled(canvas), strokes, cfg)
    return boundary_penalty(trace.final.strokes), 1e-3, "boundary penalty after 500 penalty-only steps"


"""
recovery
"""


# the learning rate falls to this fraction of its starting value by the last step
RECOVERY_LR_FLOOR = 0.01


@register('recovery')
def _synthetic(rng, quick):
    size = 48 if quick else 64
    iterations = 1000 if quick else 2000
    runs = 1 if quick else 10
    canvas = CanvasSpec(size, size)
    cfg = OptimizeConfig(iterations=iterations, lr=0.05, lr_decay=RECOVERY_LR_FLOOR ** (1.0 / iterations),
                         lambda_p=0.0, anneal=False)
    failures = 0
    details = []
    for _ in range(runs):
        truth = arc_strokes(rng)
        target = render(truth, canvas)
        perturbed = StrokeSet.from_arrays(
            truth.control_points + rng.normal(0.0, 0.1, size=truth.control_points.shape), truth.colors, truth.widths)
        trace = optimize(target, perturbed, cfg)
        error = matched_control_point_error(trace.final.strokes, truth)
        ok = trace.final.loss < 0.02 and error < 0.05
        failures += 0 if ok else 1
        details.append('loss {:.4f} / error {:.3f}'.format(trace.final.loss, error))
    return failures / runs, 0.2, "fraction of runs missing loss < 0.02 and control points within 0.05: {}".format(
        '; '.join(details))


"""
Running
"""


def select_properties(filter_=None):
    if not filter_:
        return list(PROPERTIES.values())
    selected = [
        prop for prop in PROPERTIES.values()
        if prop.name == filter_ or prop.group == filter_ or prop.name.startswith(filter_ + '.')
    ]
    if not selected:
        raise InvalidConfigError("no property or group matches {!r}; groups are {}".format(filter_, ', '.join(GROUPS)))
    return selected


def run_property(name, seed=0, quick=False):
    prop = PROPERTIES[name]
    timer = Timer()
    try:
        measured, threshold, detail = prop.func(property_rng(seed, name), quick)
        measured, threshold = float(measured), float(threshold)
        passed = measured <= threshold
    except Exception as exc:
        logger.exception("Property {} raised".format(name))
        measured, threshold, passed = float('nan'), float('nan'), False
        detail = "raised {}: {}".format(type(exc).__name__, exc)
    logger.debug("{} {} in {:.2f}s: measured {!r} threshold {!r}".format(
        name, 'passed' if passed else 'FAILED', timer.done(), measured, threshold))
    return PropertyResult(name, prop.group, measured, threshold, passed, prop.informational, detail)


def run_properties(filter_=None, seed=0, quick=False, workers=1):
    """
    Run the selected properties and return the report dict. With more than one
    worker, properties run in separate processes; results keep registry order.
    """
    selected = select_properties(filter_)
    names = [prop.name for prop in selected]
    job = functools.partial(run_property, seed=seed, quick=quick)
    if workers is not None and (workers > 1 or workers == USE_ALL_WORKERS) and len(names) > 1:
        with StrokefitMultiProcess(workers) as pool:
            pool.map(job, names)
            results = pool.results()
        results = [
            result if result is not None else PropertyResult(
                name, PROPERTIES[name].group, float('nan'), float('nan'), False, PROPERTIES[name].informational,
                "worker returned no result")
            for name, result in zip(names, results)
        ]
    else:
        results = [job(name) for name in names]

    passed = all(result.passed for result in results if not result.informational)
    return {
        'version': REPORT_VERSION,
        'seed': seed,
        'filter': filter_,
        'quick': quick,
        'properties': [result.to_dict() for result in results],
        'passed': passed,
    }


"""
Data model for a row of the summary table printed by ./manage.py strokefit_verify
"""
ReportRow = NamedTuple(
    'ReportRow', [
        ('name', str),
        ('result', str),
        ('measured', str),
        ('threshold', str),
    ]
)


def _result_label(prop):
    if prop['informational']:
        return 'info'
    return 'pass' if prop['passed'] else 'FAIL'


def report_table(report):
    table = Texttable(max_width=100)
    table.header(["Property", "Result", "Measured", "Threshold"])
    table.set_cols_width([40, 6, 22, 22])
    table.set_cols_dtype(['t', 't', 't', 't'])
    for prop in report['properties']:
        row = ReportRow(prop['name'], _result_label(prop), str(prop['measured']), str(prop['threshold']))
        table.add_row(row)
    return table.draw()
