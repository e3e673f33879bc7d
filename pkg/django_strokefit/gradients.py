# -*- coding: utf-8 -*-
"""
Reverse-mode gradients of ``sum(adjoint * render(strokes))`` with respect to
every stroke parameter, and a central-difference oracle to check them.

The closest-curve parameter s* is held fixed while differentiating (its
first-order effect vanishes at a minimum). At pixels lying exactly on a curve
the distance gradient is taken as zero, and clamped intensities pass no gradient.
"""

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from django_strokefit.exceptions import InvalidConfigError, ShapeMismatchError
from django_strokefit.geometry import CanvasSpec, Image, StrokeSet, bernstein_basis, closest_point_gap
from django_strokefit.rasterizer import (
    COMPOSITION_OVER, RenderConfig, StrokeFieldEvaluator, as_stroke_set, composite_fields, downsample,
    effective_width, render_arrays, sampling_canvas
)
from django_strokefit.utils.multiprocessing_utils import map_row_bands, row_bands


@dataclass(frozen=True, eq=False)
class StrokeGrad:
    d_control_points: np.ndarray = field(repr=False)
    d_color: np.ndarray = field(repr=False)
    d_width: float = 0.0

    def as_array(self):
        return np.concatenate([np.ravel(self.d_control_points), np.ravel(self.d_color), [self.d_width]])


def grads_to_arrays(grads: Sequence[StrokeGrad]):
    return (
        np.stack([g.d_control_points for g in grads]),
        np.stack([g.d_color for g in grads]),
        np.array([g.d_width for g in grads], dtype=np.float64),
    )


def grads_from_arrays(d_control_points, d_colors, d_widths) -> List[StrokeGrad]:
    return [
        StrokeGrad(np.array(cp), np.array(color), float(width))
        for cp, color, width in zip(d_control_points, d_colors, d_widths)
    ]


def adjoint_array(pixel_adjoint, canvas: CanvasSpec):
    """
    Accept an Image, an ``(H, W, C)`` array, or ``(H, W)`` for one channel.
    """
    adjoint = pixel_adjoint.pixels if isinstance(pixel_adjoint, Image) else np.asarray(pixel_adjoint, dtype=np.float64)
    if adjoint.ndim == 2 and canvas.channels == 1:
        adjoint = adjoint[:, :, np.newaxis]
    if adjoint.shape != canvas.shape:
        raise ShapeMismatchError(
            "pixel adjoint has shape {} but the canvas is {}".format(adjoint.shape, canvas.shape))
    return adjoint


def render_and_backward(control_points, colors, widths, canvas, config, adjoint, workers=None):
    """
    Render raw parameter arrays and pull ``adjoint`` back onto them.

    ``adjoint`` is an ``(H, W, C)`` array, or a callable that receives the
    rendered ``(H, W, C)`` pixels and returns one; loss functions use the
    latter so that a step renders only once.

    Returns ``(pixels, d_control_points, d_colors, d_widths)``. Per-band partial
    gradients are summed in band order, so the result does not depend on ``workers``.
    """
    control_points = np.asarray(control_points, dtype=np.float64)
    colors = np.asarray(colors, dtype=np.float64)
    widths = np.asarray(widths, dtype=np.float64)
    k = config.supersample
    fine = sampling_canvas(canvas, config)
    bands = row_bands(fine.height)

    evaluator = StrokeFieldEvaluator(control_points, widths, fine, config)
    background = config.background_for(colors.shape[1])
    exponent = evaluator.exponent
    w_eff = effective_width(widths, config.anneal_tau)[:, np.newaxis, np.newaxis]
    n = control_points.shape[0]

    def forward_band(band):
        fields = evaluator.band(*band)
        return fields, composite_fields(fields.alpha, colors, background, config.composition)

    forward = map_row_bands(forward_band, bands, workers)
    raw = np.concatenate([comp.raw for _, comp in forward], axis=0)
    pixels = np.clip(downsample(raw, k), 0.0, 1.0)

    if callable(adjoint):
        adjoint = adjoint(pixels)
    adjoint = np.asarray(adjoint, dtype=np.float64)
    if adjoint.shape != pixels.shape:
        raise ShapeMismatchError("pixel adjoint has shape {} but the render is {}".format(adjoint.shape, pixels.shape))
    if k > 1:
        adjoint = np.repeat(np.repeat(adjoint, k, axis=0), k, axis=1) / (k * k)

    def backward_band(band_index):
        start, stop = bands[band_index]
        fields, comp = forward[band_index]
        # the final clip to [0, 1] passes no gradient where it is active
        grad_out = adjoint[start:stop] * ((comp.raw >= 0.0) & (comp.raw <= 1.0))

        transmittance = comp.transmittance
        contributions = comp.values * transmittance[:n]
        below = np.empty_like(contributions)
        running = background * transmittance[n]
        for i in reversed(range(n)):
            below[i] = running
            running = running + contributions[i]

        grad_values = grad_out * transmittance[:n]
        grad_attenuation = -grad_out * below / (1.0 - comp.attenuation)
        expanded_colors = colors[:, np.newaxis, np.newaxis, :]
        alpha = fields.alpha
        if config.composition == COMPOSITION_OVER:
            combined = grad_values + grad_attenuation
            grad_alpha = np.sum(combined * expanded_colors, axis=-1)
            grad_colors = np.sum(combined * alpha[..., np.newaxis], axis=(1, 2))
        else:
            grad_alpha = np.sum(grad_values * expanded_colors + grad_attenuation, axis=-1)
            grad_colors = np.sum(grad_values * alpha[..., np.newaxis], axis=(1, 2))

        grad_alpha = grad_alpha * fields.unclamped
        distance = fields.distance
        grad_distance = grad_alpha * (-alpha * exponent * np.power(distance, exponent - 1.0) / (w_eff * w_eff))
        on_curve = distance == 0.0
        safe_distance = np.where(on_curve, 1.0, distance)
        dir_x = np.where(on_curve, 0.0, fields.diff_x / safe_distance)
        dir_y = np.where(on_curve, 0.0, fields.diff_y / safe_distance)
        basis = bernstein_basis(fields.s_star)
        grad_cp = np.stack([
            np.sum((grad_distance * dir_x)[..., np.newaxis] * basis, axis=(1, 2)),
            np.sum((grad_distance * dir_y)[..., np.newaxis] * basis, axis=(1, 2)),
        ], axis=-1)
        grad_widths = np.sum(grad_alpha * 2.0 * alpha * fields.q, axis=(1, 2)) / widths
        return grad_cp, grad_colors, grad_widths

    d_control_points = np.zeros_like(control_points)
    d_colors = np.zeros_like(colors)
    d_widths = np.zeros_like(widths)
    for grad_cp, grad_colors, grad_widths in map_row_bands(backward_band, list(range(len(bands))), workers):
        d_control_points = d_control_points + grad_cp
        d_colors = d_colors + grad_colors
        d_widths = d_widths + grad_widths
    return pixels, d_control_points, d_colors, d_widths


def render_with_grad(strokes, canvas: CanvasSpec, config: RenderConfig, pixel_adjoint, workers=None):
    """
    Return ``(image, grads)`` where ``grads[i]`` is the StrokeGrad of stroke i for
    the scalar ``sum(pixel_adjoint * image)``.
    """
    strokes = as_stroke_set(strokes)
    strokes.check_canvas(canvas)
    adjoint = adjoint_array(pixel_adjoint, canvas)
    pixels, d_cp, d_colors, d_widths = render_and_backward(
        strokes.control_points, strokes.colors, strokes.widths, canvas, config, adjoint, workers)
    return Image(canvas, pixels), grads_from_arrays(d_cp, d_colors, d_widths)


def finite_diff_arrays(control_points, colors, widths, canvas, config, adjoint, h, workers=None):
    """
    Central differences of ``sum(adjoint * render)`` for every raw parameter.
    """
    if not h > 0.0:
        raise InvalidConfigError("finite difference step must be > 0, got {}".format(h))
    base = [np.array(control_points, dtype=np.float64), np.array(colors, dtype=np.float64),
            np.array(widths, dtype=np.float64)]

    def objective(params):
        return float(np.sum(adjoint * render_arrays(*params, canvas, config, workers)))

    grads = [np.zeros_like(array) for array in base]
    if not np.any(adjoint):
        return tuple(grads)
    for which, array in enumerate(base):
        for index in np.ndindex(array.shape):
            plus = [a.copy() for a in base]
            minus = [a.copy() for a in base]
            plus[which][index] += h
            minus[which][index] -= h
            grads[which][index] = (objective(plus) - objective(minus)) / (2.0 * h)
    return tuple(grads)


def finite_diff_grad(strokes, canvas: CanvasSpec, config: RenderConfig, pixel_adjoint, h=1e-4, workers=None):
    strokes = as_stroke_set(strokes)
    strokes.check_canvas(canvas)
    adjoint = adjoint_array(pixel_adjoint, canvas)
    d_cp, d_colors, d_widths = finite_diff_arrays(
        strokes.control_points, strokes.colors, strokes.widths, canvas, config, adjoint, h, workers)
    return grads_from_arrays(d_cp, d_colors, d_widths)


def _reduce_mask(mask, canvas, config):
    k = config.supersample
    if k > 1:
        mask = mask.reshape(canvas.height, k, canvas.width, k).any(axis=(1, 3))
    return mask


def near_curve_mask(strokes: StrokeSet, canvas: CanvasSpec, config: RenderConfig, radius=1e-3):
    """
    Pixels within ``radius`` of any curve, where the distance is not smooth.
    """
    fine = sampling_canvas(canvas, config)
    evaluator = StrokeFieldEvaluator(strokes.control_points, strokes.widths, fine, config)
    distance = np.concatenate([evaluator.band(*band).distance.min(axis=0) for band in row_bands(fine.height)])
    return _reduce_mask(distance < radius, canvas, config)


def non_smooth_mask(strokes: StrokeSet, canvas: CanvasSpec, config: RenderConfig, radius=1e-3):
    """
    near_curve_mask plus the pixels where two separate stretches of a curve are
    within ``radius`` of being equally close, so the closest point can jump
    under a small change of the parameters.
    """
    fine = sampling_canvas(canvas, config)
    evaluator = StrokeFieldEvaluator(strokes.control_points, strokes.widths, fine, config)
    rows = np.arange(fine.height)
    cols = np.arange(fine.width)
    ambiguous = np.zeros((fine.height, fine.width), dtype=bool)
    for k in range(len(strokes)):
        px, py = evaluator.source_centers(k, rows, cols)
        ambiguous |= closest_point_gap(evaluator.canonical[k], px, py, toroidal=fine.toroidal) < radius
    return near_curve_mask(strokes, canvas, config, radius) | _reduce_mask(ambiguous, canvas, config)


def gradient_relative_error(analytic, numeric, floor=1e-10):
    """
    ``|a - n| / max(|a|, |n|)`` over all parameters; 0 when both are below ``floor``.
    """
    a = np.concatenate([g.as_array() for g in analytic]) if not isinstance(analytic, np.ndarray) else analytic
    b = np.concatenate([g.as_array() for g in numeric]) if not isinstance(numeric, np.ndarray) else numeric
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale < floor:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)
