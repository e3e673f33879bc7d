# -*- coding: utf-8 -*-
"""
Distance-field rasterizer.

Each stroke contributes an intensity ``alpha = exp(-d^e / w_eff^2)`` where d is
the distance to its curve, ``e = 1 + tau`` and ``w_eff = (2 - tau) w``; tau
anneals from 0 to 1 over an optimization. Strokes are composited front to back
with index 0 on top, and the background is composited last.
"""

import xml.etree.ElementTree as etree
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from django_strokefit.exceptions import CanvasMismatchError, InvalidConfigError, InvalidStrokeError
from django_strokefit.geometry import CanvasSpec, Image, Stroke, StrokeSet, closest_points
from django_strokefit.utils.multiprocessing_utils import map_row_bands, row_bands

COMPOSITION_OVER = 'over'
COMPOSITION_COLOR_REPLACE = 'color_replace'
COMPOSITIONS = (COMPOSITION_OVER, COMPOSITION_COLOR_REPLACE)

DEFAULT_INTENSITY_CLAMP = 1.0 - 1e-6


@dataclass(frozen=True)
class RenderConfig:
    anneal_tau: float = 1.0
    composition: str = COMPOSITION_COLOR_REPLACE
    intensity_clamp: float = DEFAULT_INTENSITY_CLAMP
    supersample: int = 1
    # white; a single value or one per channel
    background: tuple = (1.0,)

    def __post_init__(self):
        if not 0.0 <= self.anneal_tau <= 1.0:
            raise InvalidConfigError("anneal_tau must lie in [0, 1], got {}".format(self.anneal_tau))
        if self.composition not in COMPOSITIONS:
            raise InvalidConfigError(
                "composition must be one of {}, got {!r}".format(COMPOSITIONS, self.composition))
        if not 0.0 < self.intensity_clamp < 1.0:
            raise InvalidConfigError("intensity_clamp must lie in (0, 1), got {}".format(self.intensity_clamp))
        if isinstance(self.supersample, bool) or int(self.supersample) != self.supersample or self.supersample < 1:
            raise InvalidConfigError("supersample must be a positive integer, got {!r}".format(self.supersample))
        background = tuple(float(v) for v in np.atleast_1d(self.background))
        if len(background) not in (1, 3) or not all(0.0 <= v <= 1.0 for v in background):
            raise InvalidConfigError("background must be 1 or 3 values in [0, 1], got {!r}".format(self.background))
        object.__setattr__(self, 'background', background)
        object.__setattr__(self, 'supersample', int(self.supersample))

    def with_tau(self, tau):
        return replace(self, anneal_tau=float(tau))

    def background_for(self, channels):
        if len(self.background) == 1:
            return np.full(channels, self.background[0])
        if channels != len(self.background):
            raise CanvasMismatchError(
                "background has {} values but the canvas has {} channels".format(len(self.background), channels))
        return np.array(self.background)


@dataclass(frozen=True, eq=False)
class IntensityField:
    canvas: CanvasSpec
    alpha: np.ndarray = field(repr=False)


def field_exponent(tau):
    return 1.0 + tau


def effective_width(width, tau):
    return (2.0 - tau) * width


class BandFields(NamedTuple):
    """
    Per-stroke quantities for the rows of one band, each ``(n, rows, W)``
    """
    alpha: np.ndarray
    unclamped: np.ndarray
    distance: np.ndarray
    q: np.ndarray
    s_star: np.ndarray
    diff_x: np.ndarray
    diff_y: np.ndarray


class StrokeFieldEvaluator(object):
    """
    Evaluates stroke fields band by band on raw parameter arrays.

    No range checks are made here, so finite differences may evaluate parameters
    slightly outside their valid ranges. On toroidal canvases each stroke is
    moved by a whole number of pixels so that t1 lies in the central pixel,
    evaluated there, and its field is cyclically shifted back; integer-pixel
    translations of a stroke then permute its field exactly.
    """

    def __init__(self, control_points, widths, canvas: CanvasSpec, config: RenderConfig):
        self.control_points = np.asarray(control_points, dtype=np.float64)
        self.widths = np.asarray(widths, dtype=np.float64)
        self.canvas = canvas
        self.config = config
        self.exponent = field_exponent(config.anneal_tau)
        self.column_centers = canvas.column_centers()
        self.row_centers = canvas.row_centers()

        n = self.control_points.shape[0]
        self.col_shifts = np.zeros(n, dtype=np.int64)
        self.row_shifts = np.zeros(n, dtype=np.int64)
        self.canonical = self.control_points
        if canvas.toroidal:
            t1 = self.control_points[:, 0, :]
            self.col_shifts = np.rint(t1[:, 0] * canvas.width / 2.0).astype(np.int64)
            self.row_shifts = np.rint(t1[:, 1] * canvas.height / 2.0).astype(np.int64)
            shift = np.stack([2.0 * self.col_shifts / canvas.width, 2.0 * self.row_shifts / canvas.height], axis=-1)
            self.canonical = self.control_points - shift[:, np.newaxis, :]

    def band(self, start, stop):
        canvas = self.canvas
        rows = np.arange(start, stop)
        cols = np.arange(canvas.width)
        fields = [self._stroke_band(k, rows, cols) for k in range(self.control_points.shape[0])]
        return BandFields(*(np.stack(parts) for parts in zip(*fields)))

    def source_centers(self, k, rows, cols):
        """
        Coordinates at which stroke k is evaluated for the given pixel rows and columns.
        """
        canvas = self.canvas
        src_rows = (rows - self.row_shifts[k]) % canvas.height if canvas.toroidal else rows
        src_cols = (cols - self.col_shifts[k]) % canvas.width if canvas.toroidal else cols
        return np.meshgrid(self.column_centers[src_cols], self.row_centers[src_rows])

    def _stroke_band(self, k, rows, cols):
        canvas = self.canvas
        px, py = self.source_centers(k, rows, cols)
        distance, s_star, diff_x, diff_y = closest_points(self.canonical[k], px, py, toroidal=canvas.toroidal)

        w_eff = effective_width(self.widths[k], self.config.anneal_tau)
        q = distance ** self.exponent / (w_eff * w_eff)
        alpha_raw = np.exp(-q)
        unclamped = alpha_raw <= self.config.intensity_clamp
        alpha = np.where(unclamped, alpha_raw, self.config.intensity_clamp)
        return alpha, unclamped, distance, q, s_star, diff_x, diff_y


class Composite(NamedTuple):
    """
    A composited band and what the backward pass needs from it.
    ``attenuation`` and ``values`` are ``(n, rows, W, C)``; ``transmittance`` is
    ``(n + 1, rows, W, C)`` with ``transmittance[i]`` the light reaching layer i.
    """
    raw: np.ndarray
    attenuation: np.ndarray
    values: np.ndarray
    transmittance: np.ndarray


def composite_fields(alpha, colors, background, composition):
    """
    Composite ``(n, rows, W)`` intensities with ``(n, C)`` colors over a
    ``(C,)`` background. Returns the unclipped composite.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    colors = np.asarray(colors, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    n = alpha.shape[0]
    channels = colors.shape[1]

    expanded_colors = colors[:, np.newaxis, np.newaxis, :]
    values = alpha[..., np.newaxis] * expanded_colors
    if composition == COMPOSITION_OVER:
        attenuation = values
    else:
        attenuation = np.broadcast_to(alpha[..., np.newaxis], alpha.shape + (channels,))

    log_keep = np.log1p(-attenuation)
    transmittance = np.empty((n + 1,) + alpha.shape[1:] + (channels,))
    cumulative = np.zeros(alpha.shape[1:] + (channels,))
    transmittance[0] = 1.0
    for i in range(n):
        cumulative = cumulative + log_keep[i]
        transmittance[i + 1] = np.exp(cumulative)

    raw = np.zeros(alpha.shape[1:] + (channels,))
    for i in range(n):
        raw = raw + values[i] * transmittance[i]
    raw = raw + background * transmittance[n]
    return Composite(raw, attenuation, values, transmittance)


def sampling_canvas(canvas, config):
    k = config.supersample
    if k == 1:
        return canvas
    return canvas.resized(canvas.width * k, canvas.height * k)


def downsample(pixels, k):
    if k == 1:
        return pixels
    h, w, c = pixels.shape
    return pixels.reshape(h // k, k, w // k, k, c).mean(axis=(1, 3))


def render_arrays(control_points, colors, widths, canvas, config, workers=None):
    """
    Render raw parameter arrays to an ``(H, W, C)`` array without validating them.
    """
    colors = np.asarray(colors, dtype=np.float64)
    fine = sampling_canvas(canvas, config)
    evaluator = StrokeFieldEvaluator(control_points, widths, fine, config)
    background = config.background_for(colors.shape[1])

    def render_band(band):
        fields = evaluator.band(*band)
        return composite_fields(fields.alpha, colors, background, config.composition).raw

    raw = np.concatenate(map_row_bands(render_band, row_bands(fine.height), workers), axis=0)
    return np.clip(downsample(raw, config.supersample), 0.0, 1.0)


def as_stroke_set(strokes):
    if isinstance(strokes, StrokeSet):
        return strokes
    if isinstance(strokes, Stroke):
        return StrokeSet([strokes])
    strokes = list(strokes)
    if not strokes:
        raise InvalidStrokeError("Cannot render an empty stroke set")
    return StrokeSet(strokes)


def stroke_field(stroke: Stroke, canvas: CanvasSpec, config: Optional[RenderConfig] = None) -> IntensityField:
    config = config or RenderConfig()
    evaluator = StrokeFieldEvaluator(stroke.control_points[np.newaxis], [stroke.width], canvas, config)
    alpha = np.concatenate([evaluator.band(*band).alpha[0] for band in row_bands(canvas.height)], axis=0)
    return IntensityField(canvas, alpha)


def render(strokes, canvas: CanvasSpec, config: Optional[RenderConfig] = None, workers=None) -> Image:
    """
    Render a stroke set. The result does not depend on ``workers``.
    """
    config = config or RenderConfig()
    strokes = as_stroke_set(strokes)
    strokes.check_canvas(canvas)
    pixels = render_arrays(strokes.control_points, strokes.colors, strokes.widths, canvas, config, workers)
    return Image(canvas, pixels)


"""
SVG export
"""

SVG_NAMESPACE = 'http://www.w3.org/2000/svg'


def _svg_number(value):
    text = '{:.6f}'.format(value).rstrip('0').rstrip('.')
    return '0' if text in ('', '-0') else text


def _svg_color(color):
    levels = [int(np.rint(255.0 * c)) for c in color]
    if len(levels) == 1:
        levels = levels * 3
    return '#{:02x}{:02x}{:02x}'.format(*levels)


def export_svg(strokes, canvas: CanvasSpec) -> str:
    """
    One cubic path per stroke in pixel coordinates. Later SVG elements paint
    on top, so strokes are written bottom first.
    """
    strokes = as_stroke_set(strokes)
    strokes.check_canvas(canvas)

    root = etree.Element('svg', {
        'xmlns': SVG_NAMESPACE,
        'width': str(canvas.width),
        'height': str(canvas.height),
        'viewBox': '0 0 {} {}'.format(canvas.width, canvas.height),
    })
    width_scale = min(canvas.width, canvas.height) / 2.0
    for index in reversed(range(len(strokes))):
        stroke = strokes[index]
        xs = (stroke.control_points[:, 0] + 1.0) * canvas.width / 2.0
        ys = (stroke.control_points[:, 1] + 1.0) * canvas.height / 2.0
        coords = [(_svg_number(x), _svg_number(y)) for x, y in zip(xs, ys)]
        path = 'M {} {} C {} {}, {} {}, {} {}'.format(*[c for pair in coords for c in pair])
        etree.SubElement(root, 'path', {
            'id': 'stroke-{}'.format(index),
            'd': path,
            'fill': 'none',
            'stroke': _svg_color(stroke.color),
            'stroke-width': _svg_number(stroke.width * width_scale),
            'stroke-linecap': 'round',
        })
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + etree.tostring(root, encoding='unicode') + '\n'


def max_abs_difference(a, b):
    a = a.pixels if isinstance(a, Image) else np.asarray(a)
    b = b.pixels if isinstance(b, Image) else np.asarray(b)
    return float(np.max(np.abs(a - b))) if a.size else 0.0
