# -*- coding: utf-8 -*-
"""
Greedy stroke initialization from a saliency map.

Strokes are anchored one at a time at the most salient pixel; after each
pick the saliency around the anchor is suppressed in proportion to the
image luminance, so the next stroke lands somewhere else.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from django_strokefit import get_logger
from django_strokefit.exceptions import InvalidConfigError, InvalidImageError, ShapeMismatchError
from django_strokefit.geometry import CanvasSpec, Image, Stroke, StrokeSet

logger = get_logger()

LUMINANCE_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    canvas: CanvasSpec
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.canvas.channels != 1:
            raise InvalidImageError("a saliency map has one channel, got a {}-channel canvas".format(self.canvas.channels))
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim == 3 and weights.shape[-1] == 1:
            weights = weights[:, :, 0]
        if weights.shape != (self.canvas.height, self.canvas.width):
            raise ShapeMismatchError("saliency weights have shape {} but the canvas is {}x{}".format(
                weights.shape, self.canvas.height, self.canvas.width))
        if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
            raise InvalidImageError("saliency weights must be finite and nonnegative")
        weights.setflags(write=False)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def for_image(cls, image: Image, weights):
        canvas = image.canvas
        return cls(CanvasSpec(canvas.width, canvas.height, 1, canvas.topology), weights)


@dataclass(frozen=True)
class InitConfig:
    n_strokes: int = 16
    # suppression radius in pixels
    sigma: float = 5.0
    beta: float = 5.0
    perturb_std: float = 0.05
    seed: int = 0
    width: float = 0.05

    def __post_init__(self):
        if isinstance(self.n_strokes, bool) or int(self.n_strokes) != self.n_strokes or self.n_strokes < 1:
            raise InvalidConfigError("n_strokes must be an integer >= 1, got {!r}".format(self.n_strokes))
        if not self.sigma > 0.0:
            raise InvalidConfigError("sigma must be > 0, got {!r}".format(self.sigma))
        if not self.beta > 0.0:
            raise InvalidConfigError("beta must be > 0, got {!r}".format(self.beta))
        if not self.perturb_std >= 0.0:
            raise InvalidConfigError("perturb_std must be >= 0, got {!r}".format(self.perturb_std))
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise InvalidConfigError("seed must be an unsigned integer, got {!r}".format(self.seed))
        if not 0.0 < self.width <= 1.0:
            raise InvalidConfigError("width must lie in (0, 1], got {!r}".format(self.width))
        object.__setattr__(self, 'n_strokes', int(self.n_strokes))
        object.__setattr__(self, 'seed', int(self.seed))


class InitResult(NamedTuple):
    strokes: StrokeSet
    # True if the saliency was all zero at some pick and replaced by a uniform map
    used_fallback: bool
    saliency: SaliencyMap


def luminance(image: Image):
    """
    ``H x W`` luminance: the single channel, or 0.299 R + 0.587 G + 0.114 B.
    """
    pixels = image.pixels
    if pixels.shape[-1] == 1:
        return pixels[:, :, 0].copy()
    r, g, b = LUMINANCE_WEIGHTS
    return r * pixels[:, :, 0] + g * pixels[:, :, 1] + b * pixels[:, :, 2]


def adjust_color(color, beta=5.0):
    """
    Push colors away from mid-gray with a normalized logistic curve:
    0, 0.5 and 1 are fixed points and the map is increasing on [0, 1].
    """
    if not beta > 0.0:
        raise InvalidConfigError("beta must be > 0, got {!r}".format(beta))
    c = np.asarray(color, dtype=np.float64)
    # (sigmoid((2c - 1) b) - sigmoid(-b)) / (sigmoid(b) - sigmoid(-b)) rewritten with tanh
    half = np.tanh(beta / 2.0)
    adjusted = (np.tanh((2.0 * c - 1.0) * beta / 2.0) + half) / (2.0 * half)
    # vectorized and scalar tanh may differ in the last bit; 0 and 1 stay exact
    adjusted = np.where(c <= 0.0, 0.0, np.where(c >= 1.0, 1.0, adjusted))
    return np.clip(adjusted, 0.0, 1.0)


def sobel_saliency(image: Image) -> SaliencyMap:
    """
    Sobel gradient magnitude of the luminance, normalized to a maximum of 1.
    Borders are reflected, or wrapped on toroidal canvases.
    """
    lum = luminance(image)
    mode = 'wrap' if image.canvas.toroidal else 'mirror'
    magnitude = np.hypot(ndimage.sobel(lum, axis=0, mode=mode), ndimage.sobel(lum, axis=1, mode=mode))
    peak = magnitude.max()
    if peak > 0.0:
        magnitude = magnitude / peak
    return SaliencyMap.for_image(image, magnitude)


def _pixel_distance_sq(canvas: CanvasSpec, row, col):
    d_rows = np.abs(np.arange(canvas.height, dtype=np.float64) - row)
    d_cols = np.abs(np.arange(canvas.width, dtype=np.float64) - col)
    if canvas.toroidal:
        d_rows = np.minimum(d_rows, canvas.height - d_rows)
        d_cols = np.minimum(d_cols, canvas.width - d_cols)
    return d_rows[:, np.newaxis] ** 2 + d_cols[np.newaxis, :] ** 2


def greedy_init(saliency: SaliencyMap, image: Image, cfg: InitConfig) -> InitResult:
    canvas = image.canvas
    if saliency.weights.shape != (canvas.height, canvas.width):
        raise ShapeMismatchError("saliency map is {}x{} but the image is {}x{}".format(
            saliency.canvas.width, saliency.canvas.height, canvas.width, canvas.height))
    if cfg.n_strokes > canvas.width * canvas.height:
        raise InvalidConfigError("cannot place {} strokes on {} pixels".format(cfg.n_strokes, canvas.width * canvas.height))

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    weights = np.array(saliency.weights)
    lum = luminance(image)
    used_fallback = False
    strokes = []
    for index in range(cfg.n_strokes):
        if not np.any(weights > 0.0):
            if not used_fallback:
                logger.warning("Saliency is zero everywhere before stroke {}; "
                               "falling back to a uniform map".format(index))
            used_fallback = True
            weights = np.ones_like(weights)

        # np.argmax returns the first maximum in row-major order
        row, col = np.unravel_index(int(np.argmax(weights)), weights.shape)
        anchor = canvas.pixel_to_point(row, col).as_array()
        offsets = rng.normal(0.0, cfg.perturb_std, size=(3, 2))
        control_points = np.vstack([anchor, anchor + offsets])
        color = adjust_color(image.pixels[row, col], cfg.beta)
        strokes.append(Stroke(control_points, color, cfg.width))
        logger.debug("Anchored stroke {} at pixel ({}, {})".format(index, row, col))

        falloff = np.exp(-_pixel_distance_sq(canvas, row, col) / (cfg.sigma * cfg.sigma))
        weights = np.maximum(weights - lum * falloff, 0.0)

    return InitResult(StrokeSet(strokes), used_fallback, SaliencyMap(saliency.canvas, weights))
