# -*- coding: utf-8 -*-
"""
Measure how well rendering and losses commute with affine maps.

render(g . strokes) should equal g . render(strokes); the difference is
exactly zero for maps that permute pixels (whole-pixel translations on
toroidal canvases, quarter turns of square ones) and small otherwise.
"""

from typing import Optional, Tuple

from django_strokefit.geometry import AffineMap, CanvasSpec, Image, apply_affine_strokes
from django_strokefit.losses import MetricSpec, augmented_loss
from django_strokefit.rasterizer import RenderConfig, as_stroke_set, max_abs_difference, render
from django_strokefit.transforms import (  # noqa: F401
    BOUNDARIES, BOUNDARY_CLAMP, BOUNDARY_WRAP, INTERPOLATION_BILINEAR, INTERPOLATION_NEAREST, INTERPOLATIONS,
    ImageTransformSpec, is_lattice_map, source_coordinates, transform_image
)


def check_render_equivariance(strokes, affine: AffineMap, canvas: CanvasSpec, config: Optional[RenderConfig] = None,
                              interpolation=INTERPOLATION_BILINEAR, workers=None) -> float:
    """
    Max-abs pixel difference between rendering the mapped strokes and
    mapping the rendered image.
    """
    config = config or RenderConfig()
    strokes = as_stroke_set(strokes)
    moved = render(apply_affine_strokes(affine, strokes), canvas, config, workers)
    spec = ImageTransformSpec.for_canvas(affine, canvas, interpolation)
    return max_abs_difference(moved, transform_image(render(strokes, canvas, config, workers), spec))


def check_loss_condition(metric: MetricSpec, image: Image, strokes, affine: AffineMap, canvas: CanvasSpec,
                         config: Optional[RenderConfig] = None, seed=0, workers=None) -> Tuple[float, float]:
    """
    Return ``(loss(g I, g S), loss(I, S))`` for the sketch S of ``strokes``.
    """
    strokes = as_stroke_set(strokes)
    moved_image = transform_image(image, ImageTransformSpec.for_canvas(affine, canvas))
    moved = augmented_loss(metric, moved_image, apply_affine_strokes(affine, strokes), canvas, config, seed,
                           workers=workers)
    base = augmented_loss(metric, image, strokes, canvas, config, seed, workers=workers)
    return moved, base


def loss_condition_ratio(moved, base):
    """
    ``moved / base``, taking 0 / 0 as 1.
    """
    if base == 0.0:
        return 1.0 if moved == 0.0 else float('inf')
    return moved / base
