# -*- coding: utf-8 -*-
"""
Affine maps acting on images: ``output(u) = input(g^-1 u)``.

Maps that send pixel centers onto pixel centers (whole-pixel translations,
quarter turns of square canvases and their compositions) are applied as exact
pixel permutations; everything else is resampled with scipy.ndimage.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from django_strokefit.exceptions import InvalidConfigError
from django_strokefit.geometry import AffineMap, CanvasSpec, Image

INTERPOLATION_NEAREST = 'nearest'
INTERPOLATION_BILINEAR = 'bilinear'
INTERPOLATIONS = (INTERPOLATION_NEAREST, INTERPOLATION_BILINEAR)

BOUNDARY_WRAP = 'wrap'
BOUNDARY_CLAMP = 'clamp'
BOUNDARIES = (BOUNDARY_WRAP, BOUNDARY_CLAMP)

LATTICE_TOLERANCE = 1e-9

_SPLINE_ORDERS = {INTERPOLATION_NEAREST: 0, INTERPOLATION_BILINEAR: 1}
_SCIPY_MODES = {BOUNDARY_WRAP: 'grid-wrap', BOUNDARY_CLAMP: 'nearest'}


@dataclass(frozen=True)
class ImageTransformSpec:
    map: AffineMap
    interpolation: str = INTERPOLATION_BILINEAR
    boundary: str = BOUNDARY_CLAMP

    def __post_init__(self):
        if self.interpolation not in INTERPOLATIONS:
            raise InvalidConfigError(
                "interpolation must be one of {}, got {!r}".format(INTERPOLATIONS, self.interpolation))
        if self.boundary not in BOUNDARIES:
            raise InvalidConfigError("boundary must be one of {}, got {!r}".format(BOUNDARIES, self.boundary))

    @classmethod
    def for_canvas(cls, affine, canvas, interpolation=INTERPOLATION_BILINEAR):
        """
        Wrap around toroidal canvases and clamp at the border of planar ones.
        """
        return cls(affine, interpolation, BOUNDARY_WRAP if canvas.toroidal else BOUNDARY_CLAMP)


def source_coordinates(affine: AffineMap, canvas: CanvasSpec):
    """
    Continuous ``(rows, cols)`` in the input image that each output pixel reads from.
    """
    xs, ys = canvas.pixel_centers()
    source = affine.inverse().apply(np.stack([xs, ys], axis=-1))
    cols = (source[..., 0] * canvas.width + canvas.width - 1.0) / 2.0
    rows = (source[..., 1] * canvas.height + canvas.height - 1.0) / 2.0
    return rows, cols


def _lattice_indices(rows, cols):
    int_rows = np.rint(rows)
    int_cols = np.rint(cols)
    if np.all(np.abs(rows - int_rows) <= LATTICE_TOLERANCE) and np.all(np.abs(cols - int_cols) <= LATTICE_TOLERANCE):
        return int_rows.astype(np.int64), int_cols.astype(np.int64)
    return None


def is_lattice_map(affine: AffineMap, canvas: CanvasSpec):
    """
    True when the map carries every pixel center onto a pixel center of the
    lattice, so that transforming an image is a pure gather.
    """
    return _lattice_indices(*source_coordinates(affine, canvas)) is not None


def transform_image(image: Image, spec: ImageTransformSpec) -> Image:
    canvas = image.canvas
    if spec.boundary == BOUNDARY_WRAP and not canvas.toroidal:
        raise InvalidConfigError("wrap boundary handling needs a toroidal canvas")

    rows, cols = source_coordinates(spec.map, canvas)
    lattice = _lattice_indices(rows, cols)
    if lattice is not None:
        int_rows, int_cols = lattice
        if spec.boundary == BOUNDARY_WRAP:
            int_rows = int_rows % canvas.height
            int_cols = int_cols % canvas.width
        else:
            int_rows = np.clip(int_rows, 0, canvas.height - 1)
            int_cols = np.clip(int_cols, 0, canvas.width - 1)
        return Image(canvas, image.pixels[int_rows, int_cols])

    order = _SPLINE_ORDERS[spec.interpolation]
    mode = _SCIPY_MODES[spec.boundary]
    channels = [
        ndimage.map_coordinates(image.pixels[:, :, c], [rows, cols], order=order, mode=mode, prefilter=False)
        for c in range(canvas.channels)
    ]
    return Image(canvas, np.clip(np.stack(channels, axis=-1), 0.0, 1.0))
