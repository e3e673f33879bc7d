# -*- coding: utf-8 -*-
"""
Raster I/O: 8-bit grayscale or RGB PNG and PGM/PPM files through Pillow.
Pixel values v are read as v / 255 and written as round(255 x).
"""

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from django_strokefit import get_logger
from django_strokefit.exceptions import ImageReadError, ShapeMismatchError
from django_strokefit.geometry import TOPOLOGY_PLANAR, CanvasSpec, Image
from django_strokefit.initialization import LUMINANCE_WEIGHTS, SaliencyMap

logger = get_logger()

SUPPORTED_MODES = ('L', 'RGB')


def _read_array(path):
    try:
        with PILImage.open(path) as raster:
            raster.load()
            if raster.mode not in SUPPORTED_MODES:
                raise ImageReadError(
                    "{} has pixel mode {!r}; only 8-bit grayscale (L) and RGB images are supported".format(
                        path, raster.mode))
            return np.asarray(raster, dtype=np.uint8)
    except (OSError, UnidentifiedImageError) as exc:
        raise ImageReadError("Cannot read {} as an image: {}".format(path, exc))


def read_image(path, topology=TOPOLOGY_PLANAR) -> Image:
    data = _read_array(path)
    if data.ndim == 2:
        data = data[:, :, np.newaxis]
    height, width, channels = data.shape
    logger.debug("Read {}x{} image with {} channel(s) from {}".format(width, height, channels, path))
    return Image(CanvasSpec(width, height, channels, topology), data.astype(np.float64) / 255.0)


def read_saliency(path, canvas: CanvasSpec) -> SaliencyMap:
    """
    Read a saliency map that must match ``canvas`` in size;
    RGB files are reduced to luminance.
    """
    data = _read_array(path).astype(np.float64) / 255.0
    if data.ndim == 3:
        r, g, b = LUMINANCE_WEIGHTS
        data = r * data[:, :, 0] + g * data[:, :, 1] + b * data[:, :, 2]
    if data.shape != (canvas.height, canvas.width):
        raise ShapeMismatchError("saliency map {} is {}x{} but the image is {}x{}".format(
            path, data.shape[1], data.shape[0], canvas.width, canvas.height))
    return SaliencyMap(CanvasSpec(canvas.width, canvas.height, 1, canvas.topology), data)


def to_bytes(image: Image):
    return np.rint(image.pixels * 255.0).astype(np.uint8)


def write_png(image: Image, path):
    """
    Write an 8-bit PNG. The output bytes depend only on the pixel values.
    """
    data = to_bytes(image)
    if data.shape[-1] == 1:
        raster = PILImage.fromarray(data[:, :, 0])
    else:
        raster = PILImage.fromarray(data)
    raster.save(path, format='PNG', optimize=False, compress_level=6)
