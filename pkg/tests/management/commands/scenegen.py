from __future__ import (absolute_import, division, print_function, unicode_literals)

import os

import numpy as np
from django.core.management import BaseCommand

from django_strokefit.geometry import CanvasSpec, StrokeSet
from django_strokefit.imaging import write_png
from django_strokefit.rasterizer import render
from django_strokefit.serialization import write_strokes


class Command(BaseCommand):
    help = """
    Render random strokes to a PNG for use as a sketch target in tests
    """

    def add_arguments(self, parser):
        parser.add_argument(
            'output',
            help='PNG file to write: tests/scenes/target.png',
        )
        parser.add_argument(
            '-n', '--n-strokes', dest='n_strokes', type=int, default=4,
            help='Number of random strokes in the scene',
        )
        parser.add_argument(
            '--size', type=int, default=32,
            help='Width and height of the scene in pixels',
        )
        parser.add_argument(
            '--rgb',
            action='store_true',
            default=False,
            help='Render in color instead of grayscale',
        )
        parser.add_argument(
            '--seed', type=int, default=0,
            help='Seed for the random strokes',
        )
        parser.add_argument(
            '--strokes',
            help='Also write the ground-truth strokes.json to this path',
        )

    def handle(self, *args, **options):
        channels = 3 if options['rgb'] else 1
        rng = np.random.Generator(np.random.Philox(options['seed']))
        n = options['n_strokes']
        strokes = StrokeSet.from_arrays(
            rng.uniform(-0.6, 0.6, size=(n, 4, 2)),
            rng.uniform(0.0, 0.6, size=(n, channels)),
            rng.uniform(0.06, 0.12, size=n),
        )
        canvas = CanvasSpec(options['size'], options['size'], channels)

        output_dir = os.path.dirname(options['output'])
        if output_dir:
            os.makedirs(output_dir, exist_ok=True)
        write_png(render(strokes, canvas, workers=1), options['output'])
        print("Wrote a {0}x{0} scene with {1} strokes to {2}".format(options['size'], n, options['output']))

        if options['strokes']:
            write_strokes(options['strokes'], strokes, canvas)
            print("Wrote the ground-truth strokes to {}".format(options['strokes']))
