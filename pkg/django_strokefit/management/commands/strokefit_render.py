from django_strokefit.management.commands.strokefit import StrokefitCommand
from django_strokefit.manager import StrokefitManager


class Command(StrokefitCommand):
    help = "django-strokefit: render a strokes.json file to PNG and optionally SVG"

    def add_arguments(self, parser):
        parser.add_argument('strokes', help="strokes.json file to render")
        parser.add_argument(
            '-o', '--output', dest='png',
            help="PNG file to write; defaults to sketch.png in the output directory")
        parser.add_argument('--svg', help="Also write the strokes as SVG to this file")
        parser.add_argument(
            '--width', type=int,
            help="Output width in pixels; the height follows the stored aspect ratio unless --height is given")
        parser.add_argument('--height', type=int, help="Output height in pixels")
        parser.add_argument('--tau', type=float, help="Annealing tau in [0, 1] (1)")
        self.get_common_arguments(parser)
        self.get_render_arguments(parser)

    def handle(self, *args, **options):
        StrokefitManager.render(
            options['strokes'],
            png_path=options.get('png'),
            svg_path=options.get('svg'),
            width=options.get('width'),
            height=options.get('height'),
            tau=options.get('tau'),
            output_dir=options.get('output_dir'),
            run_config=self.get_run_config(options),
            verbosity=options.get('verbosity'),
        )
