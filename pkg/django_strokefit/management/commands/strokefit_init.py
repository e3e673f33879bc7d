from django_strokefit.management.commands.strokefit import StrokefitCommand
from django_strokefit.manager import StrokefitManager


class Command(StrokefitCommand):
    help = "django-strokefit: write the greedy saliency initialization of an image as strokes.json"

    def add_arguments(self, parser):
        parser.add_argument('image', help="8-bit grayscale or RGB PNG, PGM or PPM image")
        parser.add_argument(
            '--saliency',
            help="Grayscale saliency map the size of the image; defaults to the Sobel edge magnitude")
        self.get_common_arguments(parser)
        self.get_init_arguments(parser)

    def handle(self, *args, **options):
        StrokefitManager.init(
            options['image'],
            saliency_path=options.get('saliency'),
            output_dir=options.get('output_dir'),
            run_config=self.get_run_config(options),
            verbosity=options.get('verbosity'),
        )
