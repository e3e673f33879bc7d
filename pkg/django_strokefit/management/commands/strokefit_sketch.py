from django_strokefit.management.commands.strokefit import StrokefitCommand
from django_strokefit.manager import StrokefitManager
from django_strokefit.utils.strokefit_log import get_logger

log = get_logger()


class Command(StrokefitCommand):
    help = (
        "django-strokefit: fit strokes to an image and write strokes.json, "
        "sketch.png, sketch.svg and trace.json"
    )

    def add_arguments(self, parser):
        parser.add_argument('target', help="8-bit grayscale or RGB PNG, PGM or PPM image to sketch")
        parser.add_argument(
            '--saliency',
            help="Grayscale saliency map the size of the target; defaults to the Sobel edge magnitude")
        self.get_common_arguments(parser)
        self.get_init_arguments(parser)
        self.get_optimize_arguments(parser)
        self.get_render_arguments(parser)

    def handle(self, *args, **options):
        run_config = self.get_run_config(options)
        result = StrokefitManager.sketch(
            options['target'],
            saliency_path=options.get('saliency'),
            output_dir=options.get('output_dir'),
            run_config=run_config,
            verbosity=options.get('verbosity'),
        )
        log.info("Sketch of {} written to {} (final loss {:.6g})".format(
            options['target'], result.strokes_path, result.final_loss))
