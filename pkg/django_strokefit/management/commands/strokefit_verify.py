from django_strokefit.management.commands.strokefit import StrokefitCommand
from django_strokefit.manager import StrokefitManager
from django_strokefit.utils.strokefit_log import get_logger
from django_strokefit.verification import GROUPS

log = get_logger()


class Command(StrokefitCommand):
    help = (
        "django-strokefit: check the renderer, gradients, losses and optimizer "
        "against their properties and write report.json"
    )

    def add_arguments(self, parser):
        parser.add_argument(
            '--filter',
            help="Run one group ({}) or one property such as hungarian.brute_force".format(", ".join(GROUPS)))
        parser.add_argument('--seed', type=int, help="Seed of the random corpora (0)")
        parser.add_argument(
            '--quick', action='store_true',
            help="Smaller corpora and fewer iterations, for a fast smoke test")
        self.get_common_arguments(parser)
        self.get_workers_argument(parser)

    def handle(self, *args, **options):
        report = StrokefitManager.verify(
            filter_=options.get('filter'),
            quick=options.get('quick', False),
            workers=options.get('workers'),
            output_dir=options.get('output_dir'),
            run_config=self.get_run_config(options),
            verbosity=options.get('verbosity'),
        )
        log.info("All {} properties hold".format(len(report['properties'])))
