import argparse

from django.core.management import BaseCommand, CommandError, call_command

from django_strokefit.exceptions import StrokefitCommandError, StrokefitException
from django_strokefit.utils.config import RunConfig
from django_strokefit.utils.multiprocessing_utils import USE_ALL_WORKERS
from django_strokefit.utils.strokefit_log import get_logger

logger = get_logger()

commands = {
    'sketch': 'Fit strokes to an image; calls strokefit_sketch',
    'render': 'Render a strokes.json file; calls strokefit_render',
    'init': 'Write the greedy stroke initialization; calls strokefit_init',
    'verify': 'Run the property suite; calls strokefit_verify',
    'list': 'List recorded runs; calls strokefit_list',
}

# BaseCommand options handed down to the subcommand when changed from these defaults
forwarded_options = {
    'verbosity': 1,
    'no_color': False,
    'force_color': False,
    'traceback': False,
}


class Command(BaseCommand):
    help = "django-strokefit: base command for fitting strokes to images"

    def add_arguments(self, parser):
        parser.add_argument('subcommand', choices=sorted(commands), help="; ".join(
            "{}: {}".format(cmd, text) for cmd, text in sorted(commands.items())))
        parser.add_argument('args', nargs=argparse.REMAINDER, help="arguments for the subcommand")

    def handle(self, *args, **options):
        subcommand = options['subcommand']
        if subcommand not in commands:
            raise StrokefitCommandError("Unknown subcommand {!r}".format(subcommand))
        # the remainder arrives as positional args
        forwarded = {
            name: options[name] for name, default in forwarded_options.items()
            if name in options and options[name] != default
        }
        return call_command("strokefit_{}".format(subcommand), *args, **forwarded)

    def execute(self, *args, **options):
        """
        Library errors become CommandErrors that carry the exit code:
        1 for invalid input, 2 for numerical failures.
        """
        try:
            return super(Command, self).execute(*args, **options)
        except StrokefitException as ex:
            raise CommandError(str(ex), returncode=ex.exit_code)

    """
    Methods To Specify Settings
    The methods below are added as an aid to subcommands
    so every RunConfig field is a flag with the same name. Flags default
    to None so that STROKEFIT_DEFAULTS and --config files can fill them in.
    """

    @classmethod
    def get_common_arguments(cls, parser, include_output_dir=True):
        parser.add_argument(
            '--config', metavar='TOML',
            help="TOML file of settings; keys are the flag names. Command-line flags take precedence.")
        if include_output_dir:
            parser.add_argument(
                '--output-dir', dest='output_dir',
                help="Directory for the files written; defaults to STROKEFIT_OUTPUT_DIR or the current directory")
        parser.add_argument(
            '--threads', type=int,
            help="Threads used for rendering; 0 means auto. STROKEFIT_THREADS caps this.")

    @classmethod
    def get_init_arguments(cls, parser):
        parser.add_argument('-n', '--n-strokes', dest='n_strokes', type=int, help="Number of strokes (16)")
        parser.add_argument('--sigma', type=float, help="Saliency suppression radius in pixels (5)")
        parser.add_argument('--beta', type=float, help="Color adjustment strength, > 0 (5)")
        parser.add_argument(
            '--perturb-std', dest='perturb_std', type=float,
            help="Standard deviation of the control point perturbation (0.05)")
        parser.add_argument('--init-width', dest='init_width', type=float, help="Initial stroke width (0.05)")
        parser.add_argument('--seed', type=int, help="Seed for initialization and augmentation (0)")
        parser.add_argument('--topology', help="planar or toroidal (planar)")

    @classmethod
    def get_optimize_arguments(cls, parser):
        parser.add_argument('--iterations', type=int, help="Adam steps (2000)")
        parser.add_argument(
            '--checkpoints', type=int, nargs='+',
            help="Steps recorded in trace.json (50 100 200 400 700 1000 1500 2000, capped at --iterations)")
        parser.add_argument('--lr', type=float, help="Adam learning rate (0.05)")
        parser.add_argument('--lambda-p', dest='lambda_p', type=float, help="Weight of the stroke penalties (0.1)")
        parser.add_argument(
            '--optimize-color', dest='optimize_color', action='store_true', default=None,
            help="Also fit stroke colors")
        parser.add_argument(
            '--optimize-width', dest='optimize_width', action='store_true', default=None,
            help="Also fit stroke widths")
        parser.add_argument(
            '--no-anneal', dest='anneal', action='store_false', default=None,
            help="Render with tau = 1 throughout instead of annealing from 0 to 1")
        parser.add_argument('--log-every', dest='log_every', type=int, help="Log the loss every N steps (100)")
        parser.add_argument('--metric', help="l1 or external (l1)")
        parser.add_argument(
            '--augment-samples', dest='augment_samples', type=int,
            help="Random similarity maps averaged into the loss per step (0)")
        parser.add_argument(
            '--rotation-degrees', dest='rotation_degrees', type=float, nargs=2, metavar=('LOW', 'HIGH'),
            help="Augmentation rotation range (-10 10)")
        parser.add_argument(
            '--translation', type=float, nargs=2, metavar=('LOW', 'HIGH'),
            help="Augmentation translation range in canvas units (-0.1 0.1)")
        parser.add_argument(
            '--scale', type=float, nargs=2, metavar=('LOW', 'HIGH'), help="Augmentation scale range (0.9 1.1)")
        parser.add_argument(
            '--pixel-snap', dest='pixel_snap', action='store_true', default=None,
            help="Round augmentation translations onto whole pixels")

    @classmethod
    def get_render_arguments(cls, parser):
        parser.add_argument('--composition', help="color_replace or over (color_replace)")
        parser.add_argument('--supersample', type=int, help="Render on a k-times finer grid and box-average (1)")
        parser.add_argument(
            '--background', type=float, nargs='+', help="Background value, one per channel or a single value (1)")

    @classmethod
    def get_run_config(cls, options):
        return RunConfig.load(options, options.get('config'))

    @classmethod
    def get_workers_argument(cls, parser):
        parser.add_argument(
            '--workers', nargs="?", type=int,
            default=1,
            const=USE_ALL_WORKERS,
            help=(
                "Run properties in parallel worker processes. \n"
                "To use all available workers, simply supply --workers. \n"
                "To use a certain number of workers, supply --workers 8."
            )
        )


StrokefitCommand = Command
