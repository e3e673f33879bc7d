from typing import NamedTuple

from texttable import Texttable

from django_strokefit.management.commands.strokefit import StrokefitCommand
from django_strokefit.manager import StrokefitManager
from django_strokefit.models import FitAction
from django_strokefit.utils.strokefit_log import get_logger

log = get_logger()

"""
Data model for making a row of the output table from ./manage.py strokefit_list
"""
StrokefitListRow = NamedTuple(
    'StrokefitListRow', [
        ('id', int),
        ('action', str),
        ('status', str),
        ('start', str),
        ('seconds', str),
        ('strokes', int),
        ('final_loss', str),
        ('output_dir', str),
    ]
)


def _row(fit_action):
    seconds = ""
    if fit_action.end and fit_action.start:
        seconds = "{:.1f}".format((fit_action.end - fit_action.start).total_seconds())
    final_loss = "" if fit_action.final_loss is None else "{:.6g}".format(fit_action.final_loss)
    return StrokefitListRow(
        fit_action.id,
        fit_action.action,
        fit_action.status,
        fit_action.start.strftime('%Y-%m-%d %H:%M:%S') if fit_action.start else "",
        seconds,
        fit_action.num_strokes,
        final_loss,
        fit_action.output_dir,
    )


class Command(StrokefitCommand):
    help = "django-strokefit: list recorded runs"

    def add_arguments(self, parser):
        parser.add_argument('--action', choices=FitAction.ACTIONS_ALL, help="Only list runs of this command")
        parser.add_argument('--status', choices=FitAction.STATUSES_ALL, help="Only list runs with this status")
        parser.add_argument('--limit', type=int, default=20, help="Show at most this many runs; 0 shows all (20)")

    def handle(self, *args, **options):
        log.info("Recorded strokefit runs:")
        fit_actions = StrokefitManager.list_actions(
            action=options.get('action'), status=options.get('status'), limit=options.get('limit'))

        table = Texttable(max_width=110)
        table.header(["ID", "Action", "Status", "Started", "Seconds", "Strokes", "Final Loss", "Output Dir"])
        table.set_cols_width([5, 7, 11, 19, 8, 7, 10, 25])
        table.set_cols_dtype(['i', 't', 't', 't', 't', 'i', 't', 't'])
        [table.add_row(_row(fit_action)) for fit_action in fit_actions]

        log.info(table.draw())
        if not fit_actions:
            log.info("No runs recorded yet. Runs are recorded when STROKEFIT_RECORD_ACTIONS is True.")
