# -*- coding: utf-8 -*-
"""
manager.py - Django-facing API for running and recording strokefit commands

Each classmethod builds the FitAction proxy for one command and starts it.
The management commands are thin wrappers around these, so the same runs
can be started from application code:

    from django_strokefit.manager import StrokefitManager
    from django_strokefit.utils.config import RunConfig

    StrokefitManager.sketch('target.png', output_dir='out', run_config=RunConfig(n_strokes=8))
"""

import django.db.utils
from django.db import ProgrammingError, connection

from django_strokefit import get_logger, get_output_dir, record_actions_enabled
from django_strokefit.exceptions import FirstMigrationNotRunError
from django_strokefit.utils.config import RunConfig

logger = get_logger()


class StrokefitManager(object):
    # None until the ledger table has been looked for
    db_ready = None

    @classmethod
    def ledger_table_exists(cls):
        from django_strokefit.models import FitAction
        try:
            return FitAction._meta.db_table in connection.introspection.table_names()
        except (ProgrammingError, django.db.utils.OperationalError):
            # the database isn't available
            return False

    @classmethod
    def ledger_enabled(cls):
        if not record_actions_enabled():
            return False
        if cls.db_ready is None:
            cls.db_ready = cls.ledger_table_exists()
            if not cls.db_ready:
                # non critical; the command still runs
                logger.warning(
                    "Detected an attempt to record a strokefit run "
                    "without calling ./manage.py migrate first. The run will "
                    "not be recorded; call migrate to keep a history of runs."
                )
        return cls.db_ready

    @classmethod
    def post_migrate(cls, sender, **kwargs):
        cls.db_ready = None

    @classmethod
    def _start(cls, action, run_config=None):
        run_config = run_config or RunConfig.load()
        return action.start_action(run_config)

    @classmethod
    def _resolve_output_dir(cls, output_dir):
        return output_dir if output_dir is not None else get_output_dir()

    @classmethod
    def sketch(cls, target_path, saliency_path=None, output_dir=None, run_config=None, verbosity=1):
        """
        Fit strokes to the image at ``target_path``; returns a SketchResult
        """
        # avoid circular import
        from django_strokefit.models import SketchFitAction
        action = SketchFitAction(
            target_path=target_path, saliency_path=saliency_path, output_dir=cls._resolve_output_dir(output_dir),
            verbosity=verbosity, ledger_enabled=cls.ledger_enabled())
        return cls._start(action, run_config)

    @classmethod
    def render(cls, strokes_path, png_path=None, svg_path=None, width=None, height=None, tau=None,
               output_dir=None, run_config=None, verbosity=1):
        from django_strokefit.models import RenderSketchAction
        action = RenderSketchAction(
            strokes_path=strokes_path, png_path=png_path, svg_path=svg_path, width=width, height=height, tau=tau,
            output_dir=cls._resolve_output_dir(output_dir), verbosity=verbosity,
            ledger_enabled=cls.ledger_enabled())
        return cls._start(action, run_config)

    @classmethod
    def init(cls, image_path, saliency_path=None, output_dir=None, run_config=None, verbosity=1):
        from django_strokefit.models import InitStrokesAction
        action = InitStrokesAction(
            image_path=image_path, saliency_path=saliency_path, output_dir=cls._resolve_output_dir(output_dir),
            verbosity=verbosity, ledger_enabled=cls.ledger_enabled())
        return cls._start(action, run_config)

    @classmethod
    def verify(cls, filter_=None, quick=False, workers=1, output_dir=None, run_config=None, verbosity=1):
        """
        Run the property suite; the report's seed is ``run_config.seed``
        """
        from django_strokefit.models import VerifyPropertiesAction
        action = VerifyPropertiesAction(
            filter=filter_, quick=quick, workers=workers, output_dir=cls._resolve_output_dir(output_dir),
            verbosity=verbosity, ledger_enabled=cls.ledger_enabled())
        return cls._start(action, run_config)

    @classmethod
    def list_actions(cls, action=None, status=None, limit=None):
        """
        Recorded runs, most recent first
        """
        from django_strokefit.models import FitAction
        if not cls.ledger_table_exists():
            raise FirstMigrationNotRunError()
        qs = FitAction.objects.order_by('-id')
        if action:
            qs = qs.filter(action=action)
        if status:
            qs = qs.filter(status=status)
        if limit:
            qs = qs[:limit]
        return list(qs)
