# -*- coding: utf-8 -*-

import datetime
import json
import os
import sys
import traceback
from typing import NamedTuple

from django.db import models
from django.utils import timezone

from django_strokefit.exceptions import InvalidConfigError, PropertyCheckFailed
from django_strokefit.geometry import CanvasSpec
from django_strokefit.imaging import read_image, read_saliency, write_png
from django_strokefit.initialization import greedy_init, sobel_saliency
from django_strokefit.optimizer import optimize
from django_strokefit.rasterizer import export_svg, render
from django_strokefit.serialization import read_strokes, write_strokes, write_trace
from django_strokefit.utils.multiprocessing_utils import Timer, resolve_num_workers
from django_strokefit.utils.strokefit_log import get_logger, log_verbosity
from django_strokefit.verification import report_table, run_properties

logger = get_logger()

STROKES_FILE = 'strokes.json'
TRACE_FILE = 'trace.json'
SKETCH_PNG_FILE = 'sketch.png'
SKETCH_SVG_FILE = 'sketch.svg'
REPORT_FILE = 'report.json'


class FitAction(models.Model):
    """
    Each FitAction is a record of one management command run:
    fitting a sketch, rendering, initializing strokes or verifying
    properties. To add a new kind of run, add an element to ACTIONS
    and subclass this model with a proxy model, filling in
    perform_action().

    When the ledger is disabled (STROKEFIT_RECORD_ACTIONS is False or
    the database has not been migrated) actions still run and log, but
    nothing is saved.
    """

    STATUS_QUEUED = 'queued'
    STATUS_IN_PROGRESS = 'in_progress'
    STATUS_COMPLETE = 'complete'
    STATUS_ABORTED = 'aborted'
    STATUSES_ALL = [STATUS_QUEUED, STATUS_IN_PROGRESS, STATUS_COMPLETE, STATUS_ABORTED]
    STATUSES_ALL_CHOICES = [(i, i) for i in STATUSES_ALL]

    ACTION_SKETCH = 'sketch'
    ACTION_RENDER = 'render'
    ACTION_INIT = 'init'
    ACTION_VERIFY = 'verify'
    ACTIONS_ALL = [ACTION_SKETCH, ACTION_RENDER, ACTION_INIT, ACTION_VERIFY]
    ACTIONS_ALL_CHOICES = [(i, i) for i in ACTIONS_ALL]

    DEFAULT_ACTION = ACTION_SKETCH

    # which management command was run
    action = models.CharField(choices=ACTIONS_ALL_CHOICES, max_length=64)

    # timing of the management command
    start = models.DateTimeField(auto_now_add=True)
    end = models.DateTimeField(blank=True, null=True)
    last_modified = models.DateTimeField(auto_now=True)

    # state of this operation
    status = models.CharField(choices=STATUSES_ALL_CHOICES, max_length=32, default=STATUS_QUEUED)
    # text from management command
    log = models.TextField(blank=True)

    argv = models.CharField(max_length=1000, blank=True)

    task_kwargs = models.TextField(verbose_name="json of the non-default settings of this run", default="{}")

    output_dir = models.CharField(max_length=1000, blank=True)
    num_strokes = models.IntegerField(default=0)
    final_loss = models.FloatField(null=True, blank=True)

    def __init__(self, *args, **kwargs):
        action = self._meta.get_field('action')
        action.default = self.DEFAULT_ACTION
        self.verbosity = getattr(self, 'verbosity', None) or kwargs.pop('verbosity', 1)
        self.ledger_enabled = kwargs.pop('ledger_enabled', True)
        super(FitAction, self).__init__(*args, **kwargs)
        # command arguments recorded in task_kwargs; set by the proxy models
        self.kwargs = {}

    def __str__(self):
        """
        Get a string representation of this model instance.
        """
        return '<{} in {}, ID: {}>'.format(self.action, self.output_dir or '.', self.id)

    def save(self, *args, **kwargs):
        if self.ledger_enabled:
            super(FitAction, self).save(*args, **kwargs)

    def add_log(self, msg, commit=True, use_self_dict_format=False, level=logger.INFO):
        if use_self_dict_format:
            msg = msg.format(**self.__dict__)
        msg = "[{}]: {}".format(str(datetime.datetime.utcnow()), msg)
        logger.log(level, msg)
        self.log = "{old_log}\n{msg}".format(old_log=self.log, msg=msg)
        if commit:
            self.save()

    def add_logs(self, msgs, commit=True, use_self_dict_format=False, level=logger.INFO):
        for msg in msgs:
            self.add_log(msg, commit=False, use_self_dict_format=use_self_dict_format, level=level)
        if commit:
            self.save()

    def perform_action(self, run_config, *args, **kwargs):
        """
        This is where subclasses do the work of the command
        """
        raise NotImplementedError("override in subclasses")

    def to_in_progress(self):
        self.start = timezone.now()
        self.status = self.STATUS_IN_PROGRESS
        self.argv = " ".join(sys.argv)[:1000]
        self.save()

    def to_complete(self):
        self.status = self.STATUS_COMPLETE
        self.end = timezone.now()
        self.save()

    def to_aborted(self):
        self.status = self.STATUS_ABORTED
        self.end = timezone.now()
        self.save()

    def set_task_kwargs(self, kwargs):
        # recorded to make the history of runs easier to understand
        self.task_kwargs = json.dumps(kwargs, sort_keys=True)

    def get_task_kwargs(self):
        if self.task_kwargs:
            return json.loads(self.task_kwargs)
        return {}

    def get_workers(self, run_config):
        return resolve_num_workers(run_config.threads or None)

    def output_path(self, file_name):
        return os.path.join(self.output_dir, file_name)

    def start_action(self, run_config, *args, **kwargs):
        with log_verbosity(self.verbosity):
            return self._start_action(run_config, *args, **kwargs)

    def _start_action(self, run_config, *args, **kwargs):
        self._run_config = run_config
        task_kwargs = run_config.non_defaults()
        task_kwargs.update({k: v for k, v in self.kwargs.items() if v is not None and v is not False})
        self.set_task_kwargs(task_kwargs)
        self.to_in_progress()
        timer = Timer()
        try:
            result = self.perform_action(run_config, *args, **kwargs)
            self.add_log("{} finished in {:.1f}s".format(self.action, timer.done()))
            self.to_complete()
            return result
        except Exception as ex:
            log_params = {
                "action": self.action,
                "doc": ex.__doc__ or "",
                "msg": str(ex),
                "stack": ''.join(traceback.format_exc())
            }
            msg = (
                "While completing {action}, encountered exception: "
                "\n - message: {msg} "
                "\n - exception doc: {doc} "
                "\n - exception stack: {stack} ".format(**log_params)
            )
            self.add_log(msg, level=logger.ERROR)
            self.to_aborted()
            raise


"""
Helpers shared by the actions below
"""


def _ensure_dir(path):
    if not path:
        return
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise InvalidConfigError("Cannot create output directory {}: {}".format(path, exc))


def _load_target(action, run_config, image_path, saliency_path):
    image = read_image(image_path, topology=run_config.topology)
    action.add_log("Read a {}x{} target with {} channel(s) from {}".format(
        image.canvas.width, image.canvas.height, image.canvas.channels, image_path))
    if saliency_path:
        saliency = read_saliency(saliency_path, image.canvas)
        action.add_log("Read the saliency map from {}".format(saliency_path))
    else:
        saliency = sobel_saliency(image)
        action.add_log("No saliency map given; using Sobel edge magnitude")
    return image, saliency


def _initialize(action, run_config, image, saliency):
    result = greedy_init(saliency, image, run_config.init_config())
    if result.used_fallback:
        action.add_log(
            "The saliency map ran out of mass; some strokes were placed on a uniform map",
            level=logger.WARNING)
    action.num_strokes = len(result.strokes)
    return result


class SketchResult(NamedTuple):
    strokes_path: str
    png_path: str
    svg_path: str
    trace_path: str
    final_loss: float


"""
↓ Proxy Models Below ↓
"""


class SketchFitAction(FitAction):
    """
    Initialize strokes on a target image, fit them with Adam and write
    strokes.json, sketch.png, sketch.svg and trace.json.
    """
    DEFAULT_ACTION = FitAction.ACTION_SKETCH

    def __init__(self, *args, **kwargs):
        self.target_path = kwargs.pop('target_path', None)
        self.saliency_path = kwargs.pop('saliency_path', None)
        super(SketchFitAction, self).__init__(*args, **kwargs)
        self.kwargs = {'target': self.target_path, 'saliency': self.saliency_path}

    class Meta:
        # https://docs.djangoproject.com/en/2.0/topics/db/models/#proxy-models
        proxy = True

    def perform_action(self, run_config, *args, **kwargs):
        workers = self.get_workers(run_config)
        _ensure_dir(self.output_dir)
        image, saliency = _load_target(self, run_config, self.target_path, self.saliency_path)
        init = _initialize(self, run_config, image, saliency)
        self.add_log("Initialized {} strokes; optimizing with {} thread(s)".format(len(init.strokes), workers))

        trace = optimize(image, init.strokes, run_config.optimize_config(), workers=workers)
        final = trace.final
        self.final_loss = final.loss
        canvas = image.canvas

        strokes_path = self.output_path(STROKES_FILE)
        write_strokes(strokes_path, final.strokes, canvas)
        trace_path = self.output_path(TRACE_FILE)
        write_trace(trace_path, trace)
        png_path = self.output_path(SKETCH_PNG_FILE)
        write_png(render(final.strokes, canvas, run_config.render_config(), workers), png_path)
        svg_path = self.output_path(SKETCH_SVG_FILE)
        with open(svg_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(export_svg(final.strokes, canvas))

        self.add_log("Final loss {:.6g} after {} iterations; wrote {}, {}, {} and {}".format(
            final.loss, final.step, strokes_path, png_path, svg_path, trace_path))
        return SketchResult(strokes_path, png_path, svg_path, trace_path, final.loss)


class RenderSketchAction(FitAction):
    """
    Render a strokes.json file to PNG, optionally at another resolution,
    another annealing tau, or with an SVG next to it.
    """
    DEFAULT_ACTION = FitAction.ACTION_RENDER

    def __init__(self, *args, **kwargs):
        self.strokes_path = kwargs.pop('strokes_path', None)
        self.png_path = kwargs.pop('png_path', None)
        self.svg_path = kwargs.pop('svg_path', None)
        self.width = kwargs.pop('width', None)
        self.height = kwargs.pop('height', None)
        self.tau = kwargs.pop('tau', None)
        super(RenderSketchAction, self).__init__(*args, **kwargs)
        self.kwargs = {
            'strokes': self.strokes_path, 'png': self.png_path, 'svg': self.svg_path,
            'width': self.width, 'height': self.height, 'tau': self.tau,
        }

    class Meta:
        proxy = True

    def target_canvas(self, canvas: CanvasSpec) -> CanvasSpec:
        """
        Keep the stored aspect ratio when only one of width and height is given.
        """
        width, height = self.width, self.height
        if width is None and height is None:
            return canvas
        if height is None:
            height = max(1, int(round(width * canvas.height / canvas.width)))
        elif width is None:
            width = max(1, int(round(height * canvas.width / canvas.height)))
        return canvas.resized(width, height)

    def perform_action(self, run_config, *args, **kwargs):
        canvas, strokes = read_strokes(self.strokes_path)
        canvas = self.target_canvas(canvas)
        self.num_strokes = len(strokes)
        tau = 1.0 if self.tau is None else self.tau
        png_path = self.png_path or self.output_path(SKETCH_PNG_FILE)
        _ensure_dir(os.path.dirname(png_path))

        image = render(strokes, canvas, run_config.render_config(tau), self.get_workers(run_config))
        write_png(image, png_path)
        self.add_log("Rendered {} strokes at {}x{} (tau {}) to {}".format(
            len(strokes), canvas.width, canvas.height, tau, png_path))
        if self.svg_path:
            _ensure_dir(os.path.dirname(self.svg_path))
            with open(self.svg_path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(export_svg(strokes, canvas))
            self.add_log("Wrote {}".format(self.svg_path))
        return png_path


class InitStrokesAction(FitAction):
    """
    Write the greedy saliency initialization as strokes.json, without optimizing.
    """
    DEFAULT_ACTION = FitAction.ACTION_INIT

    def __init__(self, *args, **kwargs):
        self.image_path = kwargs.pop('image_path', None)
        self.saliency_path = kwargs.pop('saliency_path', None)
        super(InitStrokesAction, self).__init__(*args, **kwargs)
        self.kwargs = {'image': self.image_path, 'saliency': self.saliency_path}

    class Meta:
        proxy = True

    def perform_action(self, run_config, *args, **kwargs):
        _ensure_dir(self.output_dir)
        image, saliency = _load_target(self, run_config, self.image_path, self.saliency_path)
        result = _initialize(self, run_config, image, saliency)
        strokes_path = self.output_path(STROKES_FILE)
        write_strokes(strokes_path, result.strokes, image.canvas)
        self.add_log("Wrote {} initial strokes to {}".format(len(result.strokes), strokes_path))
        return strokes_path


class VerifyPropertiesAction(FitAction):
    """
    Run the property suite, write report.json and fail if any
    non-informational property does not hold.
    """
    DEFAULT_ACTION = FitAction.ACTION_VERIFY

    def __init__(self, *args, **kwargs):
        self.filter = kwargs.pop('filter', None)
        self.quick = kwargs.pop('quick', False)
        self.workers = kwargs.pop('workers', 1)
        super(VerifyPropertiesAction, self).__init__(*args, **kwargs)
        self.kwargs = {'filter': self.filter, 'quick': self.quick, 'workers': self.workers}

    class Meta:
        proxy = True

    def perform_action(self, run_config, *args, **kwargs):
        _ensure_dir(self.output_dir)
        report = run_properties(self.filter, seed=run_config.seed, quick=self.quick, workers=self.workers)
        report_path = self.output_path(REPORT_FILE)
        with open(report_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(json.dumps(report, indent=2) + "\n")

        failed = [p['name'] for p in report['properties'] if not p['passed'] and not p['informational']]
        self.num_strokes = 0
        self.add_log("Property summary:\n{}".format(report_table(report)))
        self.add_log("{} of {} properties held; wrote {}".format(
            len(report['properties']) - len(failed), len(report['properties']), report_path))
        if failed:
            self.add_log("Failed: {}".format(", ".join(failed)), level=logger.ERROR)
            raise PropertyCheckFailed()
        return report

