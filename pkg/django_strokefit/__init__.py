"""
Fit cubic Bezier strokes to images in Django.
"""

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from django_strokefit.utils import loading
from django_strokefit.utils.strokefit_log import get_logger

__version__ = '0.1.0'

logger = get_logger()

THREADS_ENVIRONMENT_VARIABLE = 'STROKEFIT_THREADS'


def get_setting(name, default=None):
    """
    Read a STROKEFIT_* Django setting, falling back to ``default``
    when the setting is absent or Django settings are not configured,
    as when the numerical modules are used outside of a project.
    """
    try:
        return getattr(settings, name, default)
    except ImproperlyConfigured:
        return default


def get_defaults():
    """
    Flag defaults from STROKEFIT_DEFAULTS, e.g. ``{'n_strokes': 24, 'lr': 0.05}``
    """
    return dict(get_setting('STROKEFIT_DEFAULTS', {}) or {})


def get_output_dir():
    return get_setting('STROKEFIT_OUTPUT_DIR', '.') or '.'


def record_actions_enabled():
    return bool(get_setting('STROKEFIT_RECORD_ACTIONS', True))


_external_metric_cache = {}


def get_external_metric():
    """
    Load the object named by STROKEFIT_EXTERNAL_METRIC, or None if unset.
    The object must be callable as ``metric(target, sketch) -> float``
    on H x W x C arrays; an ``adjoint(target, sketch)`` method is required
    to optimize against it.
    """
    path = get_setting('STROKEFIT_EXTERNAL_METRIC', '')
    if not path:
        return None
    if path not in _external_metric_cache:
        try:
            _external_metric_cache[path] = loading.import_module_element(path)
        except ImportError:
            logger.error(
                "STROKEFIT_EXTERNAL_METRIC {} not found. Please check your python path "
                "and django settings".format(path))
            raise
    return _external_metric_cache[path]
