import logging
from contextlib import contextmanager

from multiprocessing_logging import install_mp_handler

LOGGER_NAME = "django_strokefit"

# ./manage.py --verbosity: 0 quiet, 1 progress, 2 and 3 every logged optimizer step
VERBOSITY_LEVELS = {
    0: logging.WARNING,
    1: logging.INFO,
    2: logging.DEBUG,
    3: logging.DEBUG,
}

mp_logging_enabled = False


def get_logger(name=LOGGER_NAME):
    real_logger = logging.getLogger(name)
    for level in ['CRITICAL', 'ERROR', 'WARNING', 'INFO', 'DEBUG']:
        setattr(real_logger, level, getattr(logging, level))
    return real_logger


def verbosity_to_level(verbosity):
    if verbosity is None:
        return logging.INFO
    return VERBOSITY_LEVELS.get(int(verbosity), logging.DEBUG)


@contextmanager
def log_verbosity(verbosity, name=LOGGER_NAME):
    """
    Set the level of the strokefit logger from a management command's
    --verbosity for the duration of the block, then restore it.
    """
    real_logger = logging.getLogger(name)
    previous = real_logger.level
    real_logger.setLevel(verbosity_to_level(verbosity))
    try:
        yield real_logger
    finally:
        real_logger.setLevel(previous)


def start_multiprocessing_logging():
    """
    Wrap each handler in a synchronized queue before verification workers
    are forked by StrokefitMultiProcess.__enter__. One-shot for the process.
    :rtype: None
    """
    global mp_logging_enabled

    if not mp_logging_enabled:
        mp_logging_enabled = True
        install_mp_handler()
