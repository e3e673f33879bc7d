import logging

from django.test import SimpleTestCase

from django_strokefit.utils import strokefit_log


class TestStrokefitLog(SimpleTestCase):

    def test_mp_logging_setup(self):
        strokefit_log.start_multiprocessing_logging()

        self.assertTrue(strokefit_log.mp_logging_enabled)

    def test_logger_has_level_attributes(self):
        logger = strokefit_log.get_logger()
        self.assertEqual(logger.name, 'django_strokefit')
        self.assertEqual(logger.INFO, 20)
        self.assertEqual(logger.ERROR, 40)

    def test_verbosity_levels(self):
        self.assertEqual(strokefit_log.verbosity_to_level(0), logging.WARNING)
        self.assertEqual(strokefit_log.verbosity_to_level(1), logging.INFO)
        self.assertEqual(strokefit_log.verbosity_to_level(3), logging.DEBUG)
        self.assertEqual(strokefit_log.verbosity_to_level(None), logging.INFO)

    def test_log_verbosity_restores_the_level(self):
        logger = strokefit_log.get_logger()
        previous = logger.level
        with strokefit_log.log_verbosity(0):
            self.assertEqual(logger.level, logging.WARNING)
            self.assertFalse(logger.isEnabledFor(logging.INFO))
        self.assertEqual(logger.level, previous)
