"""
Pytest wiring for the Django test suite.

Mirrors what ``./manage.py test`` does: configure ``test_settings``, set up
the test environment and create the test databases for the session.
"""

import os

import django


def pytest_configure(config):  # pylint: disable=unused-argument
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'test_settings')
    django.setup()


def pytest_sessionstart(session):
    from django.test.utils import setup_databases, setup_test_environment  # pylint: disable=import-outside-toplevel
    setup_test_environment()
    session.django_db_config = setup_databases(verbosity=0, interactive=False)


def pytest_sessionfinish(session, exitstatus):  # pylint: disable=unused-argument
    from django.test.utils import teardown_databases, teardown_test_environment  # pylint: disable=import-outside-toplevel
    db_config = getattr(session, 'django_db_config', None)
    if db_config is not None:
        teardown_databases(db_config, verbosity=0)
    teardown_test_environment()
