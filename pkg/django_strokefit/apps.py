# -*- coding: utf-8 -*-

"""
django_strokefit Django application initialization.
"""

from django.apps import AppConfig


class DjangoStrokefitConfig(AppConfig):
    """
    Configuration for the django_strokefit Django application.
    """

    name = 'django_strokefit'
    verbose_name = 'Stroke fitting'
    default_auto_field = 'django.db.models.AutoField'

    def ready(self):
        # avoid race condition with django app initialization
        from django.db.models.signals import post_migrate
        from django_strokefit.manager import StrokefitManager
        post_migrate.connect(StrokefitManager.post_migrate, sender=self)
