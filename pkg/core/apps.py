"""
Core app configuration.
"""

from django.apps import AppConfig


class CoreConfig(AppConfig):
    name = 'core'
    verbose_name = 'Complex Hessian solver'
