"""
App configuration for the besicover application.
"""

from django.apps import AppConfig


class BesicoverConfig(AppConfig):
    """Configuration for besicover app."""
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'besicover'
    verbose_name = 'Besicovitch Covering Experiments'
