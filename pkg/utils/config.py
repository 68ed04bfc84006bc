"""
Access to experiment settings that also works when Django is not configured.
"""

import os

from django.conf import settings

DEFAULTS = {
    'BESICOVER_BALL_CAP': 10 ** 8,
    'BESICOVER_DEFAULT_SEED': 0,
    'BESICOVER_THREADS': 1,
    'BESICOVER_DOUBLING_RADII': 64,
    'BESICOVER_PACKING_NODE_CAP': 2 * 10 ** 6,
    'BESICOVER_WITNESS_SEARCH_CAP': 10 ** 5,
}

ENV_NAMES = {
    'BESICOVER_BALL_CAP': 'BESICOVER_CAP',
    'BESICOVER_DEFAULT_SEED': 'BESICOVER_SEED',
}


def get_setting(name):
    """
    Read an integer experiment setting.

    Django settings win when configured; otherwise the environment variable
    (see ENV_NAMES) and finally the built-in default.
    """
    if settings.configured:
        value = getattr(settings, name, None)
        if value is not None:
            return int(value)
    env_value = os.getenv(ENV_NAMES.get(name, name))
    if env_value is not None:
        return int(env_value)
    return DEFAULTS[name]


def ball_cap():
    return get_setting('BESICOVER_BALL_CAP')
