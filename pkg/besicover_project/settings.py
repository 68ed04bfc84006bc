"""
Django settings for the besicover project.
Experiment configuration for the covering, concentration and ratio-average library.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project
BASE_DIR = Path(__file__).resolve().parent.parent

# Only used by Django internals; nothing is signed or served.
SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-besicover-key')

DEBUG = os.getenv('DEBUG', 'True') == 'True'

ALLOWED_HOSTS = []


# Application definition
INSTALLED_APPS = [
    # Third-party apps
    'rest_framework',

    # Local apps
    'besicover',
]

# No database: every quantity is computed from the experiment config.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# REST Framework Configuration (serializers and JSON rendering only)
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_RENDERER_CLASSES': (
        'rest_framework.renderers.JSONRenderer',
    ),
    'DEFAULT_PARSER_CLASSES': (
        'rest_framework.parsers.JSONParser',
    ),
}


# Experiment configuration
# BESICOVER_CAP overrides the lattice enumeration cap (number of points).
BESICOVER_BALL_CAP = int(os.getenv('BESICOVER_CAP', 10 ** 8))
BESICOVER_DEFAULT_SEED = int(os.getenv('BESICOVER_SEED', 0))
BESICOVER_THREADS = int(os.getenv('BESICOVER_THREADS', 1))
BESICOVER_DOUBLING_RADII = int(os.getenv('BESICOVER_DOUBLING_RADII', 64))
BESICOVER_PACKING_NODE_CAP = int(os.getenv('BESICOVER_PACKING_NODE_CAP', 2 * 10 ** 6))
BESICOVER_WITNESS_SEARCH_CAP = int(os.getenv('BESICOVER_WITNESS_SEARCH_CAP', 10 ** 5))


# Logging Configuration
# File logging is opt-in so that experiment runs on read-only mounts still work
LOG_TO_FILE = os.getenv('BESICOVER_LOG_FILE') is not None

LOGGING_HANDLERS = {
    'console': {
        'class': 'logging.StreamHandler',
        'formatter': 'verbose',
    },
}

if LOG_TO_FILE:
    LOGGING_HANDLERS['file'] = {
        'class': 'logging.FileHandler',
        'filename': os.path.join(BASE_DIR, 'logs', 'besicover.log'),
        'formatter': 'verbose',
    }

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': LOGGING_HANDLERS,
    'root': {
        'handlers': ['console'],
        'level': 'INFO',
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'] if LOG_TO_FILE else ['console'],
            'level': 'INFO',
            'propagate': False,
        },
        'besicover': {
            'handlers': ['console', 'file'] if LOG_TO_FILE else ['console'],
            'level': os.getenv('BESICOVER_LOG_LEVEL', 'DEBUG'),
            'propagate': False,
        },
        'utils': {
            'handlers': ['console', 'file'] if LOG_TO_FILE else ['console'],
            'level': os.getenv('BESICOVER_LOG_LEVEL', 'DEBUG'),
            'propagate': False,
        },
    },
}

if LOG_TO_FILE:
    # Create logs directory if it doesn't exist
    os.makedirs(os.path.join(BASE_DIR, 'logs'), exist_ok=True)
