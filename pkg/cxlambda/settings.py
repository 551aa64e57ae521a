"""
Django settings for the cxlambda project.

There is no web surface: the project exists to host the ``core`` app, its
management commands and the test runner.
"""

from decouple import config
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='cxlambda-local-only-no-web-surface')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition
INSTALLED_APPS = [
    # Local apps
    'core',
]

# No models; the dummy backend keeps management commands database-free.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Solver defaults (every command option falls back to these)
CXLAMBDA = {
    'SOLVER_TOL': config('CXL_SOLVER_TOL', default=1e-10, cast=float),
    'MAX_SWEEPS': config('CXL_MAX_SWEEPS', default=100000, cast=int),
    'RESIDUAL_TOL': config('CXL_RESIDUAL_TOL', default=1e-6, cast=float),
    'BARRIER_MARGIN': config('CXL_BARRIER_MARGIN', default=0.1, cast=float),
    'DIRECTION_WIDTH': config('CXL_DIRECTION_WIDTH', default=1, cast=int),
    'JET_TOL': config('CXL_JET_TOL', default=5e-2, cast=float),
    'JET_FIT_CAP': config('CXL_JET_FIT_CAP', default=1e3, cast=float),
    'GENERAL_MAX_ITERATIONS': config('CXL_GENERAL_MAX_ITERATIONS', default=100000, cast=int),
    'OPERATOR_SAMPLES': config('CXL_OPERATOR_SAMPLES', default=1000, cast=int),
}

VERSION = '1.0.0'

# Logging
LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'core': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
