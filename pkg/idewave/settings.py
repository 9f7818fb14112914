"""
Django settings for the idewave project.

idewave has no database and no web surface: Django provides settings,
logging configuration, the management-command CLI and form validation.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import environ

# Initialize environment variables
env = environ.Env(
    DEBUG=(bool, False),
    IDEWAVE_THREADS=(int, 1),
    IDEWAVE_LOG_LEVEL=(str, 'INFO'),
    IDEWAVE_LOG_FILE=(str, ''),
    IDEWAVE_KERNEL_RADIUS_CAP=(float, 200.0),
    IDEWAVE_MASS_TOL=(float, 1e-12),
    IDEWAVE_SEED=(int, 20240601),
)

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Take environment variables from .env file
environ.Env.read_env(BASE_DIR / '.env')

# Nothing is signed or served; the key only satisfies Django's startup checks.
SECRET_KEY = env('SECRET_KEY', default='idewave-local-only')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'waves',
]

DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Numerics
# Upper bound on worker threads for verification sweeps and trajectory batches.
IDEWAVE_THREADS = max(1, env('IDEWAVE_THREADS'))
# Largest truncation half-length a discretized kernel may need.
IDEWAVE_KERNEL_RADIUS_CAP = env('IDEWAVE_KERNEL_RADIUS_CAP')
# Default kernel tail mass dropped by discretization.
IDEWAVE_MASS_TOL = env('IDEWAVE_MASS_TOL')
# Seed for every sampling-based check unless a run overrides it.
IDEWAVE_SEED = env('IDEWAVE_SEED')

# Logging
# Reports go to stdout, so every handler writes to stderr or a file.
LOG_LEVEL = env('IDEWAVE_LOG_LEVEL').upper()
LOG_FILE = env('IDEWAVE_LOG_FILE')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': True,
        },
        'waves': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'level': 'DEBUG',
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'simple',
    }
    LOGGING['loggers']['waves']['handlers'].append('file')
