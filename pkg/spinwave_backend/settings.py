"""
Django settings for spinwave_backend project.

Runtime knobs for the sweep harness and the JSON API are read from the
environment (a local .env file is loaded first); see env_example.txt.

https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-spinwave-development-key-change-me')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.getenv('DEBUG', 'True').lower() == 'true'

allowed_hosts_str = os.getenv('ALLOWED_HOSTS', 'localhost,127.0.0.1,.railway.app,.up.railway.app,.onrender.com')
ALLOWED_HOSTS = [host.strip() for host in allowed_hosts_str.split(',') if host.strip()]


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'corsheaders',
    'entanglement',
]

MIDDLEWARE = [
    'corsheaders.middleware.CorsMiddleware',
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'spinwave_backend.urls'

TEMPLATES = []

WSGI_APPLICATION = 'spinwave_backend.wsgi.application'


# Nothing is persisted beyond output files
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework settings
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
}

# CORS settings
cors_origins_str = os.getenv('CORS_ALLOWED_ORIGINS', 'http://localhost:3000,http://127.0.0.1:3000')
CORS_ALLOWED_ORIGINS = [origin.strip() for origin in cors_origins_str.split(',') if origin.strip()]
CORS_ALLOW_ALL_ORIGINS = DEBUG  # Allow all origins in development
CORS_ALLOWED_METHODS = [
    'GET',
    'OPTIONS',
    'POST',
]

# Sweep harness
SPINWAVE_THREADS = int(os.getenv('SPINWAVE_THREADS', '0'))  # 0 = one per CPU
SPINWAVE_DEFAULT_STEPS = int(os.getenv('SPINWAVE_DEFAULT_STEPS', '4000'))
SPINWAVE_DEFAULT_PERIODS = float(os.getenv('SPINWAVE_DEFAULT_PERIODS', '2.0'))
SPINWAVE_N_ATOMS = int(float(os.getenv('SPINWAVE_N_ATOMS', '1e6')))
SPINWAVE_FOCK_QUANTA = int(os.getenv('SPINWAVE_FOCK_QUANTA', '30'))
SPINWAVE_EDGE_THRESHOLD = float(os.getenv('SPINWAVE_EDGE_THRESHOLD', '1e-6'))
SPINWAVE_OUTPUT_DIR = Path(os.getenv('SPINWAVE_OUTPUT_DIR', BASE_DIR / 'output'))
SPINWAVE_LOG_LEVEL = os.getenv('SPINWAVE_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'entanglement': {
            'handlers': ['console'],
            'level': SPINWAVE_LOG_LEVEL,
            'propagate': False,
        },
    },
}
