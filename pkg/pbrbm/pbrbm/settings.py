"""
Django settings for the pbrbm project.

Generated by 'django-admin startproject' using Django 5.0.6, then trimmed to
what a local simulation harness needs: the run registry database, the
read-only REST view on it, logging, and the solver defaults in ``PB_SOLVER``.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.0/ref/settings/
"""
import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('PBRBM_SECRET_KEY', 'pbrbm-local-only-key-not-for-deployment')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('PBRBM_DEBUG', '0') == '1'

ALLOWED_HOSTS = ['localhost', '127.0.0.1']


# Application definition

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.staticfiles',
    'rest_framework',
    'solver',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'pbrbm.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
            ],
        },
    },
]

WSGI_APPLICATION = 'pbrbm.wsgi.application'


# Database
# The run registry only; simulation data lives in the CSV output directories.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Static files (CSS, JavaScript, Images)

STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': ('rest_framework.permissions.AllowAny',
    ),
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.LimitOffsetPagination',
    'PAGE_SIZE': 20
}


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'solver': {
            'handlers': ['console'],
            'level': os.environ.get('PBRBM_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Solver defaults. Experiment configs override these per run.

PB_SOLVER = {
    'OUTPUT_DIR': BASE_DIR / 'runs',
    'THREADS': 1,
    'BINS_1D': 100,
    'BINS_RADIAL': 60,
    'FRAME_WINDOW': 100,
    'NEWTON_TOL': 1e-10,
    'NEWTON_MAX_ITER': 50,
    'BOUNDARY_CAP': 8,
    'CODE_VERSION': '0.4.0',
}
