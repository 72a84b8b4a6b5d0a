import os
from dotenv import load_dotenv
from pathlib import Path

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-qfilter-lab-local-only')
DEBUG = os.getenv('DJANGO_DEBUG', 'False') == 'True'
ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',

    # Third party
    'rest_framework',

    # Our apps
    'core',
    'operator_algebra',
    'multi_index',
    'stratonovich_taylor',
    'manifold_geometry',
    'quantum_filters',
    'harness',
]

# Nothing is persisted; the database only exists so Django's own apps can load.
DATABASES = {
    'default': {
        'ENGINE': os.getenv('DB_ENGINE', 'django.db.backends.sqlite3'),
        'NAME': os.getenv('DB_NAME', str(BASE_DIR / 'qfilter_lab.sqlite3')),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Logging
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
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.getenv('QFILTER_LOG_LEVEL', 'INFO'),
    },
}

# Numerical laboratory configuration
# Every tolerance used by the numerical apps lives here; read it through core.conf.lab_settings.
QFILTER = {
    'VERSION': '1.0.0',

    # Operator invariants
    'HERMITIAN_RTOL': 1e-10,
    'HAMILTONIAN_RTOL': 1e-12,
    'OUTPUT_HERMITIAN_TOL': 1e-12,
    'TRACE_TOL': 1e-8,
    'EIGEN_FLOOR': -1e-8,
    'TRACE_FLOOR': 1e-300,
    'COMMUTE_TOL': 1e-10,
    'GENERATOR_HERMITIAN_TOL': 1e-12,

    # Chart / metric
    'THETA_BOX': 50.0,
    'SINGULAR_RATIO': 1e-12,
    'SPECTRAL_GROUPING_TOL': 1e-9,

    # Combinatorial guards
    'MAX_LAMBDA_ORDER': 16,
    'MAX_INTEGRAL_LENGTH': 6,
    'MAX_EXPANSION_ORDER': 4,
    'MAX_MATRIX_DIM': 32,

    # Monte Carlo
    'FINE_FACTOR': 16,
    'MAX_FAILED_FRACTION': 0.01,
    'WORKERS': int(os.getenv('QFILTER_WORKERS', 1)),
    'OUTPUT_DIR': os.getenv('QFILTER_OUTPUT_DIR', str(BASE_DIR / 'runs')),
    'SCENARIO_DIR': BASE_DIR / 'harness' / 'scenarios',
}
