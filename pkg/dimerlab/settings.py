from pathlib import Path
import os

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "change-me-please")

DEBUG = os.getenv("DJANGO_DEBUG", "1") == "1"

ALLOWED_HOSTS: list[str] = []

INSTALLED_APPS = [
    "dimers",
]

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {"autoescape": False},
    }
]

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": os.getenv("DIMERS_DATABASE", str(BASE_DIR / "data" / "dimerlab.sqlite3")),
    }
}

LANGUAGE_CODE = "en-us"
TIME_ZONE = os.getenv("DJANGO_TIME_ZONE", "UTC")
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


def _env_number(name: str, default: float | int) -> float | int:
    raw = os.getenv(f"DIMERS_{name}")
    if raw is None or not raw.strip():
        return default
    return type(default)(raw)


# Numeric defaults for the dimer library; every key can be overridden with DIMERS_<KEY>.
DIMERS = {
    key: _env_number(key, value)
    for key, value in {
        "AMOEBA_TOL": 1e-6,
        "AMOEBA_WINDOW": 6.0,
        "AMOEBA_RASTER": 200,
        "RONKIN_TOL": 1e-6,
        "RONKIN_MAX_DEPTH": 8,
        "GAUSS_ORDER": 24,
        "KINV_TOL": 1e-7,
        "KINV_MAX_GRID": 4096,
        "GLAUBER_BURN_IN_SWEEPS": 10,
        "SAMPLER_THREADS": 1,
        "BURGERS_FROZEN_DELTA": 1e-9,
        "MINIMIZER_MAX_ITER": 4000,
        "MINIMIZER_TOL": 1e-7,
        "HEIGHT_CURL_TOL": 1e-2,
        "SEED": 0,
    }.items()
}

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "{levelname} {name}: {message}", "style": "{"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "dimers": {
            "handlers": ["console"],
            "level": os.getenv("DIMERS_LOG_LEVEL", "WARNING"),
        },
    },
}
