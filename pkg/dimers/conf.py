from __future__ import annotations

from typing import Any

from django.conf import settings

DEFAULTS: dict[str, Any] = {
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
}


def dimers_setting(name: str) -> Any:
    if name not in DEFAULTS:
        raise KeyError(f"Unknown dimers setting: {name}")
    configured = getattr(settings, "DIMERS", None) or {}
    return configured.get(name, DEFAULTS[name])


def resolve(name: str, value: Any) -> Any:
    """Return ``value`` unless it is None, in which case the configured setting."""
    if value is None:
        return dimers_setting(name)
    return value


__all__ = ["DEFAULTS", "dimers_setting", "resolve"]
