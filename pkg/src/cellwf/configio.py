"""Boundary parsing for config documents.

Config files and request bodies are flat JSON objects whose keys match the
dataclass field names. Powers (``p_max``, ``p_transmit``, ``p_circuit``)
are given in dBm at the boundary and converted to watts exactly once,
here. Unknown keys are rejected by name so a misspelled parameter can
never fall back to a silent default.
"""

from __future__ import annotations

from typing import Any

from .model import SystemConfig, dbm_to_watt, watt_to_dbm

__all__ = [
    "ConfigError",
    "SYSTEM_KEYS",
    "parse_system_config",
    "system_to_boundary",
]


class ConfigError(ValueError):
    """A config document failed validation."""


_DBM_KEYS = ("p_max", "p_transmit", "p_circuit")

_INT_KEYS = ("num_bs_antennas", "users_per_cluster", "user_antennas",
             "num_clusters", "rng_seed")

_FLOAT_KEYS = ("p_max", "p_transmit", "p_circuit", "noise_psd", "bandwidth",
               "cell_radius", "min_distance", "path_loss_exponent")

SYSTEM_KEYS = frozenset(_INT_KEYS) | frozenset(_FLOAT_KEYS)


def _coerce_int(key: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'config key "{key}" must be an integer, got {value!r}')
    return value


def _coerce_float(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'config key "{key}" must be a number, got {value!r}')
    return float(value)


def parse_system_config(doc: dict[str, Any]) -> SystemConfig:
    """Build a `SystemConfig` from a flat boundary document."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - SYSTEM_KEYS
    if unknown:
        raise ConfigError(f'unknown config key "{sorted(unknown)[0]}"')

    kwargs: dict[str, Any] = {}
    for key, value in doc.items():
        if key in _INT_KEYS:
            kwargs[key] = _coerce_int(key, value)
        else:
            number = _coerce_float(key, value)
            kwargs[key] = dbm_to_watt(number) if key in _DBM_KEYS else number
    try:
        return SystemConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def system_to_boundary(config: SystemConfig) -> dict[str, Any]:
    """Echo a `SystemConfig` back in boundary units (powers in dBm)."""
    return {
        "num_bs_antennas": config.num_bs_antennas,
        "users_per_cluster": config.users_per_cluster,
        "user_antennas": config.user_antennas,
        "num_clusters": config.num_clusters,
        "p_max": watt_to_dbm(config.p_max),
        "p_transmit": watt_to_dbm(config.p_transmit),
        "p_circuit": watt_to_dbm(config.p_circuit),
        "noise_psd": config.noise_psd,
        "bandwidth": config.bandwidth,
        "cell_radius": config.cell_radius,
        "min_distance": config.min_distance,
        "path_loss_exponent": config.path_loss_exponent,
        "rng_seed": config.rng_seed,
    }
