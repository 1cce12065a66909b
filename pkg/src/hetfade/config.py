"""JSON experiment configuration.

Schema::

    {"alpha": 4,
     "tiers": [{"density": 1, "power": 1}, {"density": 2, "power": 2}],
     "fading": {"type": "nakagami", "m": 1, "omega": 1}}

``omega`` defaults to 1 when omitted; every other field is required.
"""

from __future__ import annotations

import json
import math

from .association import NetworkConfig, TierConfig
from .fading import NakagamiFading

__all__ = ["ConfigError", "parse_config", "load_config", "config_echo", "FIG1_CONFIG"]

FIG1_CONFIG = {
    "alpha": 4,
    "tiers": [{"density": 1, "power": 1}, {"density": 2, "power": 2}],
    "fading": {"type": "nakagami", "m": 1, "omega": 1},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite, got {value!r}")
    return float(value)


def _positive(value, where: str) -> float:
    x = _number(value, where)
    if not x > 0:
        raise ConfigError(f"{where} must be > 0, got {value!r}")
    return x


def parse_config(text: str) -> tuple[NetworkConfig, NakagamiFading]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw) -> tuple[NetworkConfig, NakagamiFading]:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("alpha", "tiers", "fading"):
        if key not in raw:
            raise ConfigError(f"{key}: missing required field")
    unknown = set(raw) - {"alpha", "tiers", "fading"}
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {', '.join(sorted(unknown))}")

    alpha = _number(raw["alpha"], "alpha")
    if not alpha > 2:
        raise ConfigError(f"alpha must exceed 2, got {raw['alpha']!r}")

    tiers_raw = raw["tiers"]
    if not isinstance(tiers_raw, list):
        raise ConfigError("tiers: expected a list")
    if not tiers_raw:
        raise ConfigError("tiers: at least one tier is required")
    tiers = []
    for i, t in enumerate(tiers_raw):
        if not isinstance(t, dict):
            raise ConfigError(f"tiers[{i}]: expected an object")
        for key in ("density", "power"):
            if key not in t:
                raise ConfigError(f"tiers[{i}].{key}: missing required field")
        tiers.append(TierConfig(_positive(t["density"], f"tiers[{i}].density"),
                                _positive(t["power"], f"tiers[{i}].power")))

    fading = raw["fading"]
    if not isinstance(fading, dict):
        raise ConfigError("fading: expected an object")
    kind = fading.get("type")
    if kind != "nakagami":
        raise ConfigError(f"fading.type: only 'nakagami' is supported, got {kind!r}")
    if "m" not in fading:
        raise ConfigError("fading.m: missing required field")
    m = _positive(fading["m"], "fading.m")
    omega = _positive(fading.get("omega", 1.0), "fading.omega")
    return NetworkConfig(tuple(tiers), alpha), NakagamiFading(m, omega)


def load_config(path: str) -> tuple[NetworkConfig, NakagamiFading]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return parse_config(text)


def config_echo(config: NetworkConfig, model: NakagamiFading) -> dict:
    return {
        "alpha": config.alpha,
        "tiers": [{"density": t.density, "power": t.power} for t in config.tiers],
        "fading": {"type": "nakagami", "m": model.m, "omega": model.omega},
    }
