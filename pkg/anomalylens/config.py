"""Configuration management for anomalylens."""

import json
import os
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict

from .types import Settings

HOME_ENV = "ANOMALY_LENS_HOME"
CEILING_ENV = "ANOMALY_LENS_CEILING"

_SYSTEMS = ("simplified", "fine")
_LEVELS = {"simplified": ("NRW", "NA"), "fine": ("NW", "NRW", "NPA", "NA")}


def get_config_dir() -> Path:
    """Get the configuration directory path."""
    override = os.environ.get(HOME_ENV)
    if override:
        return Path(override)
    # Windows: %USERPROFILE%\.anomalylens
    if os.name == "nt":
        userprofile = os.environ.get("USERPROFILE")
        if userprofile:
            return Path(userprofile) / ".anomalylens"
    return Path.home() / ".anomalylens"


def get_config_path() -> Path:
    """Get the path to the config file."""
    return get_config_dir() / "config.json"


def ensure_config_dir() -> None:
    """Ensure the configuration directory exists."""
    get_config_dir().mkdir(parents=True, exist_ok=True)


def validate_settings(settings: Settings) -> Settings:
    """Range-check settings. Raises ValueError naming the offending field."""
    if settings.ceiling < 0:
        raise ValueError(f"ceiling must be >= 0, got {settings.ceiling}")
    if settings.cycle_limit < 1:
        raise ValueError(f"cycle_limit must be >= 1, got {settings.cycle_limit}")
    if settings.system not in _SYSTEMS:
        raise ValueError(f"system must be one of {', '.join(_SYSTEMS)}, got {settings.system!r}")
    if settings.level not in _LEVELS[settings.system]:
        raise ValueError(f"level {settings.level!r} is not a {settings.system} level")
    for name in ("write_ratio", "abort_ratio"):
        value = getattr(settings, name)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be within [0, 1], got {value}")
    if settings.zipf_s < 0:
        raise ValueError(f"zipf_s must be >= 0, got {settings.zipf_s}")
    return settings


def load_config() -> Settings:
    """Load settings from the config file, defaults when it does not exist."""
    config_path = get_config_path()
    if not config_path.exists():
        return Settings()

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ValueError("top level must be an object")
        return validate_settings(Settings.from_dict(data.get("settings", {})))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ValueError(f"Invalid config file: {e}")


def save_config(settings: Settings) -> None:
    """Save settings to the config file."""
    ensure_config_dir()
    data = {"settings": validate_settings(settings).to_dict()}
    with open(get_config_path(), "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)


def apply_env(settings: Settings) -> Settings:
    """Apply environment overrides on top of the file settings."""
    raw = os.environ.get(CEILING_ENV)
    if raw:
        try:
            settings.ceiling = int(raw)
        except ValueError:
            raise ValueError(f"{CEILING_ENV} must be an integer, got {raw!r}")
    return settings


def effective_settings() -> Settings:
    """File settings with environment overrides applied. CLI flags are applied by callers."""
    return apply_env(load_config())


def setting_names() -> list:
    return [f.name for f in fields(Settings)]


def set_setting(settings: Settings, name: str, value: str) -> Settings:
    """Set one field from its string form, coercing to the field's type."""
    if name not in setting_names():
        raise ValueError(f"Unknown setting {name!r}. Known: {', '.join(setting_names())}")
    current: Any = getattr(settings, name)
    coerced: Any
    if isinstance(current, bool):
        lowered = value.strip().lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{name} expects true or false, got {value!r}")
        coerced = lowered in ("true", "1", "yes")
    elif isinstance(current, int):
        try:
            coerced = int(value)
        except ValueError:
            raise ValueError(f"{name} expects an integer, got {value!r}")
    elif isinstance(current, float):
        try:
            coerced = float(value)
        except ValueError:
            raise ValueError(f"{name} expects a number, got {value!r}")
    else:
        coerced = value
    data: Dict[str, Any] = settings.to_dict()
    data[name] = coerced
    return validate_settings(Settings.from_dict(data))
