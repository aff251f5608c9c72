"""
Configuration management for posecast.

Handles loading process settings from environment variables (optionally a
``.env`` file) and the validation helpers shared by the typed config objects.
"""

import os
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional

from dotenv import load_dotenv


class ConfigError(Exception):
    """Raised when configuration is invalid or missing."""
    pass


def _positive_int_from_env(env_var_name: str) -> Optional[int]:
    """
    Read an optional positive integer from the environment.

    Args:
        env_var_name: Environment variable name

    Returns:
        Parsed value, or None when the variable is unset or empty

    Raises:
        ConfigError: If the value is not a positive integer
    """
    raw = os.getenv(env_var_name, "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{env_var_name} must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"{env_var_name} must be >= 1, got {value}")
    return value


def load_settings(env_file: Optional[Path] = None) -> Dict[str, Any]:
    """
    Load process-level settings from environment variables.

    Args:
        env_file: Optional .env file; defaults to ``.env`` in the working directory

    Returns:
        Dictionary with ``log_level``, ``log_file`` and ``threads``

    Raises:
        ConfigError: If a setting has an invalid value
    """
    env_path = env_file or Path(".env")
    if env_path.exists():
        load_dotenv(env_path)

    log_file = os.getenv("POSECAST_LOG_FILE")
    settings = {
        "log_level": os.getenv("POSECAST_LOG_LEVEL", "INFO").upper(),
        "log_file": Path(log_file) if log_file else None,
        # None means "all cores"
        "threads": _positive_int_from_env("POSECAST_THREADS"),
    }

    if settings["log_level"] not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"Unknown POSECAST_LOG_LEVEL: {settings['log_level']}")

    return settings


def reject_unknown_keys(data: Mapping[str, Any], allowed: Iterable[str], section: str) -> None:
    """
    Fail on keys a config section does not define.

    Args:
        data: Parsed JSON mapping for the section
        allowed: Field names the section accepts
        section: Dotted path of the section, used in the error message

    Raises:
        ConfigError: If ``data`` is not a mapping or holds an unknown key
    """
    if not isinstance(data, Mapping):
        raise ConfigError(f"{section or 'config'} must be a JSON object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        prefix = f"{section}." if section else ""
        raise ConfigError(
            "Unknown configuration key(s): " + ", ".join(prefix + key for key in unknown)
        )


def require(condition: bool, message: str) -> None:
    """Raise ConfigError with ``message`` unless ``condition`` holds."""
    if not condition:
        raise ConfigError(message)


def get_sample_env() -> str:
    """
    Get sample .env file content.

    Returns:
        Sample .env file content as string
    """
    return """# posecast environment

# Logging
POSECAST_LOG_LEVEL=INFO
# POSECAST_LOG_FILE=logs/posecast.log

# Cap on worker threads (default: all cores)
# POSECAST_THREADS=4
"""
