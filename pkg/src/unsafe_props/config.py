"""Default data-path resolution for the CLI and the language server.

Paths resolve in precedence order: explicit flag, config file entry,
environment variable (UNSAFE_PROPS_*), packaged seed data. The config file
``unsafe-props.toml`` is searched in the working directory, then the user
config directory; relative entries resolve against the file's location.
"""

from __future__ import annotations

import os
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import DataFormatError

ENV_PREFIX = "UNSAFE_PROPS_"
CONFIG_FILENAME = "unsafe-props.toml"

PATH_KEYS = ("catalog", "database", "cves", "safe_names")

_PACKAGED = {
    "catalog": "catalog.toml",
    "database": "seed_db.toml",
    "cves": "seed_cves.toml",
    "safe_names": "safe_names.txt",
}


def packaged_data_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name


def user_config_dir() -> Path:
    xdg = os.environ.get("XDG_CONFIG_HOME")
    base = Path(xdg) if xdg else Path.home() / ".config"
    return base / "unsafe-props"


def find_config_file(explicit: Path | None = None) -> Path | None:
    if explicit is not None:
        return explicit
    for candidate in (Path.cwd() / CONFIG_FILENAME, user_config_dir() / CONFIG_FILENAME):
        if candidate.is_file():
            return candidate
    return None


def _load_config_paths(config_path: Path) -> dict[str, Path]:
    try:
        doc = tomllib.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise DataFormatError(f"unreadable config file: {exc}", str(config_path)) from None
    paths = doc.get("paths", {})
    resolved: dict[str, Path] = {}
    for key in PATH_KEYS:
        value = paths.get(key)
        if isinstance(value, str) and value:
            resolved[key] = (config_path.parent / value).resolve()
    return resolved


def resolve_data_paths(
    explicit_config: Path | None = None, overrides: dict[str, Path] | None = None
) -> dict[str, Path]:
    """Final path per data file kind, honoring the precedence order."""
    result = {key: packaged_data_path(name) for key, name in _PACKAGED.items()}
    for key in PATH_KEYS:
        env_value = os.environ.get(ENV_PREFIX + key.upper())
        if env_value:
            result[key] = Path(env_value)
    config_path = find_config_file(explicit_config)
    if config_path is not None:
        result.update(_load_config_paths(config_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            result[key] = Path(value)
    return result
