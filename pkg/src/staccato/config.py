"""Run configuration: TOML file + command-line overrides -> PipelineConfig.

Files are flat key/value TOML. Every key must name a PipelineConfig
field (or `threads`); unknown keys are rejected so typos cannot
silently fall back to defaults. Precedence: explicit override beats
file value beats field default.
"""

from __future__ import annotations

import dataclasses
import os
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from staccato.detector import PipelineConfig
from staccato.errors import ConfigError

CONFIG_ENV_VAR = "STACCATO_CONFIG"

_PIPELINE_KEYS = {f.name for f in dataclasses.fields(PipelineConfig)}
_EXTRA_KEYS = {"threads"}


def resolve_config_path(cli_value: Optional[str]) -> Optional[str]:
    """The --config value if given, else the environment fallback."""
    if cli_value:
        return cli_value
    return os.environ.get(CONFIG_ENV_VAR) or None


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Parse and validate a flat TOML config file."""
    try:
        with open(path, "rb") as fh:
            values = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    unknown = sorted(set(values) - _PIPELINE_KEYS - _EXTRA_KEYS)
    if unknown:
        raise ConfigError(f"config file {path}: unknown keys {', '.join(unknown)}")
    return values


def build_config(
    file_values: Optional[dict[str, Any]] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> tuple[PipelineConfig, int]:
    """Merge file values and overrides into (PipelineConfig, threads)."""
    merged: dict[str, Any] = dict(file_values or {})
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    unknown = sorted(set(merged) - _PIPELINE_KEYS - _EXTRA_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys {', '.join(unknown)}")
    threads = merged.pop("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads must be a positive integer")
    try:
        cfg = PipelineConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, threads
