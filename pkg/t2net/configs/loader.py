"""
Run-config loader: bundled presets and user config files.

Usage:
    from t2net.configs.loader import load_config

    cfg = load_config("desk")                 # bundled preset
    cfg = load_config("runs/small.txt")       # any flat key: value file
    cfg = load_config("desk", {"steps": 20})  # with overrides

Presets live next to this module as <name>.yaml and are cached after the
first read.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from pathlib import Path

from pydantic import ValidationError

from t2net.errors import ParameterError
from t2net.io.sidecar import parse_sidecar
from t2net.models.configs import TrainConfig

logger = logging.getLogger("t2net.configs")

_CONFIGS_DIR = Path(__file__).resolve().parent
_CACHE: dict[str, dict] = {}

DEFAULT_PRESET = "desk"


def available_presets() -> list[str]:
    return sorted(p.stem for p in _CONFIGS_DIR.glob("*.yaml"))


def load_preset(name: str) -> dict:
    """Raw key/value mapping of a bundled preset."""
    if name not in _CACHE:
        path = _CONFIGS_DIR / f"{name}.yaml"
        if not path.is_file():
            raise ParameterError(
                f"Unknown preset '{name}'. Available: {', '.join(available_presets())}"
            )
        _CACHE[name] = parse_sidecar(path.read_text(encoding="utf-8"), source=str(path))
        logger.debug("Loaded preset %s", name)
    return dict(_CACHE[name])


def read_config_values(source: str | Path) -> dict:
    """Key/value mapping from a preset name or a config file path."""
    path = Path(source)
    if path.is_file():
        return parse_sidecar(path.read_text(encoding="utf-8"), source=str(path))
    if path.suffix or path.parent != Path("."):
        raise FileNotFoundError(f"Config file not found: {source}")
    return load_preset(str(source))


def load_config(
    source: str | Path | None = None,
    overrides: Mapping[str, object] | None = None,
) -> TrainConfig:
    """Validated ``TrainConfig``; unknown keys are rejected."""
    values = read_config_values(source or DEFAULT_PRESET)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return TrainConfig.from_flat(values)
    except ValidationError as e:
        raise ParameterError(f"Invalid config {source or DEFAULT_PRESET}: {e}") from e
