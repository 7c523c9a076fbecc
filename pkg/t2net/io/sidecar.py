"""
Flat ``key: value`` text files, one pair per line, ``#`` comments.

The format is a strict subset of YAML, so reading goes through
``yaml.safe_load``; nested values are rejected.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from enum import Enum
from pathlib import Path

import yaml

from t2net.errors import ArtifactFormatError

logger = logging.getLogger("t2net.io.sidecar")

Scalar = str | int | float | bool | None


def _format_float(value: float) -> str:
    # YAML 1.1 floats need a dot before the exponent ("1.0e-08", not "1e-08")
    if math.isnan(value):
        return ".nan"
    if math.isinf(value):
        return ".inf" if value > 0 else "-.inf"
    text = repr(value)
    if "e" in text and "." not in text:
        mantissa, exponent = text.split("e")
        text = f"{mantissa}.0e{exponent}"
    return text


def _format_value(value: object) -> str:
    if isinstance(value, Enum):
        value = value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, float):
        return _format_float(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)


def dump_sidecar(values: Mapping[str, object], header: str = "") -> str:
    lines = [f"# {line}" for line in header.splitlines()]
    lines.extend(f"{key}: {_format_value(value)}" for key, value in values.items())
    return "\n".join(lines) + "\n"


def parse_sidecar(text: str, source: str = "<text>") -> dict[str, Scalar]:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ArtifactFormatError(f"{source}: not a key/value file: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ArtifactFormatError(f"{source}: expected 'key: value' lines")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ArtifactFormatError(f"{source}: nested value for key '{key}'")
    return {str(k): v for k, v in data.items()}


def write_sidecar(path: Path | str, values: Mapping[str, object], header: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_sidecar(values, header), encoding="utf-8")
    return path


def read_sidecar(path: Path | str) -> dict[str, Scalar]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Sidecar file not found: {path}")
    return parse_sidecar(path.read_text(encoding="utf-8"), source=str(path))
