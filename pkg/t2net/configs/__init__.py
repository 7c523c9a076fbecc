"""Bundled run presets (desk-scale and full-size) and the config loader."""

from t2net.configs.loader import available_presets, load_config, load_preset

__all__ = ["available_presets", "load_config", "load_preset"]
