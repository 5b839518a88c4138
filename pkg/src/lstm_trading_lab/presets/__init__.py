"""Run presets shipped with LSTM Trading Lab."""

from __future__ import annotations

import json
from importlib import resources
from typing import Any, Dict

from ..errors import ConfigError

PRESET_PACKAGE = "lstm_trading_lab.presets"


def list_presets() -> list[str]:
    names = [
        resource.name.removesuffix(".json")
        for resource in resources.files(PRESET_PACKAGE).iterdir()
        if resource.name.endswith(".json")
    ]
    names.sort()
    return names


def load_preset(name: str) -> Dict[str, Any]:
    """Preset values keyed by `RunConfig` field name; `description` is informational."""

    try:
        data = resources.files(PRESET_PACKAGE).joinpath(f"{name}.json").read_text()
    except (FileNotFoundError, AttributeError) as exc:
        raise ConfigError(
            f"preset '{name}' not found (available: {', '.join(list_presets())})"
        ) from exc
    values = json.loads(data)
    if not isinstance(values, dict):
        raise ConfigError(f"preset '{name}' must be a JSON object")
    values.pop("description", None)
    return values
