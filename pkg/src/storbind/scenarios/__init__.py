"""Bundled example scenarios, shipped as package data."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def scenario_path(name: str) -> Path:
    """Filesystem path of a bundled scenario, e.g. scenario_path("table3")."""
    if not name.endswith(".yaml"):
        name = f"{name}.yaml"
    with resources.as_file(resources.files(__name__) / name) as path:
        return path


def bundled_names() -> list[str]:
    """Names of all bundled scenarios, without the .yaml suffix."""
    return sorted(
        entry.name[: -len(".yaml")]
        for entry in resources.files(__name__).iterdir()
        if entry.name.endswith(".yaml")
    )
