"""JSON schemas for the reports and model files the package emits."""

from __future__ import annotations

import json
from importlib import resources

SCHEMA_NAMES = ("fairness_report", "fairness_reports", "model", "suite_report")


def load_schema(name: str) -> dict:
    """Load ``<name>.schema.json`` shipped with the package."""
    if name not in SCHEMA_NAMES:
        raise KeyError(f"unknown schema {name!r}")
    text = resources.files(__name__).joinpath(f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def all_schemas() -> dict[str, dict]:
    return {name: load_schema(name) for name in SCHEMA_NAMES}
