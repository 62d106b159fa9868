from __future__ import annotations

import json
from pathlib import Path

import pytest

from refineflow import Recipe, Table, infer_initial_schema, parse_recipe, trace_effects

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def menus_text() -> str:
    return (FIXTURES / "menus_recipe.json").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def menus_recipe(menus_text) -> Recipe:
    return parse_recipe(menus_text, source_name="menus_recipe.json")


@pytest.fixture(scope="session")
def menus_trace(menus_recipe):
    """(effects, schemas) of the menus recipe over its inferred schema."""
    initial = infer_initial_schema(menus_recipe)
    return trace_effects(menus_recipe, initial)


@pytest.fixture(scope="session")
def menus_table() -> Table:
    return Table.from_csv((FIXTURES / "menus_sample.csv").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def mass_edit_recipe() -> Recipe:
    text = (FIXTURES / "mass_edit_run.json").read_text(encoding="utf-8")
    return parse_recipe(text, source_name="mass_edit_run.json")


def make_recipe(entries: list[dict]) -> Recipe:
    """Build a Recipe through the real parser from JSON-shaped entries."""
    return parse_recipe(json.dumps(entries))
