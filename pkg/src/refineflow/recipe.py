"""Parsing and validation of exported OpenRefine operation histories.

The input is the JSON document produced by OpenRefine's "Extract" dialog:
a top-level array of operation objects, each with an "op" identifier,
an optional "description", and operation-specific parameter keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import RecipeError


@dataclass(frozen=True)
class RawOperation:
    """One entry of an operation history, with its parameters kept verbatim.

    ``params`` holds every key of the original JSON object except "op",
    so nothing an unknown or extended operation recorded is lost.
    """

    op_id: str
    index: int
    params: dict = field(default_factory=dict)
    description: str | None = None


@dataclass(frozen=True)
class Recipe:
    """An ordered operation history. An empty history is valid."""

    operations: tuple[RawOperation, ...] = ()
    source_name: str | None = None

    def __len__(self) -> int:
        return len(self.operations)


@dataclass(frozen=True)
class Diagnostic:
    """A non-fatal finding about a recipe.

    ``error`` severity is reserved for conditions that prevent model
    construction; warnings and infos never affect processing.
    """

    severity: str  # "error" | "warning" | "info"
    code: str
    message: str
    step_index: int | None = None


def parse_recipe(text: str, source_name: str | None = None) -> Recipe:
    """Parse an exported operation history into a :class:`Recipe`.

    Accepts the usual top-level array, or a single operation object which
    is treated as a one-element history (tolerates hand-edited fixtures).

    Raises :class:`RecipeError` with code ``malformed-json``,
    ``not-an-array`` or ``missing-op-field``.
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecipeError("malformed-json", f"input is not valid JSON: {exc}") from exc

    if isinstance(document, dict):
        document = [document]
    if not isinstance(document, list):
        raise RecipeError(
            "not-an-array",
            f"top-level JSON value must be an array of operations, got {type(document).__name__}",
        )

    operations = []
    for index, entry in enumerate(document):
        if not isinstance(entry, dict):
            raise RecipeError(
                "missing-op-field",
                f'entry {index} is not an operation object with a string "op" key',
                step_index=index,
            )
        op_id = entry.get("op")
        if not isinstance(op_id, str) or not op_id:
            raise RecipeError(
                "missing-op-field",
                f'entry {index} lacks a non-empty string "op" key',
                step_index=index,
            )
        params = {key: value for key, value in entry.items() if key != "op"}
        description = params.get("description")
        if not isinstance(description, str):
            description = None
        operations.append(
            RawOperation(op_id=op_id, index=index, params=params, description=description)
        )
    return Recipe(operations=tuple(operations), source_name=source_name)


def validate_recipe(
    recipe: Recipe, arity_hints: dict[str, int] | None = None
) -> list[Diagnostic]:
    """Report unknown operations, unused parameter keys, and defaulted splits.

    Never mutates the recipe; diagnostics are the only output.
    """
    # Imported here: the operation catalog lives with the effect rules.
    from . import effects

    diagnostics: list[Diagnostic] = []
    hints = arity_hints or {}
    for op in recipe.operations:
        recognized = effects.RECOGNIZED_PARAMS.get(op.op_id)
        if recognized is None:
            diagnostics.append(
                Diagnostic(
                    "warning",
                    "unknown-op",
                    f"operation id {op.op_id!r} is not in the effect catalog; "
                    "treated conservatively as touching the whole table",
                    step_index=op.index,
                )
            )
            continue
        missing = [key for key in effects.REQUIRED_PARAMS.get(op.op_id, ()) if key not in op.params]
        if missing:
            diagnostics.append(
                Diagnostic(
                    "error",
                    "missing-param",
                    f"{op.op_id} lacks required parameter(s): {', '.join(missing)}",
                    step_index=op.index,
                )
            )
        unused = sorted(key for key in op.params if key not in recognized and key != "description")
        if unused:
            diagnostics.append(
                Diagnostic(
                    "info",
                    "unused-param",
                    f"{op.op_id} parameter(s) retained but not used by the model: "
                    + ", ".join(unused),
                    step_index=op.index,
                )
            )
        if op.op_id == "core/column-split" and effects.static_split_arity(op) is None:
            column = op.params.get("columnName")
            if not (isinstance(column, str) and column in hints):
                diagnostics.append(
                    Diagnostic(
                        "warning",
                        "split-arity-defaulted",
                        f"split of column {column!r} has no static part count; "
                        f"defaulting to {effects.DEFAULT_SPLIT_ARITY} "
                        "(override with --split-arity)",
                        step_index=op.index,
                    )
                )
    return diagnostics
