"""Reference interpreter for a supported subset of operations.

This is the brute-force oracle behind the parallel model: executing a
recipe in any topological order of its dependency DAG must produce the
same table as the recorded order. ``execute`` interprets operations the
straightforward way (labels resolved step by step, its own schema
bookkeeping, independent of the effect catalog), while ``execute_order``
binds every step to column ids via the effect trace and then applies the
steps in the requested order. Agreement between the two is exactly what
the commutativity rule promises.

Cells are untyped strings; the empty string counts as blank (fill-down
fills it, mass-edit's fromBlank matches it). ``toNumber`` yields a number
(left unchanged when the text does not parse); numbers are formatted back
without a decimal point when integral, else in shortest round-trip
decimal form.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from . import expressions as ex
from .effects import ColumnId, SchemaState
from . import effects as _effects
from .errors import EngineError
from .model import dependency_edges
from .recipe import RawOperation, Recipe

SUPPORTED_OPS = frozenset(
    {
        "core/text-transform",
        "core/mass-edit",
        "core/column-rename",
        "core/column-removal",
        "core/column-split",
        "core/column-addition",
        "core/fill-down",
        "core/blank-down",
    }
)


@dataclass
class Table:
    """An in-memory grid; every row is aligned to the schema order."""

    schema: SchemaState
    rows: list[list[str]]

    def __post_init__(self):
        width = len(self.schema.columns)
        for row in self.rows:
            if len(row) != width:
                raise ValueError(f"row width {len(row)} does not match schema width {width}")

    @classmethod
    def from_csv(cls, text: str) -> "Table":
        reader = csv.reader(io.StringIO(text))
        records = list(reader)
        if not records:
            return cls(SchemaState(), [])
        header, *rows = records
        width = len(header)
        normalized = [list(row[:width]) + [""] * (width - len(row)) for row in rows]
        return cls(SchemaState.from_labels(header), normalized)

    def column(self, cid: ColumnId) -> list[str]:
        position = self.schema.position(cid)
        if position is None:
            raise KeyError(cid)
        return [row[position] for row in self.rows]

    def sorted_by_id(self) -> "Table":
        """Columns reordered by ascending column id (order-insensitive form)."""
        order = sorted(range(len(self.schema.columns)), key=lambda i: self.schema.columns[i][0])
        schema = SchemaState(
            columns=tuple(self.schema.columns[i] for i in order),
            next_id=self.schema.next_id,
        )
        return Table(schema, [[row[i] for i in order] for row in self.rows])


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return repr(value) if isinstance(value, float) else str(value)


def _to_number(value):
    if not isinstance(value, str):
        return value
    text = value.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return value


def _apply_method(value, method: str):
    if method == "toNumber":
        return _to_number(value)
    if method == "toString":
        return format_value(value)
    text = format_value(value)
    if method == "toLowercase":
        return text.lower()
    if method == "toUppercase":
        return text.upper()
    if method == "trim":
        return text.strip()
    raise AssertionError(f"unreachable method {method}")


def evaluate_expression(parsed: ex.ParsedExpression, own_value: str, lookup) -> str:
    """Evaluate a parsed expression; ``lookup(label_or_ref)`` resolves cells."""
    result = None
    for term in parsed:
        base = term.base
        if isinstance(base, ex.OwnValue):
            value = own_value
        elif isinstance(base, ex.Literal):
            value = base.text
        else:
            value = lookup(base)
        for method in term.methods:
            value = _apply_method(value, method)
        if result is None:
            result = value
        elif isinstance(result, (int, float)) and isinstance(value, (int, float)):
            result = result + value
        else:
            result = format_value(result) + format_value(value)
    return format_value(result if result is not None else "")


def _parse_expression(op: RawOperation) -> ex.ParsedExpression:
    expression = op.params.get("expression")
    if expression is None:
        raise EngineError(
            "expression-error",
            f"step {op.index} ({op.op_id}) carries no expression",
            step_index=op.index,
        )
    parsed = ex.parse_expression(str(expression))
    if parsed is None:
        raise EngineError(
            "expression-error",
            f"step {op.index} ({op.op_id}) expression is outside the supported subset: "
            f"{expression!r}",
            step_index=op.index,
        )
    return parsed


def _compile_edits(op: RawOperation) -> list[tuple[set[str], bool, str]]:
    edits = op.params.get("edits")
    if not isinstance(edits, list):
        raise EngineError(
            "unsupported-op",
            f"step {op.index} (core/mass-edit) lacks an edits list",
            step_index=op.index,
        )
    expression = op.params.get("expression", "value")
    if ex.strip_language_tag(str(expression)) != "value":
        raise EngineError(
            "unsupported-op",
            f"step {op.index} (core/mass-edit) only supports the identity expression",
            step_index=op.index,
        )
    compiled = []
    for entry in edits:
        if not isinstance(entry, dict):
            continue
        sources = entry.get("from") or []
        matches = {format_value(v) for v in sources if isinstance(v, (str, int, float))}
        from_blank = bool(entry.get("fromBlank"))
        to = entry.get("to", "")
        compiled.append((matches, from_blank, format_value(to)))
    return compiled


def _apply_edits(cell: str, compiled) -> str:
    for matches, from_blank, to in compiled:
        if cell in matches or (from_blank and cell == ""):
            return to
    return cell


def _split_parts(cell: str, separator: str, arity: int) -> list[str]:
    parts = cell.split(separator) if separator else [cell]
    parts = parts[:arity]
    return parts + [""] * (arity - len(parts))


class _MutableTable:
    """Label-addressed working state for the straightforward interpreter."""

    def __init__(self, table: Table):
        self.ids = [cid for cid, _ in table.schema.columns]
        self.labels = [label for _, label in table.schema.columns]
        self.rows = [list(row) for row in table.rows]
        self.next_id = table.schema.next_id

    def position(self, label: str, op: RawOperation) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise EngineError(
                "unresolved-column",
                f"step {op.index} ({op.op_id}) references column {label!r} "
                "which is not live at that point",
                step_index=op.index,
            ) from None

    def require_free(self, label: str, op: RawOperation):
        if label in self.labels:
            raise EngineError(
                "label-collision",
                f"step {op.index} ({op.op_id}) would duplicate column label {label!r}",
                step_index=op.index,
            )

    def fresh_id(self) -> ColumnId:
        cid = ColumnId(self.next_id)
        self.next_id += 1
        return cid

    def insert_column(self, position: int, cid: ColumnId, label: str, values: list[str]):
        self.ids.insert(position, cid)
        self.labels.insert(position, label)
        for row, value in zip(self.rows, values):
            row.insert(position, value)

    def remove_column(self, position: int):
        del self.ids[position]
        del self.labels[position]
        for row in self.rows:
            del row[position]

    def to_table(self) -> Table:
        schema = SchemaState(columns=tuple(zip(self.ids, self.labels)), next_id=self.next_id)
        return Table(schema, [list(row) for row in self.rows])


def _require_string_param(op: RawOperation, key: str) -> str:
    value = op.params.get(key)
    if not isinstance(value, str):
        raise EngineError(
            "unsupported-op",
            f"step {op.index} ({op.op_id}) lacks a usable {key!r} parameter",
            step_index=op.index,
        )
    return value


def execute(
    recipe: Recipe, table: Table, arity_hints: dict[str, int] | None = None
) -> Table:
    """Run a recipe over a table in the recorded order.

    Raises :class:`EngineError` with ``unsupported-op`` for steps outside
    the subset and ``expression-error`` for opaque expressions.
    """
    state = _MutableTable(table)
    for op in recipe.operations:
        if op.op_id not in SUPPORTED_OPS:
            raise EngineError(
                "unsupported-op",
                f"step {op.index} ({op.op_id}) is outside the interpreter subset",
                step_index=op.index,
            )
        _execute_step(state, op, arity_hints)
    return state.to_table()


def _execute_step(state: _MutableTable, op: RawOperation, arity_hints):
    op_id = op.op_id

    if op_id == "core/text-transform":
        position = state.position(_require_string_param(op, "columnName"), op)
        parsed = _parse_expression(op)

        def run_row(row):
            def lookup(ref: ex.CellRef):
                return row[state.position(ref.label, op)]

            return evaluate_expression(parsed, row[position], lookup)

        new_values = [run_row(row) for row in state.rows]
        for row, value in zip(state.rows, new_values):
            row[position] = value

    elif op_id == "core/mass-edit":
        position = state.position(_require_string_param(op, "columnName"), op)
        compiled = _compile_edits(op)
        for row in state.rows:
            row[position] = _apply_edits(row[position], compiled)

    elif op_id == "core/column-rename":
        position = state.position(_require_string_param(op, "oldColumnName"), op)
        new_label = _require_string_param(op, "newColumnName")
        if new_label != state.labels[position]:
            state.require_free(new_label, op)
        state.labels[position] = new_label

    elif op_id == "core/column-removal":
        state.remove_column(state.position(_require_string_param(op, "columnName"), op))

    elif op_id == "core/column-split":
        label = _require_string_param(op, "columnName")
        if op.params.get("regex") or op.params.get("mode") == "lengths":
            raise EngineError(
                "unsupported-op",
                f"step {op.index} (core/column-split) only supports plain separator splits",
                step_index=op.index,
            )
        separator = _require_string_param(op, "separator")
        position = state.position(label, op)
        arity = _effects.split_arity(op, arity_hints)
        part_rows = [_split_parts(row[position], separator, arity) for row in state.rows]
        for k in range(arity):
            new_label = f"{label} {k + 1}"
            state.require_free(new_label, op)
            state.insert_column(
                position + 1 + k, state.fresh_id(), new_label, [parts[k] for parts in part_rows]
            )
        if op.params.get("removeOriginalColumn"):
            state.remove_column(position)

    elif op_id == "core/column-addition":
        base_position = state.position(_require_string_param(op, "baseColumnName"), op)
        new_label = _require_string_param(op, "newColumnName")
        parsed = _parse_expression(op)

        def run_row(row):
            def lookup(ref: ex.CellRef):
                return row[state.position(ref.label, op)]

            return evaluate_expression(parsed, row[base_position], lookup)

        values = [run_row(row) for row in state.rows]
        state.require_free(new_label, op)
        state.insert_column(base_position + 1, state.fresh_id(), new_label, values)

    elif op_id == "core/fill-down":
        position = state.position(_require_string_param(op, "columnName"), op)
        carry = None
        for row in state.rows:
            if row[position] != "":
                carry = row[position]
            elif carry is not None:
                row[position] = carry

    elif op_id == "core/blank-down":
        position = state.position(_require_string_param(op, "columnName"), op)
        previous = None
        for row in state.rows:
            current = row[position]
            if previous is not None and current == previous:
                row[position] = ""
            previous = current

    else:  # pragma: no cover - guarded by SUPPORTED_OPS
        raise AssertionError(op_id)


# --- order-permuted execution ------------------------------------------------


@dataclass(frozen=True)
class _BoundRef:
    cid: ColumnId


def _bind_expression(parsed: ex.ParsedExpression, schema: SchemaState, op: RawOperation):
    terms = []
    for term in parsed:
        base = term.base
        if isinstance(base, ex.CellRef):
            cid = schema.id_of(base.label)
            if cid is None:
                raise EngineError(
                    "unresolved-column",
                    f"step {op.index} references column {base.label!r}",
                    step_index=op.index,
                )
            base = _BoundRef(cid)
        terms.append(ex.Term(base=base, methods=term.methods))
    return tuple(terms)


class _IdTable:
    """Column-id-addressed working state for order-permuted execution."""

    def __init__(self, table: Table):
        self.ids = [cid for cid, _ in table.schema.columns]
        self.labels = {cid: label for cid, label in table.schema.columns}
        self.cells = {
            cid: list(table.column(cid)) for cid in self.ids
        }
        self.next_id = table.schema.next_id

    def row_count(self) -> int:
        return len(next(iter(self.cells.values()))) if self.cells else 0

    def insert_after(self, anchor: ColumnId | None, cid: ColumnId, label: str, values: list[str]):
        position = self.ids.index(anchor) + 1 if anchor in self.ids else len(self.ids)
        self.ids.insert(position, cid)
        self.labels[cid] = label
        self.cells[cid] = values
        self.next_id = max(self.next_id, cid.id + 1)

    def remove(self, cid: ColumnId):
        self.ids.remove(cid)
        del self.labels[cid]
        del self.cells[cid]

    def to_table(self) -> Table:
        schema = SchemaState(
            columns=tuple((cid, self.labels[cid]) for cid in self.ids),
            next_id=self.next_id,
        )
        rows = [
            [self.cells[cid][r] for cid in self.ids] for r in range(self.row_count())
        ]
        return Table(schema, rows)


def execute_order(
    recipe: Recipe,
    order: list[int],
    table: Table,
    arity_hints: dict[str, int] | None = None,
) -> Table:
    """Run a recipe in a caller-chosen topological order of its dependency DAG.

    The order must be a permutation of the step indices respecting every
    dependency pair; otherwise ``invalid-order`` is raised (that signals a
    bug in the calling harness, not a data problem). After sorting columns
    by id the result equals ``execute(recipe, table)``.
    """
    n = len(recipe.operations)
    effects, states = _effects.trace_effects(recipe, table.schema, arity_hints)

    if sorted(order) != list(range(n)):
        raise EngineError("invalid-order", f"order {order!r} is not a permutation of 0..{n - 1}")
    position = {step: rank for rank, step in enumerate(order)}
    if any(effect.table_scoped for effect in effects):
        pairs = {(i, i + 1) for i in range(n - 1)}
    else:
        pairs = dependency_edges(recipe, effects)
    for i, j in pairs:
        if position[i] > position[j]:
            raise EngineError(
                "invalid-order", f"order {order!r} violates dependency {i} -> {j}"
            )

    state = _IdTable(table)
    for step in order:
        _execute_bound_step(state, recipe.operations[step], effects[step], states[step], arity_hints)
    return state.to_table()


def _execute_bound_step(state: _IdTable, op: RawOperation, effect, schema: SchemaState, arity_hints):
    op_id = op.op_id
    if op_id not in SUPPORTED_OPS:
        raise EngineError(
            "unsupported-op",
            f"step {op.index} ({op.op_id}) is outside the interpreter subset",
            step_index=op.index,
        )

    def own_id() -> ColumnId:
        return next(iter(effect.writes | effect.reads))

    if op_id == "core/text-transform":
        cid = next(iter(effect.writes))
        bound = _bind_expression(_parse_expression(op), schema, op)
        values = state.cells[cid]
        new_values = []
        for r, own_value in enumerate(values):
            new_values.append(
                evaluate_expression(bound, own_value, lambda ref: state.cells[ref.cid][r])
            )
        state.cells[cid] = new_values

    elif op_id == "core/mass-edit":
        cid = next(iter(effect.writes))
        compiled = _compile_edits(op)
        state.cells[cid] = [_apply_edits(cell, compiled) for cell in state.cells[cid]]

    elif op_id == "core/column-rename":
        (cid, new_label), = effect.renames
        state.labels[cid] = new_label

    elif op_id == "core/column-removal":
        (cid,) = effect.deletes
        state.remove(cid)

    elif op_id == "core/column-split":
        source = effect.anchor
        separator = _require_string_param(op, "separator")
        if op.params.get("regex") or op.params.get("mode") == "lengths":
            raise EngineError(
                "unsupported-op",
                f"step {op.index} (core/column-split) only supports plain separator splits",
                step_index=op.index,
            )
        arity = len(effect.creates)
        part_rows = [_split_parts(cell, separator, arity) for cell in state.cells[source]]
        anchor = source
        for k, (cid, label) in enumerate(effect.creates):
            state.insert_after(anchor, cid, label, [parts[k] for parts in part_rows])
            anchor = cid
        if effect.deletes:
            state.remove(source)

    elif op_id == "core/column-addition":
        base = effect.anchor
        bound = _bind_expression(_parse_expression(op), schema, op)
        ((cid, label),) = effect.creates
        values = [
            evaluate_expression(bound, own_value, lambda ref: state.cells[ref.cid][r])
            for r, own_value in enumerate(state.cells[base])
        ]
        state.insert_after(base, cid, label, values)

    elif op_id == "core/fill-down":
        cid = own_id()
        carry = None
        values = []
        for cell in state.cells[cid]:
            if cell != "":
                carry = cell
            elif carry is not None:
                cell = carry
            values.append(cell)
        state.cells[cid] = values

    elif op_id == "core/blank-down":
        cid = own_id()
        previous = None
        values = []
        for cell in state.cells[cid]:
            current = cell
            if previous is not None and current == previous:
                cell = ""
            previous = current
            values.append(cell)
        state.cells[cid] = values

    else:  # pragma: no cover
        raise AssertionError(op_id)
