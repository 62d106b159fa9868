"""Per-operation column effects and schema simulation.

Columns are tracked by synthetic stable ids so that dependency analysis
stays well-defined across renames, splits, and derived columns. The effect
of a step records which column ids it reads and writes, which columns it
creates or deletes, and whether it touches the row structure of the whole
table (``table_scoped``), in which case it reads and writes everything.

Unknown operation ids fall back to a table-scoped effect: the analysis
degrades to the sequential interpretation instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EffectError
from .expressions import analyze_expression
from .recipe import RawOperation, Recipe

DEFAULT_SPLIT_ARITY = 2

# op_id -> parameter keys consumed by the effect rules / interpreter.
# Keys outside these sets are retained verbatim but do not influence the
# model (validate_recipe reports them).
RECOGNIZED_PARAMS: dict[str, tuple[str, ...]] = {
    "core/text-transform": ("columnName", "expression"),
    "core/mass-edit": ("columnName", "expression", "edits"),
    "core/column-rename": ("oldColumnName", "newColumnName"),
    "core/column-removal": ("columnName",),
    "core/column-split": (
        "columnName",
        "mode",
        "separator",
        "regex",
        "maxColumns",
        "fieldLengths",
        "removeOriginalColumn",
    ),
    "core/column-addition": ("baseColumnName", "newColumnName", "expression"),
    "core/column-move": ("columnName",),
    "core/column-reorder": ("columnNames",),
    "core/fill-down": ("columnName",),
    "core/blank-down": ("columnName",),
    "core/row-removal": (),
    "core/row-reorder": (),
    "core/row-star": (),
    "core/row-flag": (),
}

REQUIRED_PARAMS: dict[str, tuple[str, ...]] = {
    "core/text-transform": ("columnName",),
    "core/mass-edit": ("columnName",),
    "core/column-rename": ("oldColumnName", "newColumnName"),
    "core/column-removal": ("columnName",),
    "core/column-split": ("columnName",),
    "core/column-addition": ("baseColumnName", "newColumnName"),
    "core/column-move": ("columnName",),
    "core/fill-down": ("columnName",),
    "core/blank-down": ("columnName",),
}

KNOWN_OPS = frozenset(RECOGNIZED_PARAMS)

_ROW_OPS = frozenset(
    {"core/row-removal", "core/row-reorder", "core/row-star", "core/row-flag"}
)


@dataclass(frozen=True, order=True)
class ColumnId:
    """Stable identity of a column; survives renames, never reused."""

    id: int


@dataclass(frozen=True)
class SchemaState:
    """The live columns, in left-to-right order, at one point of a pipeline.

    ``next_id`` is the allocation high-water mark for the whole trace, so
    ids of deleted columns are never handed out again.
    """

    columns: tuple[tuple[ColumnId, str], ...] = ()
    next_id: int = 0

    def __post_init__(self):
        labels = [label for _, label in self.columns]
        if len(set(labels)) != len(labels):
            duplicate = next(l for l in labels if labels.count(l) > 1)
            raise EffectError("label-collision", f"duplicate column label {duplicate!r}")

    @classmethod
    def from_labels(cls, labels) -> "SchemaState":
        labels = list(labels)
        return cls(
            columns=tuple((ColumnId(i), label) for i, label in enumerate(labels)),
            next_id=len(labels),
        )

    def labels(self) -> tuple[str, ...]:
        return tuple(label for _, label in self.columns)

    def ids(self) -> tuple[ColumnId, ...]:
        return tuple(cid for cid, _ in self.columns)

    def live_ids(self) -> frozenset[ColumnId]:
        return frozenset(cid for cid, _ in self.columns)

    def id_of(self, label: str) -> ColumnId | None:
        for cid, current in self.columns:
            if current == label:
                return cid
        return None

    def label_of(self, cid: ColumnId) -> str | None:
        for candidate, label in self.columns:
            if candidate == cid:
                return label
        return None

    def position(self, cid: ColumnId) -> int | None:
        for pos, (candidate, _) in enumerate(self.columns):
            if candidate == cid:
                return pos
        return None


@dataclass(frozen=True)
class ColumnEffect:
    """Read/write/create/delete sets of one step, over column ids.

    ``creates`` keeps creation order; new columns are inserted immediately
    to the right of ``anchor`` (their source column) when it is live.
    """

    reads: frozenset[ColumnId] = frozenset()
    writes: frozenset[ColumnId] = frozenset()
    creates: tuple[tuple[ColumnId, str], ...] = ()
    deletes: frozenset[ColumnId] = frozenset()
    renames: tuple[tuple[ColumnId, str], ...] = ()
    table_scoped: bool = False
    anchor: ColumnId | None = None

    def created_ids(self) -> frozenset[ColumnId]:
        return frozenset(cid for cid, _ in self.creates)

    def output_ids(self) -> frozenset[ColumnId]:
        """Columns whose content or existence this step changes."""
        return self.writes | self.created_ids() | self.deletes


EMPTY_EFFECT = ColumnEffect()


def _resolve(label, schema: SchemaState, op: RawOperation) -> ColumnId:
    if not isinstance(label, str):
        raise EffectError(
            "missing-param",
            f"step {op.index} ({op.op_id}): column name parameter is not a string",
            step_index=op.index,
        )
    cid = schema.id_of(label)
    if cid is None:
        raise EffectError(
            "unresolved-column",
            f"step {op.index} ({op.op_id}) references column {label!r} "
            "which is not live at that point",
            step_index=op.index,
        )
    return cid


def _param(op: RawOperation, key: str):
    value = op.params.get(key)
    if value is None:
        raise EffectError(
            "missing-param",
            f"step {op.index} ({op.op_id}) lacks required parameter {key!r}",
            step_index=op.index,
        )
    return value


def static_split_arity(op: RawOperation) -> int | None:
    """Part count of a split when the recipe pins it; None when data-dependent."""
    field_lengths = op.params.get("fieldLengths")
    if isinstance(field_lengths, list) and field_lengths:
        return len(field_lengths)
    max_columns = op.params.get("maxColumns")
    if isinstance(max_columns, int) and not isinstance(max_columns, bool) and max_columns > 0:
        return max_columns
    return None


def split_arity(op: RawOperation, arity_hints: dict[str, int] | None = None) -> int:
    """Resolve a split's part count: static params, then hints, then default."""
    static = static_split_arity(op)
    if static is not None:
        return static
    column = op.params.get("columnName")
    if arity_hints and isinstance(column, str) and column in arity_hints:
        return arity_hints[column]
    return DEFAULT_SPLIT_ARITY


def _expression_reads(
    op: RawOperation, schema: SchemaState, own: frozenset[ColumnId]
) -> frozenset[ColumnId]:
    """Reads implied by the step's expression; all live columns when opaque."""
    expression = op.params.get("expression")
    if expression is None:
        return schema.live_ids()
    analysis = analyze_expression(str(expression))
    if analysis.opaque:
        return schema.live_ids()
    return own | frozenset(_resolve(label, schema, op) for label in analysis.referenced_columns)


def _table_scoped_effect(schema: SchemaState) -> ColumnEffect:
    live = schema.live_ids()
    return ColumnEffect(reads=live, writes=live, table_scoped=True)


def effect_of(
    op: RawOperation,
    schema: SchemaState,
    arity_hints: dict[str, int] | None = None,
) -> ColumnEffect:
    """Column effect of one operation against the schema it runs on.

    Raises :class:`EffectError` (``unresolved-column`` / ``missing-param``)
    when a referenced column is not live or a required parameter is absent.
    """
    op_id = op.op_id

    if op_id == "core/text-transform":
        own = _resolve(_param(op, "columnName"), schema, op)
        return ColumnEffect(reads=_expression_reads(op, schema, frozenset({own})), writes=frozenset({own}))

    if op_id == "core/mass-edit":
        own = _resolve(_param(op, "columnName"), schema, op)
        return ColumnEffect(reads=frozenset({own}), writes=frozenset({own}))

    if op_id == "core/column-rename":
        old = _resolve(_param(op, "oldColumnName"), schema, op)
        new_label = _param(op, "newColumnName")
        if not isinstance(new_label, str):
            raise EffectError(
                "missing-param",
                f"step {op.index} (core/column-rename): newColumnName is not a string",
                step_index=op.index,
            )
        return ColumnEffect(
            reads=frozenset({old}),
            writes=frozenset({old}),
            renames=((old, new_label),),
        )

    if op_id == "core/column-removal":
        col = _resolve(_param(op, "columnName"), schema, op)
        return ColumnEffect(reads=frozenset({col}), deletes=frozenset({col}))

    if op_id == "core/column-split":
        label = _param(op, "columnName")
        col = _resolve(label, schema, op)
        parts = split_arity(op, arity_hints)
        creates = tuple(
            (ColumnId(schema.next_id + k), f"{label} {k + 1}") for k in range(parts)
        )
        deletes = frozenset({col}) if op.params.get("removeOriginalColumn") else frozenset()
        return ColumnEffect(
            reads=frozenset({col}),
            creates=creates,
            deletes=deletes,
            anchor=col,
        )

    if op_id == "core/column-addition":
        base = _resolve(_param(op, "baseColumnName"), schema, op)
        new_label = _param(op, "newColumnName")
        if not isinstance(new_label, str):
            raise EffectError(
                "missing-param",
                f"step {op.index} (core/column-addition): newColumnName is not a string",
                step_index=op.index,
            )
        return ColumnEffect(
            reads=_expression_reads(op, schema, frozenset({base})),
            creates=((ColumnId(schema.next_id), new_label),),
            anchor=base,
        )

    if op_id == "core/column-move":
        col = _resolve(_param(op, "columnName"), schema, op)
        return ColumnEffect(reads=frozenset({col}), writes=frozenset({col}))

    if op_id == "core/column-reorder":
        names = op.params.get("columnNames")
        if not isinstance(names, list):
            names = []
        cols = frozenset(_resolve(name, schema, op) for name in names)
        return ColumnEffect(reads=cols, writes=cols)

    if op_id in ("core/fill-down", "core/blank-down"):
        col = _resolve(_param(op, "columnName"), schema, op)
        return ColumnEffect(reads=frozenset({col}), writes=frozenset({col}))

    if op_id in _ROW_OPS:
        return _table_scoped_effect(schema)

    # Conservative fallback for extension / unrecognized operations.
    return _table_scoped_effect(schema)


def apply_effect(schema: SchemaState, effect: ColumnEffect) -> SchemaState:
    """Next schema after an effect produced against ``schema``.

    New columns land immediately right of the effect's anchor (or at the
    end when there is none). Raises ``label-collision`` if a create or
    rename would duplicate a live label.
    """
    rename_map = dict(effect.renames)
    columns = [(cid, rename_map.get(cid, label)) for cid, label in schema.columns]

    if effect.creates:
        anchor_pos = len(columns)
        if effect.anchor is not None:
            for pos, (cid, _) in enumerate(columns):
                if cid == effect.anchor:
                    anchor_pos = pos + 1
                    break
        columns[anchor_pos:anchor_pos] = list(effect.creates)

    columns = [(cid, label) for cid, label in columns if cid not in effect.deletes]

    created_ids = [cid for cid, _ in effect.creates]
    next_id = max([schema.next_id] + [cid.id + 1 for cid in created_ids])
    return SchemaState(columns=tuple(columns), next_id=next_id)


def trace_schema(
    recipe: Recipe,
    initial: SchemaState,
    arity_hints: dict[str, int] | None = None,
) -> list[SchemaState]:
    """Schema snapshots along a recipe: n operations yield n+1 states."""
    return trace_effects(recipe, initial, arity_hints)[1]


def trace_effects(
    recipe: Recipe,
    initial: SchemaState,
    arity_hints: dict[str, int] | None = None,
) -> tuple[list[ColumnEffect], list[SchemaState]]:
    """Effects and schema snapshots together, aligned with recipe order."""
    states = [initial]
    effects: list[ColumnEffect] = []
    for op in recipe.operations:
        try:
            effect = effect_of(op, states[-1], arity_hints)
            states.append(apply_effect(states[-1], effect))
        except EffectError as exc:
            if exc.step_index is None:
                exc.step_index = op.index
            raise
        effects.append(effect)
    return effects, states


def infer_initial_schema(
    recipe: Recipe, arity_hints: dict[str, int] | None = None
) -> SchemaState:
    """Minimal schema a recipe can run on: every label read before created.

    Ids are assigned in first-mention order. Labels that were live but got
    renamed or deleted earlier are not re-assumed; such reads surface as
    ``unresolved-column`` during tracing, which is the correct report for
    a recipe no schema can satisfy.
    """
    assumed: list[str] = []
    live: set[str] = set()
    consumed: set[str] = set()

    def need(label):
        if not isinstance(label, str) or label in live or label in consumed:
            return
        assumed.append(label)
        live.add(label)

    def produce(label: str):
        live.add(label)
        consumed.discard(label)

    def drop(label: str):
        live.discard(label)
        consumed.add(label)

    for op in recipe.operations:
        params = op.params
        op_id = op.op_id
        if op_id in ("core/text-transform", "core/column-addition"):
            own_key = "columnName" if op_id == "core/text-transform" else "baseColumnName"
            need(params.get(own_key))
            expression = params.get("expression")
            if expression is not None:
                analysis = analyze_expression(str(expression))
                if not analysis.opaque:
                    text = str(expression)
                    for label in sorted(analysis.referenced_columns, key=text.find):
                        need(label)
            if op_id == "core/column-addition":
                new_label = params.get("newColumnName")
                if isinstance(new_label, str):
                    produce(new_label)
        elif op_id in ("core/mass-edit", "core/column-move", "core/fill-down", "core/blank-down"):
            need(params.get("columnName"))
        elif op_id == "core/column-rename":
            old, new = params.get("oldColumnName"), params.get("newColumnName")
            need(old)
            if isinstance(old, str):
                drop(old)
            if isinstance(new, str):
                produce(new)
        elif op_id == "core/column-removal":
            label = params.get("columnName")
            need(label)
            if isinstance(label, str):
                drop(label)
        elif op_id == "core/column-split":
            label = params.get("columnName")
            need(label)
            if isinstance(label, str):
                for k in range(split_arity(op, arity_hints)):
                    produce(f"{label} {k + 1}")
                if params.get("removeOriginalColumn"):
                    drop(label)
        elif op_id == "core/column-reorder":
            names = params.get("columnNames")
            if isinstance(names, list):
                for name in names:
                    need(name)
        # Row-scoped and unknown operations read whatever is live; they
        # place no label requirements of their own.
    return SchemaState.from_labels(assumed)


_CATALOG_ROWS = [
    ("core/text-transform", "own column + expression references (all live columns when the expression is opaque)", "own column", "-", "-", "no"),
    ("core/mass-edit", "own column", "own column", "-", "-", "no"),
    ("core/column-rename", "old column", "old column (relabeled)", "-", "-", "no"),
    ("core/column-removal", "removed column", "-", "-", "removed column", "no"),
    ("core/column-split", "source column", "-", "\"<col> 1\" ... \"<col> k\"", "source column when removeOriginalColumn", "no"),
    ("core/column-addition", "base column + expression references (all live columns when opaque)", "-", "new column", "-", "no"),
    ("core/column-move", "moved column", "moved column", "-", "-", "no"),
    ("core/column-reorder", "listed columns", "listed columns", "-", "-", "no"),
    ("core/fill-down", "own column", "own column", "-", "-", "no"),
    ("core/blank-down", "own column", "own column", "-", "-", "no"),
    ("core/row-removal", "all live columns", "all live columns", "-", "-", "yes"),
    ("core/row-reorder", "all live columns", "all live columns", "-", "-", "yes"),
    ("core/row-star", "all live columns", "all live columns", "-", "-", "yes"),
    ("core/row-flag", "all live columns", "all live columns", "-", "-", "yes"),
    ("(any other op id)", "all live columns", "all live columns", "-", "-", "yes"),
]


def catalog_reference() -> str:
    """Markdown reference of the operation catalog, one row per op id."""
    lines = [
        "# Operation effect catalog",
        "",
        "Column effects assigned to each recognized operation id. Operations",
        "marked table-scoped touch the row structure of every column and are",
        "never reordered against anything.",
        "",
        "| op id | reads | writes | creates | deletes | table-scoped |",
        "|---|---|---|---|---|---|",
    ]
    for row in _CATALOG_ROWS:
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    return "\n".join(lines)
