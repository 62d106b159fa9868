"""Workflow graph construction: linear, parallel, and collapsed models.

The linear model mirrors the recorded execution order as an alternating
chain of table snapshots and steps. The parallel model works at column
granularity: two steps stay unordered exactly when their effects commute,
so independent cleaning threads become disconnected subworkflows. The
collapsed model additionally folds long runs of near-identical steps into
summary nodes, with the folded steps preserved in per-run detail models.

Any table-scoped effect (row operations, unknown ops, opaque expressions)
forces total serialization: the parallel step order degenerates to the
recorded chain, which keeps every reordering conclusion sound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .effects import ColumnEffect, ColumnId, SchemaState
from .errors import ModelError
from .recipe import RawOperation, Recipe
from . import effects as _effects

LINEAR = "linear"
PARALLEL = "parallel"
COLLAPSED = "collapsed"

DEFAULT_COLLAPSE_THRESHOLD = 3


def sanitize_identifier(text: str) -> str:
    """Map arbitrary text to an identifier: non-alphanumerics become '_'."""
    return "".join(ch if ch.isalnum() else "_" for ch in text)


@dataclass(frozen=True)
class Node:
    kind: str  # "step" | "data_table" | "data_column" | "param" | "summary"
    id: str
    label: str
    step_index: int | None = None
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    label: str | None = None


@dataclass
class WorkflowModel:
    """A DAG of step/data/param/summary nodes.

    ``edges`` holds both dataflow edges (those touching a data or param
    node) and step-to-step dependency edges; an edge's role follows from
    its endpoint kinds. ``components`` partitions the step and summary
    nodes into independent subworkflow groups.
    """

    model_kind: str
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    components: list[list[str]] = field(default_factory=list)

    def node(self, node_id: str) -> Node:
        found = self.node_map().get(node_id)
        if found is None:
            raise ModelError("unknown-node", f"no node with id {node_id!r}")
        return found

    def node_map(self) -> dict[str, Node]:
        return {node.id: node for node in self.nodes}

    def step_like_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.kind in ("step", "summary")]

    def data_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.kind in ("data_table", "data_column")]


@dataclass(frozen=True)
class DetailModel:
    """Linear expansion of one collapsed run, kept for separate emission."""

    parent_summary_id: str
    inner: WorkflowModel


def commutes(a: ColumnEffect, b: ColumnEffect) -> bool:
    """Whether two effects can swap without changing any result.

    Holds when neither is table-scoped and neither one's output columns
    (writes, creates, deletes) meet what the other reads or changes.
    """
    if a.table_scoped or b.table_scoped:
        return False
    if a.output_ids() & (b.reads | b.writes | b.deletes):
        return False
    if b.output_ids() & a.reads:
        return False
    return True


def dependency_edges(recipe: Recipe, effects: list[ColumnEffect]) -> set[tuple[int, int]]:
    """Ordered step pairs (i, j), i < j, that must not be reordered."""
    n = len(effects)
    return {
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if not commutes(effects[i], effects[j])
    }


def _transitive_reduction(n: int, pairs: set[tuple[int, int]]) -> list[tuple[int, int]]:
    """Minimal forward-edge set with the same reachability. Pairs are i < j."""
    successors: dict[int, list[int]] = {i: [] for i in range(n)}
    for i, j in pairs:
        successors[i].append(j)
    reachable: dict[int, set[int]] = {}
    for i in range(n - 1, -1, -1):
        reach: set[int] = set()
        for j in successors[i]:
            reach.add(j)
            reach |= reachable[j]
        reachable[i] = reach
    kept = []
    for i, j in sorted(pairs):
        if not any(j in reachable[k] for k in successors[i] if k != j):
            kept.append((i, j))
    return kept


def _weak_components(members: list[int], pairs: set[tuple[int, int]]) -> list[list[int]]:
    parent = {m: m for m in members}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in pairs:
        parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for m in members:
        groups.setdefault(find(m), []).append(m)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def _short_label(op: RawOperation) -> str:
    return op.op_id.rsplit("/", 1)[-1]


def _render_param_value(value) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def _param_nodes(op: RawOperation, step_index: int) -> list[Node]:
    recognized = _effects.RECOGNIZED_PARAMS.get(op.op_id, ())
    nodes = []
    for key in recognized:
        if key in op.params:
            nodes.append(
                Node(
                    kind="param",
                    id=f"param_{step_index}_{key}",
                    label=f"{key} = {_render_param_value(op.params[key])}",
                    step_index=step_index,
                    payload={"key": key},
                )
            )
    return nodes


def build_linear(recipe: Recipe, schemas: list[SchemaState]) -> WorkflowModel:
    """Alternating chain of table snapshots and steps, with param nodes."""
    n = len(recipe.operations)
    if len(schemas) != n + 1:
        raise ValueError(f"expected {n + 1} schema states, got {len(schemas)}")

    model = WorkflowModel(model_kind=LINEAR)
    model.nodes.append(Node(kind="data_table", id="table_0", label="table_0"))
    for pos, op in enumerate(recipe.operations):
        step_id = f"step_{pos}"
        model.nodes.append(
            Node(
                kind="step",
                id=step_id,
                label=_short_label(op),
                step_index=pos,
                payload={"op_id": op.op_id},
            )
        )
        params = _param_nodes(op, pos)
        model.nodes.extend(params)
        model.nodes.append(Node(kind="data_table", id=f"table_{pos + 1}", label=f"table_{pos + 1}"))
        model.edges.append(Edge(f"table_{pos}", step_id))
        model.edges.append(Edge(step_id, f"table_{pos + 1}"))
        model.edges.extend(Edge(p.id, step_id) for p in params)
        if pos > 0:
            model.edges.append(Edge(f"step_{pos - 1}", step_id))
    model.components = [[f"step_{i}" for i in range(n)]] if n else []
    return model


@dataclass
class _ColumnNodes:
    """Per-column version bookkeeping while building column-level models."""

    version: dict[ColumnId, int] = field(default_factory=dict)
    node_id: dict[tuple[ColumnId, int], str] = field(default_factory=dict)
    used_ids: set[str] = field(default_factory=set)

    def materialize(self, model: WorkflowModel, cid: ColumnId, version: int, label: str) -> str:
        key = (cid, version)
        existing = self.node_id.get(key)
        if existing is not None:
            return existing
        node_id = f"{sanitize_identifier(label)}_v{version}"
        if node_id in self.used_ids:
            node_id = f"{node_id}_c{cid.id}"
        self.used_ids.add(node_id)
        self.node_id[key] = node_id
        model.nodes.append(
            Node(
                kind="data_column",
                id=node_id,
                label=label,
                payload={"column_id": cid.id, "version": version},
            )
        )
        return node_id

    def current(self, cid: ColumnId) -> int:
        return self.version.get(cid, 0)


def _label_at(schema: SchemaState, cid: ColumnId) -> str:
    label = schema.label_of(cid)
    if label is not None:
        return label
    return f"column_{cid.id}"


def _collapse_runs(recipe: Recipe, effects: list[ColumnEffect], threshold: int) -> list[tuple[int, int]]:
    """Maximal runs (start, end inclusive) of >= threshold consecutive steps
    sharing op id and output column set."""
    runs = []
    n = len(effects)
    i = 0
    while i < n:
        j = i
        key = (recipe.operations[i].op_id, effects[i].output_ids())
        while (
            j + 1 < n
            and recipe.operations[j + 1].op_id == key[0]
            and effects[j + 1].output_ids() == key[1]
        ):
            j += 1
        if j - i + 1 >= threshold:
            runs.append((i, j))
        i = j + 1
    return runs


def _build_column_model(
    recipe: Recipe,
    effects: list[ColumnEffect],
    schemas: list[SchemaState],
    runs: list[tuple[int, int]] | None,
) -> WorkflowModel:
    """Column-granularity model; ``runs`` folds step ranges into summaries."""
    n = len(recipe.operations)
    if len(effects) != n or len(schemas) != n + 1:
        raise ValueError("effects/schemas misaligned with recipe")

    runs = runs or []
    run_start: dict[int, tuple[int, int]] = {start: (start, end) for start, end in runs}
    model_kind = COLLAPSED if runs else PARALLEL
    model = WorkflowModel(model_kind=model_kind)
    tracker = _ColumnNodes()

    for cid, label in schemas[0].columns:
        tracker.materialize(model, cid, 0, label)

    # Representative node id per step index (its own node, or its run's summary).
    representative: dict[int, str] = {}

    pos = 0
    while pos < n:
        if pos in run_start:
            start, end = run_start[pos]
            count = end - start + 1
            op = recipe.operations[start]
            summary_id = f"summary_{start}"
            reads: set[ColumnId] = set()
            for i in range(start, end + 1):
                reads |= effects[i].reads
            in_ids = [
                tracker.materialize(model, cid, tracker.current(cid), _label_at(schemas[start], cid))
                for cid in sorted(reads)
            ]
            model.nodes.append(
                Node(
                    kind="summary",
                    id=summary_id,
                    label=f"{op.op_id} × {count}",
                    step_index=start,
                    payload={
                        "op_id": op.op_id,
                        "count": count,
                        "first_index": start,
                        "last_index": end,
                    },
                )
            )
            for i in range(start, end + 1):
                representative[i] = summary_id
                for cid in sorted(effects[i].writes):
                    tracker.version[cid] = tracker.current(cid) + 1
            out_ids = [
                tracker.materialize(model, cid, tracker.current(cid), _label_at(schemas[end + 1], cid))
                for cid in sorted(effects[start].writes)
            ]
            model.edges.extend(Edge(src, summary_id) for src in in_ids)
            model.edges.extend(Edge(summary_id, dst) for dst in out_ids)
            pos = end + 1
            continue

        op = recipe.operations[pos]
        effect = effects[pos]
        step_id = f"step_{pos}"
        in_ids = [
            tracker.materialize(model, cid, tracker.current(cid), _label_at(schemas[pos], cid))
            for cid in sorted(effect.reads)
        ]
        payload = {"op_id": op.op_id}
        if len(effect.creates) >= 2:
            payload["pattern"] = "split"
            payload["branches"] = len(effect.creates)
        elif len(effect.reads) >= 2 and len(effect.writes | effect.created_ids()) == 1:
            payload["pattern"] = "merge"
        model.nodes.append(
            Node(kind="step", id=step_id, label=_short_label(op), step_index=pos, payload=payload)
        )
        representative[pos] = step_id
        params = _param_nodes(op, pos)
        model.nodes.extend(params)

        out_ids = []
        for cid in sorted(effect.writes):
            tracker.version[cid] = tracker.current(cid) + 1
            out_ids.append(
                tracker.materialize(model, cid, tracker.current(cid), _label_at(schemas[pos + 1], cid))
            )
        for cid, label in effect.creates:
            out_ids.append(tracker.materialize(model, cid, 0, label))

        model.edges.extend(Edge(src, step_id) for src in in_ids)
        model.edges.extend(Edge(p.id, step_id) for p in params)
        model.edges.extend(Edge(step_id, dst) for dst in out_ids)
        pos += 1

    # Step ordering constraints. Any table-scoped effect forces the full
    # recorded chain so that conservative steps are never reordered across.
    if any(effect.table_scoped for effect in effects):
        step_pairs = {(i, i + 1) for i in range(n - 1)}
    else:
        step_pairs = dependency_edges(recipe, effects)

    quotient_pairs: set[tuple[int, int]] = set()
    rep_index = {}
    for i in range(n):
        rep = representative[i]
        rep_index.setdefault(rep, i)
    for i, j in step_pairs:
        a, b = representative[i], representative[j]
        if a != b:
            quotient_pairs.add((rep_index[a], rep_index[b]))

    members = sorted(rep_index.values())
    reduced = _transitive_reduction(n, quotient_pairs)
    by_index = {index: rep for rep, index in rep_index.items()}
    model.edges.extend(Edge(by_index[i], by_index[j]) for i, j in reduced)
    model.components = [
        [by_index[i] for i in group] for group in _weak_components(members, quotient_pairs)
    ]
    return model


def build_parallel(
    recipe: Recipe, effects: list[ColumnEffect], schemas: list[SchemaState]
) -> WorkflowModel:
    """Column-granularity model exposing independent subworkflow branches."""
    return _build_column_model(recipe, effects, schemas, runs=None)


def build_collapsed(
    recipe: Recipe,
    effects: list[ColumnEffect],
    schemas: list[SchemaState],
    threshold: int = DEFAULT_COLLAPSE_THRESHOLD,
) -> tuple[WorkflowModel, list[DetailModel]]:
    """Parallel model with long same-shaped runs folded into summary nodes.

    A run is a maximal group of >= threshold consecutive steps sharing the
    same op id and the same output column set. Each folded run is returned
    as a linear :class:`DetailModel` for separate emission.
    """
    if threshold < 2:
        raise ValueError("collapse threshold must be >= 2")
    runs = _collapse_runs(recipe, effects, threshold)
    model = _build_column_model(recipe, effects, schemas, runs=runs)
    model.model_kind = COLLAPSED
    details = []
    for start, end in runs:
        sub_ops = tuple(
            replace(op, index=pos)
            for pos, op in enumerate(recipe.operations[start : end + 1])
        )
        sub_recipe = Recipe(operations=sub_ops, source_name=recipe.source_name)
        inner = build_linear(sub_recipe, schemas[start : end + 2])
        details.append(DetailModel(parent_summary_id=f"summary_{start}", inner=inner))
    return model, details


def _induced_subgraph(model: WorkflowModel, keep: set[str]) -> WorkflowModel:
    nodes = [node for node in model.nodes if node.id in keep]
    edges = [edge for edge in model.edges if edge.src in keep and edge.dst in keep]
    components = [
        [node_id for node_id in group if node_id in keep] for group in model.components
    ]
    return WorkflowModel(
        model_kind=model.model_kind,
        nodes=nodes,
        edges=edges,
        components=[g for g in components if g],
    )


def _closure(model: WorkflowModel, node_id: str, reverse: bool) -> set[str]:
    if node_id not in model.node_map():
        raise ModelError("unknown-node", f"no node with id {node_id!r}")
    adjacency: dict[str, list[str]] = {}
    for edge in model.edges:
        src, dst = (edge.dst, edge.src) if reverse else (edge.src, edge.dst)
        adjacency.setdefault(src, []).append(dst)
    seen = {node_id}
    frontier = [node_id]
    while frontier:
        current = frontier.pop()
        for neighbor in adjacency.get(current, ()):
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append(neighbor)
    return seen


def upstream_lineage(model: WorkflowModel, node_id: str) -> WorkflowModel:
    """Induced subgraph of a node and everything it was derived from."""
    return _induced_subgraph(model, _closure(model, node_id, reverse=True))


def downstream_impact(model: WorkflowModel, node_id: str) -> WorkflowModel:
    """Induced subgraph of a node and everything derived from it."""
    return _induced_subgraph(model, _closure(model, node_id, reverse=False))
