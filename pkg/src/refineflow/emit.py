"""Deterministic serialization of workflow models.

Two formats, three views each:

* Graphviz DOT (``emit_dot``) for rendering with the external ``dot`` tool.
* YesWorkflow comment annotations (``emit_yw``) for the YW toolchain.

The combined view carries steps, data, and parameters; the process view
keeps steps and their ordering constraints; the data view keeps data nodes
with edges labeled by the deriving step. Output is byte-deterministic:
node statements follow model (step/version) order and edge statements are
sorted lexicographically.
"""

from __future__ import annotations

import enum

from .model import Edge, Node, WorkflowModel, sanitize_identifier

STEP_FILL = "#CCFFCC"
DATA_FILL = "#FAFAD2"
PARAM_FILL = "#FFFFFF"


class ViewKind(enum.Enum):
    COMBINED = "combined"
    PROCESS = "process"
    DATA = "data"


def _as_view(view) -> ViewKind:
    if isinstance(view, ViewKind):
        return view
    return ViewKind(view)


def _is_data(node: Node) -> bool:
    return node.kind in ("data_table", "data_column")


def _is_step(node: Node) -> bool:
    return node.kind in ("step", "summary")


def identifier_map(model: WorkflowModel) -> dict[str, str]:
    """Stable emission identifier per node id.

    Step, summary, and param identifiers come from sanitized labels/keys;
    colliding ones get the step index appended. Data node ids are already
    unique, readable identifiers.
    """
    base: dict[str, str] = {}
    for node in model.nodes:
        if node.kind == "param":
            base[node.id] = sanitize_identifier(node.payload.get("key", node.label))
        elif _is_step(node):
            base[node.id] = sanitize_identifier(node.label)
        else:
            base[node.id] = sanitize_identifier(node.id)
    counts: dict[str, int] = {}
    for name in base.values():
        counts[name] = counts.get(name, 0) + 1
    result: dict[str, str] = {}
    used: set[str] = set()
    for node in model.nodes:
        name = base[node.id]
        if counts[name] > 1 and node.step_index is not None:
            name = f"{name}_{node.step_index}"
        while name in used:
            name += "_"
        used.add(name)
        result[node.id] = name
    return result


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return '"' + escaped.replace("\n", "\\n").replace("\r", "\\r") + '"'


def _node_attrs(node: Node) -> str:
    if node.kind == "summary":
        return f'shape=box, style=filled, fillcolor="{STEP_FILL}", peripheries=2'
    if node.kind == "step":
        return f'shape=box, style=filled, fillcolor="{STEP_FILL}"'
    if node.kind == "param":
        return f'shape=box, style=filled, fillcolor="{PARAM_FILL}"'
    return f'shape=box, style="rounded,filled", fillcolor="{DATA_FILL}"'


def _component_of(model: WorkflowModel) -> dict[str, int]:
    """Cluster assignment: steps by their group, data/param nodes by the
    steps they touch; nodes shared between groups stay unassigned."""
    assignment: dict[str, int] = {}
    for index, group in enumerate(model.components):
        for node_id in group:
            assignment[node_id] = index
    node_map = {n.id: n for n in model.nodes}
    candidates: dict[str, set[int]] = {}
    for edge in model.edges:
        for this, other in ((edge.src, edge.dst), (edge.dst, edge.src)):
            if _is_step(node_map[this]):
                continue
            component = assignment.get(other)
            if component is not None:
                candidates.setdefault(this, set()).add(component)
    for node_id, components in candidates.items():
        if len(components) == 1:
            assignment[node_id] = components.pop()
    return assignment


def _view_nodes(model: WorkflowModel, view: ViewKind) -> list[Node]:
    if view is ViewKind.COMBINED:
        return list(model.nodes)
    if view is ViewKind.PROCESS:
        return [n for n in model.nodes if _is_step(n)]
    return [n for n in model.nodes if _is_data(n)]


def _view_edges(model: WorkflowModel, view: ViewKind) -> list[Edge]:
    kinds = {n.id: n.kind for n in model.nodes}

    def is_step_id(node_id: str) -> bool:
        return kinds[node_id] in ("step", "summary")

    if view is ViewKind.COMBINED:
        return [e for e in model.edges if not (is_step_id(e.src) and is_step_id(e.dst))]
    if view is ViewKind.PROCESS:
        return [e for e in model.edges if is_step_id(e.src) and is_step_id(e.dst)]
    # Data view: one edge per (input, output) pair of every step, labeled
    # with the deriving step.
    labels = {n.id: n.label for n in model.nodes}
    data_kinds = ("data_table", "data_column")
    ins: dict[str, list[str]] = {}
    outs: dict[str, list[str]] = {}
    for edge in model.edges:
        if kinds[edge.src] in data_kinds and is_step_id(edge.dst):
            ins.setdefault(edge.dst, []).append(edge.src)
        elif is_step_id(edge.src) and kinds[edge.dst] in data_kinds:
            outs.setdefault(edge.src, []).append(edge.dst)
    derived = []
    for node in model.nodes:
        if not _is_step(node):
            continue
        for src in ins.get(node.id, ()):
            for dst in outs.get(node.id, ()):
                derived.append(Edge(src, dst, label=labels[node.id]))
    return derived


def emit_dot(model: WorkflowModel, view) -> str:
    """Serialize one view of a model as a Graphviz DOT digraph.

    Independent subworkflow groups are wrapped in ``cluster`` subgraphs so
    the layout keeps them visually separate.
    """
    view = _as_view(view)
    idents = identifier_map(model)
    nodes = _view_nodes(model, view)
    edges = _view_edges(model, view)

    lines = ["digraph workflow {", "rankdir=TB;"]

    clustered = len(model.components) > 1
    assignment = _component_of(model) if clustered else {}
    emitted: set[str] = set()
    if clustered:
        for index in range(len(model.components)):
            members = [n for n in nodes if assignment.get(n.id) == index]
            if not members:
                continue
            lines.append(f"subgraph cluster_{index} {{")
            for node in members:
                lines.append(f"{_quote(idents[node.id])} [label={_quote(node.label)}, {_node_attrs(node)}];")
                emitted.add(node.id)
            lines.append("}")
    for node in nodes:
        if node.id not in emitted:
            lines.append(f"{_quote(idents[node.id])} [label={_quote(node.label)}, {_node_attrs(node)}];")

    rendered = []
    for edge in edges:
        attrs = f" [label={_quote(edge.label)}]" if edge.label else ""
        rendered.append((idents[edge.src], idents[edge.dst], edge.label or "", attrs))
    for src, dst, _, attrs in sorted(rendered):
        lines.append(f"{_quote(src)} -> {_quote(dst)}{attrs};")

    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_yw(model: WorkflowModel, view, name: str = "workflow") -> str:
    """Serialize one view of a model as YesWorkflow comment annotations.

    Each step becomes a ``@begin``/``@end`` block listing its data inputs
    and outputs; parameters appear only in the combined view.
    """
    view = _as_view(view)
    idents = identifier_map(model)
    node_order = {node.id: position for position, node in enumerate(model.nodes)}
    kinds = {n.id: n.kind for n in model.nodes}

    ins: dict[str, list[str]] = {}
    outs: dict[str, list[str]] = {}
    params: dict[str, list[str]] = {}
    for edge in model.edges:
        src_kind, dst_kind = kinds[edge.src], kinds[edge.dst]
        if dst_kind in ("step", "summary"):
            if src_kind in ("data_table", "data_column"):
                ins.setdefault(edge.dst, []).append(edge.src)
            elif src_kind == "param":
                params.setdefault(edge.dst, []).append(edge.src)
        elif src_kind in ("step", "summary") and dst_kind in ("data_table", "data_column"):
            outs.setdefault(edge.src, []).append(edge.dst)

    lines = [f"# @begin {sanitize_identifier(name)}"]
    steps = sorted(
        (n for n in model.nodes if n.kind in ("step", "summary")),
        key=lambda n: (n.step_index if n.step_index is not None else 0),
    )
    for step in steps:
        lines.append(f"# @begin {idents[step.id]}")
        for data_id in sorted(ins.get(step.id, ()), key=node_order.get):
            lines.append(f"# @in {idents[data_id]}")
        if view is ViewKind.COMBINED:
            for param_id in sorted(params.get(step.id, ()), key=node_order.get):
                lines.append(f"# @param {idents[param_id]}")
        for data_id in sorted(outs.get(step.id, ()), key=node_order.get):
            lines.append(f"# @out {idents[data_id]}")
        lines.append(f"# @end {idents[step.id]}")
    lines.append(f"# @end {sanitize_identifier(name)}")
    return "\n".join(lines) + "\n"
