"""Command-line front end: recipe file in, DOT or YW annotation text out.

Exit status: 0 on success, 1 on recipe errors (diagnostics on stderr,
one line each: ``severity code step message``), 2 on usage errors.
Warnings never change the exit status. Output files are written via a
temporary file and rename, so failed runs leave no partial output.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass, field

from . import effects, model
from .emit import emit_dot, emit_yw
from .errors import RefineflowError
from .model import DetailModel, WorkflowModel
from .recipe import Diagnostic, parse_recipe, validate_recipe

MODEL_KINDS = ("linear", "parallel", "collapsed")
VIEWS = ("combined", "process", "data")
FORMATS = ("dot", "yw")


@dataclass
class RunConfig:
    input_path: str
    output_path: str = "-"
    model_kind: str = "parallel"
    view: str = "combined"
    format: str = "dot"
    collapse_threshold: int = model.DEFAULT_COLLAPSE_THRESHOLD
    split_arity_overrides: dict[str, int] = field(default_factory=dict)
    query: tuple[str, str] | None = None  # (direction, node id)


def _print_diagnostic(diag: Diagnostic, stream) -> None:
    step = "-" if diag.step_index is None else str(diag.step_index)
    print(f"{diag.severity} {diag.code} {step} {diag.message}", file=stream)


def _error_line(exc: RefineflowError, stream) -> None:
    _print_diagnostic(Diagnostic("error", exc.code, exc.message, exc.step_index), stream)


def _resolve_query_node(workflow: WorkflowModel, node_id: str) -> str:
    """Exact node id, else the newest data node with that label."""
    nodes = workflow.node_map()
    if node_id in nodes:
        return node_id
    matches = [
        n for n in workflow.nodes
        if n.kind in ("data_table", "data_column") and n.label == node_id
    ]
    if matches:
        return max(matches, key=lambda n: n.payload.get("version", 0)).id
    raise RefineflowError("unknown-node", f"no node with id or data label {node_id!r}")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    handle, temp_path = tempfile.mkstemp(dir=directory, prefix=".refineflow-")
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as stream:
            stream.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise


def _detail_path(output_path: str, summary_id: str) -> str:
    stem, ext = os.path.splitext(output_path)
    return f"{stem}.detail.{summary_id}{ext}"


def _emit(workflow: WorkflowModel, config: RunConfig, name: str) -> str:
    if config.format == "dot":
        return emit_dot(workflow, config.view)
    return emit_yw(workflow, config.view, name=name)


def run(config: RunConfig, stderr=None) -> int:
    """Execute one conversion; returns the process exit status."""
    stderr = stderr if stderr is not None else sys.stderr

    try:
        with open(config.input_path, encoding="utf-8") as stream:
            text = stream.read()
    except OSError as exc:
        print(f"error unreadable-input - {config.input_path}: {exc.strerror}", file=stderr)
        return 2

    try:
        recipe = parse_recipe(text, source_name=os.path.basename(config.input_path))
    except RefineflowError as exc:
        _error_line(exc, stderr)
        return 1

    hints = config.split_arity_overrides
    diagnostics = validate_recipe(recipe, hints)
    for diag in diagnostics:
        _print_diagnostic(diag, stderr)
    if any(d.severity == "error" for d in diagnostics):
        return 1

    try:
        initial = effects.infer_initial_schema(recipe, hints)
        effect_list, schemas = effects.trace_effects(recipe, initial, hints)
        details: list[DetailModel] = []
        if config.model_kind == "linear":
            workflow = model.build_linear(recipe, schemas)
        elif config.model_kind == "parallel":
            workflow = model.build_parallel(recipe, effect_list, schemas)
        else:
            workflow, details = model.build_collapsed(
                recipe, effect_list, schemas, config.collapse_threshold
            )

        if config.query is not None:
            direction, raw_node = config.query
            node_id = _resolve_query_node(workflow, raw_node)
            if direction == "upstream":
                workflow = model.upstream_lineage(workflow, node_id)
            else:
                workflow = model.downstream_impact(workflow, node_id)
            kept = set(workflow.node_map())
            details = [d for d in details if d.parent_summary_id in kept]
    except RefineflowError as exc:
        _error_line(exc, stderr)
        return 1

    name = os.path.splitext(os.path.basename(config.input_path))[0]
    main_text = _emit(workflow, config, name)
    detail_texts = [
        (detail.parent_summary_id, _emit(detail.inner, config, detail.parent_summary_id))
        for detail in details
    ]

    if config.output_path == "-":
        sys.stdout.write(main_text)
        if detail_texts:
            _print_diagnostic(
                Diagnostic(
                    "warning",
                    "details-skipped",
                    f"{len(detail_texts)} collapsed-run detail file(s) require a file "
                    "output path; none were written",
                ),
                stderr,
            )
        return 0

    _atomic_write(config.output_path, main_text)
    for summary_id, detail_text in detail_texts:
        _atomic_write(_detail_path(config.output_path, summary_id), detail_text)
    return 0


def _parse_split_arity(values: list[str]) -> dict[str, int]:
    overrides = {}
    for item in values:
        label, sep, count = item.rpartition("=")
        if not sep or not label:
            raise argparse.ArgumentTypeError(
                f"--split-arity expects <column>=<parts>, got {item!r}"
            )
        try:
            parts = int(count)
        except ValueError:
            raise argparse.ArgumentTypeError(f"split arity {count!r} is not an integer") from None
        if parts < 1:
            raise argparse.ArgumentTypeError("split arity must be >= 1")
        overrides[label] = parts
    return overrides


def _parse_query(value: str) -> tuple[str, str]:
    direction, sep, node_id = value.partition(":")
    if not sep or direction not in ("upstream", "downstream") or not node_id:
        raise argparse.ArgumentTypeError(
            f"--query expects upstream:<node> or downstream:<node>, got {value!r}"
        )
    return direction, node_id


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refineflow",
        description=(
            "Convert an exported OpenRefine operation history (JSON recipe) into a "
            "dataflow workflow model, emitted as Graphviz DOT or YesWorkflow annotations."
        ),
    )
    parser.add_argument("--input", "-i", required=True, help="path of the recipe JSON file")
    parser.add_argument(
        "--output", "-o", default="-", help="output path, or '-' for standard output"
    )
    parser.add_argument(
        "--model", "-t", choices=MODEL_KINDS, default="parallel", help="model kind to build"
    )
    parser.add_argument("--view", "-v", choices=VIEWS, default="combined", help="diagram view")
    parser.add_argument("--format", "-f", choices=FORMATS, default="dot", help="output format")
    parser.add_argument(
        "--collapse-threshold",
        type=int,
        default=model.DEFAULT_COLLAPSE_THRESHOLD,
        metavar="N",
        help="minimum run length folded into a summary node (collapsed model only)",
    )
    parser.add_argument(
        "--split-arity",
        action="append",
        default=[],
        metavar="COLUMN=PARTS",
        help="part count for a separator split the recipe does not pin (repeatable)",
    )
    parser.add_argument(
        "--query",
        metavar="DIRECTION:NODE",
        help="restrict output to the upstream:<node> or downstream:<node> subgraph",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        overrides = _parse_split_arity(args.split_arity)
        query = _parse_query(args.query) if args.query else None
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))  # exits with status 2
    if args.collapse_threshold < 2:
        parser.error("--collapse-threshold must be >= 2")
    config = RunConfig(
        input_path=args.input,
        output_path=args.output,
        model_kind=args.model,
        view=args.view,
        format=args.format,
        collapse_threshold=args.collapse_threshold,
        split_arity_overrides=overrides,
        query=query,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
