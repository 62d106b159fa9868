"""Dataflow workflow models and diagrams from OpenRefine cleaning recipes.

Pipeline: parse an exported operation history, resolve each step's column
read/write effect, build a linear / parallel / collapsed workflow graph,
and emit it as Graphviz DOT or YesWorkflow annotations. A small reference
interpreter doubles as the oracle that reordered execution along the
parallel model preserves results.
"""

from .effects import (
    ColumnEffect,
    ColumnId,
    SchemaState,
    apply_effect,
    catalog_reference,
    effect_of,
    infer_initial_schema,
    trace_effects,
    trace_schema,
)
from .emit import ViewKind, emit_dot, emit_yw
from .engine import Table, execute, execute_order
from .errors import (
    EffectError,
    EngineError,
    ModelError,
    RecipeError,
    RefineflowError,
)
from .expressions import ExpressionAnalysis, analyze_expression
from .model import (
    DetailModel,
    Edge,
    Node,
    WorkflowModel,
    build_collapsed,
    build_linear,
    build_parallel,
    commutes,
    dependency_edges,
    downstream_impact,
    upstream_lineage,
)
from .recipe import Diagnostic, RawOperation, Recipe, parse_recipe, validate_recipe

__version__ = "0.1.0"

__all__ = [
    "ColumnEffect",
    "ColumnId",
    "DetailModel",
    "Diagnostic",
    "Edge",
    "EffectError",
    "EngineError",
    "ExpressionAnalysis",
    "ModelError",
    "Node",
    "RawOperation",
    "Recipe",
    "RecipeError",
    "RefineflowError",
    "SchemaState",
    "Table",
    "ViewKind",
    "WorkflowModel",
    "analyze_expression",
    "apply_effect",
    "build_collapsed",
    "build_linear",
    "build_parallel",
    "catalog_reference",
    "commutes",
    "dependency_edges",
    "downstream_impact",
    "effect_of",
    "emit_dot",
    "emit_yw",
    "execute",
    "execute_order",
    "infer_initial_schema",
    "parse_recipe",
    "trace_effects",
    "trace_schema",
    "upstream_lineage",
    "validate_recipe",
]
