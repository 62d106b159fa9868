"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete. The randomized criteria share one seeded corpus of
100 recipe/table pairs, so the whole suite stays well under its time budget.
"""

from __future__ import annotations

import json
import random
import time

import pytest

from refineflow import (
    build_collapsed,
    build_linear,
    build_parallel,
    dependency_edges,
    emit_dot,
    emit_yw,
    execute,
    execute_order,
    infer_initial_schema,
    parse_recipe,
    trace_effects,
    trace_schema,
)
from refineflow.cli import main as cli_main
from conftest import FIXTURES, GOLDEN
from dotcheck import parse_dot
from recipegen import has_unique_topological_order, random_recipe, random_topological_order

CORPUS_SEED = 20260810
CORPUS_SIZE = 100
ORDERS_PER_RECIPE = 20


@pytest.fixture(scope="module")
def corpus():
    rng = random.Random(CORPUS_SEED)
    return [random_recipe(rng) for _ in range(CORPUS_SIZE)]


def _step_pairs(model) -> set[tuple[int, int]]:
    return {
        (int(e.src.split("_")[1]), int(e.dst.split("_")[1]))
        for e in model.edges
        if e.src.startswith("step_") and e.dst.startswith("step_")
    }


def test_criterion_1_linear_model_shape(menus_recipe, menus_trace):
    started = time.perf_counter()
    _, schemas = menus_trace
    assert len(menus_recipe) == 8
    model = build_linear(menus_recipe, schemas)
    tables = [n.id for n in model.nodes if n.kind == "data_table"]
    steps = [n.id for n in model.nodes if n.kind == "step"]
    assert len(tables) == 9
    assert len(steps) == 8
    flow = {(e.src, e.dst) for e in model.edges if not e.src.startswith("step_") or not e.dst.startswith("step_")}
    # Single alternating path: table_i -> step_i -> table_{i+1}, nothing else
    # between tables and steps except the parameter feeds.
    for i in range(8):
        assert (f"table_{i}", f"step_{i}") in flow
        assert (f"step_{i}", f"table_{i + 1}") in flow
    table_step = [e for e in model.edges if e.src.startswith("table_") or e.dst.startswith("table_")]
    assert len(table_step) == 16
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    print(f"\nPASS criterion 1: linear model is a 9-table / 8-step alternating chain ({elapsed:.3f}s)")


def test_criterion_2_parallel_component_count(menus_recipe, menus_trace):
    started = time.perf_counter()
    effects, schemas = menus_trace
    model = build_parallel(menus_recipe, effects, schemas)
    assert len(model.components) == 3

    date_group = set(model.components[0])
    nodes = {n.id: n for n in model.nodes}
    splits = [nodes[s] for s in date_group if nodes[s].payload.get("pattern") == "split"]
    merges = [nodes[s] for s in date_group if nodes[s].payload.get("pattern") == "merge"]
    assert len(splits) == 1
    assert splits[0].payload["branches"] == 3
    assert len(merges) == 1
    merge_out_labels = [
        nodes[e.dst].label
        for e in model.edges
        if e.src == merges[0].id and nodes[e.dst].kind == "data_column"
    ]
    assert merge_out_labels == ["repaired_date"]
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    print(f"\nPASS criterion 2: 3 independent subworkflows; date thread splits x3 and merges into repaired_date ({elapsed:.3f}s)")


def test_criterion_3_commutativity_soundness(corpus):
    started = time.perf_counter()
    rng = random.Random(CORPUS_SEED + 1)
    checked_orders = 0
    for recipe, table in corpus:
        effects, _ = trace_effects(recipe, table.schema)
        pairs = dependency_edges(recipe, effects)
        baseline = execute(recipe, table).sorted_by_id()
        for _ in range(ORDERS_PER_RECIPE):
            order = random_topological_order(len(recipe), pairs, rng)
            result = execute_order(recipe, order, table).sorted_by_id()
            assert result.schema == baseline.schema, (recipe, order)
            assert result.rows == baseline.rows, (recipe, order)
            checked_orders += 1
    elapsed = time.perf_counter() - started
    assert checked_orders == CORPUS_SIZE * ORDERS_PER_RECIPE
    assert elapsed < 30.0
    print(
        f"\nPASS criterion 3: {checked_orders} reordered executions over "
        f"{CORPUS_SIZE} random recipes all equal the recorded order ({elapsed:.1f}s)"
    )


def test_criterion_4_conservative_fallback(corpus):
    rng = random.Random(CORPUS_SEED + 2)
    instances = 0
    for recipe, _ in corpus[:50]:
        entries = [{"op": op.op_id, **op.params} for op in recipe.operations]
        position = rng.randrange(len(entries) + 1)
        entries.insert(position, {"op": "vendor/unknown-step"})
        tainted = parse_recipe(json.dumps(entries))
        initial = infer_initial_schema(tainted)
        effects, schemas = trace_effects(tainted, initial)
        model = build_parallel(tainted, effects, schemas)
        assert len(model.components) == 1
        pairs = _step_pairs(model)
        assert has_unique_topological_order(len(tainted), pairs)
        chain = list(range(len(tainted)))
        order = random_topological_order(len(tainted), pairs, rng)
        assert order == chain
        instances += 1
    assert instances == 50
    print(
        "\nPASS criterion 4: one unknown op forces a single component whose only "
        "topological order is the recorded order (50 instances)"
    )


def test_criterion_5_collapse_accounting(mass_edit_recipe, corpus, tmp_path):
    initial = infer_initial_schema(mass_edit_recipe)
    effects, schemas = trace_effects(mass_edit_recipe, initial)
    model, details = build_collapsed(mass_edit_recipe, effects, schemas, threshold=3)
    summaries = [n for n in model.nodes if n.kind == "summary"]
    assert len(summaries) == 1
    assert summaries[0].payload["count"] == 10
    assert len(details) == 1
    assert len([n for n in details[0].inner.nodes if n.kind == "step"]) == 10

    out = tmp_path / "collapsed.dot"
    status = cli_main(
        ["-i", str(FIXTURES / "mass_edit_run.json"), "-t", "collapsed",
         "--collapse-threshold", "3", "-o", str(out)]
    )
    assert status == 0
    detail_files = sorted(tmp_path.glob("collapsed.detail.*.dot"))
    assert len(detail_files) == 1
    inner = parse_dot(detail_files[0].read_text(encoding="utf-8"))
    assert len([n for n, a in inner.nodes.items() if a.get("fillcolor") == "#CCFFCC"]) == 10

    rng = random.Random(CORPUS_SEED + 3)
    for recipe, _ in corpus:
        initial = infer_initial_schema(recipe)
        effects, schemas = trace_effects(recipe, initial)
        threshold = rng.choice([2, 3, 5])
        collapsed, _ = build_collapsed(recipe, effects, schemas, threshold)
        steps = [n for n in collapsed.nodes if n.kind == "step"]
        counts = [n.payload["count"] for n in collapsed.nodes if n.kind == "summary"]
        assert len(steps) + sum(counts) == len(recipe)
    print(
        "\nPASS criterion 5: 10-step run collapses to one summary (count 10) with a "
        "10-step detail file; step counts conserved over the random corpus"
    )


def test_criterion_6_determinism_goldens(menus_recipe, menus_trace):
    effects, schemas = menus_trace
    linear = build_linear(menus_recipe, schemas)
    parallel = build_parallel(menus_recipe, effects, schemas)
    cases = [
        (linear, "combined", "dot", "menus_linear_combined.dot"),
        (linear, "data", "dot", "menus_linear_data.dot"),
        (parallel, "combined", "dot", "menus_parallel_combined.dot"),
        (parallel, "process", "dot", "menus_parallel_process.dot"),
        (parallel, "data", "dot", "menus_parallel_data.dot"),
        (linear, "combined", "yw", "menus_linear_combined.yw"),
        (parallel, "combined", "yw", "menus_parallel_combined.yw"),
    ]
    for model, view, fmt, golden_name in cases:
        if fmt == "dot":
            first, second = emit_dot(model, view), emit_dot(model, view)
            parse_dot(first)  # grammar check by the independent parser
        else:
            first, second = emit_yw(model, view, name="menus"), emit_yw(model, view, name="menus")
        assert first == second
        assert first == (GOLDEN / golden_name).read_text(encoding="utf-8")
    print(
        "\nPASS criterion 6: DOT and YW emissions are byte-identical across runs, "
        "match the committed goldens, and parse under the DOT grammar"
    )


def test_criterion_7_schema_trace_agreement(corpus):
    for recipe, table in corpus:
        final = execute(recipe, table).schema
        traced = trace_schema(recipe, table.schema)[-1]
        assert final == traced
    print(
        f"\nPASS criterion 7: interpreter final schema equals the traced schema "
        f"on all {CORPUS_SIZE} corpus recipes"
    )
