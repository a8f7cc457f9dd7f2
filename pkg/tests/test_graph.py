import io
from itertools import product

import numpy as np
import pytest

from cranidnc.fixtures import TOY_COMBINATIONS, TOY_SCHEDULES, coordinated_instance, toy_instance
from cranidnc.graph import (
    ConflictGraph,
    VertexBudgetExceeded,
    assemble_cran_idnc_graph,
    build_coordinated_graph,
    build_cran_idnc_graph,
    build_power_subgraph,
    coordinated_adjacent,
    coordinated_vertices,
    cran_idnc_adjacent,
    enumerate_rrb_schedules,
)
from cranidnc.idnc import associations_combinable, enumerate_combinations, reduce_by_targets
from cranidnc.sched import SINGLE_RRH, assemble_plan, evaluate, IDNC

from helpers import small_instance


def count_rrb_schedules(B, combos):
    """Independent count: every choice of (nothing | combination) per RRH."""
    n = 0
    for pick in product([None] + list(combos), repeat=B):
        chosen = [c for c in pick if c is not None]
        users = [u for c in chosen for u in c.tau]
        if chosen and len(users) == len(set(users)):
            n += 1
    return n


def as_pairs(v, names):
    return frozenset((b, names[c]) for b, c, _ in v.assignments)


TOY_NAMES = {c: k + 1 for k, c in enumerate(TOY_COMBINATIONS)}


@pytest.mark.parametrize("B", [1, 2, 3])
def test_schedule_count_matches_independent_count(B):
    combos = enumerate_combinations(small_instance(4, num_users=4).side_info)
    got = list(enumerate_rrb_schedules(B, combos))
    assert len(got) == count_rrb_schedules(B, combos)
    assert len(set(got)) == len(got)


def test_schedule_budget():
    with pytest.raises(VertexBudgetExceeded):
        list(enumerate_rrb_schedules(2, TOY_COMBINATIONS, limit=5))


def test_toy_subgraph_contains_table_schedules():
    inst = toy_instance()
    combos = enumerate_combinations(inst.side_info)
    vertices = build_power_subgraph(0, combos, inst)
    present = {as_pairs(v, TOY_NAMES) for v in vertices}
    for sched in TOY_SCHEDULES:
        assert frozenset(sched) in present
    # one combination per RRH and disjoint targets in every vertex
    for v in vertices:
        rrhs = [b for b, _, _ in v.assignments]
        users = [u for _, c, _ in v.assignments for u in c.tau]
        assert len(rrhs) == len(set(rrhs))
        assert len(users) == len(set(users))
    assert len(vertices) == 7 * 2 + 12


def test_pruned_subgraph_is_exactly_the_table():
    inst = toy_instance()
    combos = enumerate_combinations(inst.side_info)
    vertices = build_power_subgraph(0, combos, inst, prune_silent=True)
    assert {as_pairs(v, TOY_NAMES) for v in vertices} == {frozenset(s) for s in TOY_SCHEDULES}


def test_symbolic_weight_row_one():
    inst = toy_instance()
    vertices = build_power_subgraph(0, list(TOY_COMBINATIONS), inst)
    (v,) = [v for v in vertices if as_pairs(v, TOY_NAMES) == {(0, 1), (1, 6)}]
    assert v.symbolic_weight() == "2*r*_11+r*_21"
    assert v.weight == 3.0
    assert v.label({c: f"c{k}" for c, k in TOY_NAMES.items()}) == "{11c1,21c6}"


def test_cran_graph_is_partite_and_matches_rule():
    inst = small_instance(8, num_users=3, num_rrbs=3)
    combos = reduce_by_targets(enumerate_combinations(inst.side_info))
    g = build_cran_idnc_graph(inst, combos)
    g.check()
    assert len(set(g.parts)) == 3
    for i in range(len(g)):
        for j in range(len(g)):
            if i != j:
                assert g.adjacent(i, j) == cran_idnc_adjacent(g.vertices[i], g.vertices[j])


def test_rrh_binding_rule():
    inst = toy_instance(num_rrbs=2)
    c2, c4 = TOY_COMBINATIONS[1], TOY_COMBINATIONS[3]
    v = build_power_subgraph(0, [c2], inst)[0]  # u1 on RRH 1
    on_same = [w for w in build_power_subgraph(1, [c2], inst) if w.binding == {0: 0}][0]
    on_other = [w for w in build_power_subgraph(1, [c2], inst) if w.binding == {0: 1}][0]
    other_user = [w for w in build_power_subgraph(1, [c4], inst) if w.binding == {1: 1}][0]
    assert cran_idnc_adjacent(v, on_same)
    assert not cran_idnc_adjacent(v, on_other)
    assert cran_idnc_adjacent(v, other_user)


def test_every_clique_is_a_feasible_plan():
    inst = small_instance(21, num_users=3)
    combos = reduce_by_targets(enumerate_combinations(inst.side_info))
    g = build_cran_idnc_graph(inst, combos)
    rng = np.random.default_rng(0)
    for _ in range(50):
        # random maximal clique by random greedy growth
        cand = (1 << len(g)) - 1
        ids = []
        while cand:
            bits = [i for i in range(len(g)) if (cand >> i) & 1]
            i = int(rng.choice(bits))
            ids.append(i)
            cand &= g.adj[i]
        assert g.is_maximal_clique(ids)
        assignment = {}
        p = np.zeros((2, 2))
        for i in ids:
            v = g.vertices[i]
            for (b, c, _), (_, w) in zip(v.assignments, v.powers):
                assignment[(b, v.z)] = (c.kappa, c.tau, IDNC)
                p[b, v.z] = w
        evaluate(assemble_plan(inst, "t", assignment, p), inst)


def test_non_adjacent_pair_violates_single_rrh():
    inst = toy_instance(num_rrbs=2)
    c2 = TOY_COMBINATIONS[1]
    a = build_power_subgraph(0, [c2], inst)
    b = build_power_subgraph(1, [c2], inst)
    g = assemble_cran_idnc_graph(a + b)
    i = 0  # u1 on RRH 1, RRB 1
    j = next(k for k in range(len(g)) if g.vertices[k].z == 1 and g.vertices[k].binding == {0: 1})
    assert not g.adjacent(i, j)
    plan = assemble_plan(inst, "t", {(0, 0): ((0,), (0,), IDNC), (1, 1): ((0,), (0,), IDNC)}, np.ones((2, 2)))
    with pytest.raises(Exception) as exc:
        evaluate(plan, inst)
    assert exc.value.constraint == SINGLE_RRH


COORDINATED_LABELS = {
    "11111", "11221", "11222", "11223", "11331", "11332",
    "21111", "21112", "21221", "21331", "21332",
}


def coordinated_graph():
    inst = coordinated_instance()
    g = build_coordinated_graph(inst, inst.full_power())
    ids = {v.label(f"{v.r:g}"): i for i, v in enumerate(g.vertices)}
    return inst, g, ids


def test_coordinated_vertices():
    _, g, ids = coordinated_graph()
    assert set(ids) == COORDINATED_LABELS


def test_coordinated_adjacency_rules():
    inst, g, ids = coordinated_graph()
    side = inst.side_info
    for i, v in enumerate(g.vertices):
        for j, w in enumerate(g.vertices):
            if i == j:
                continue
            if (v.b, v.z) == (w.b, w.z):
                expect = v.r == w.r and associations_combinable((v.u, v.f), (w.u, w.f), side)
            else:
                # a user may only be served by one RRH
                expect = v.u != w.u or v.b == w.b
            assert g.adjacent(i, j) == expect == coordinated_adjacent(v, w, side)


def test_zero_power_rrb_gets_no_vertices():
    inst = coordinated_instance()
    p = inst.full_power()
    p[1, 0] = 0.0
    assert all(v.b == 0 for v in coordinated_vertices(inst, p))


def test_edgelist_dump():
    g = ConflictGraph.from_matrix([1.0, 2.5, 3.0], [[0, 1, 0], [1, 0, 1], [0, 1, 0]], parts=[0, 1, 0])
    out = io.StringIO()
    g.dump_edgelist(out, describe=lambda v: f"v{v}")
    assert out.getvalue().splitlines() == [
        "# vertices 3",
        "# 0 1 0 v0",
        "# 1 2.5 1 v1",
        "# 2 3 0 v2",
        "0 1",
        "1 2",
    ]


def test_check_rejects_bad_graphs():
    with pytest.raises(ValueError):
        ConflictGraph([0, 1], [1, 1], [0b10, 0]).check()
    with pytest.raises(ValueError):
        ConflictGraph([0, 1], [1, 1], [0b10, 0b01], parts=[0, 0]).check()
