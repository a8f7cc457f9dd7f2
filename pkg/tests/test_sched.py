import dataclasses

import numpy as np
import pytest

from cranidnc.fixtures import capacity_instance, toy_instance
from cranidnc.model import NetworkConfig, generate_instance
from cranidnc.sched import (
    DECODABILITY,
    IDNC,
    METRICS,
    POWER_BOX,
    RLNC,
    RRH_BINDING,
    SCHEDULERS,
    SINGLE_RRH,
    PlanValidationError,
    assemble_plan,
    evaluate,
    run_scheduler,
    schedule_classical_idnc,
    schedule_iterative,
    schedule_joint,
    schedule_max_power,
    schedule_rlnc,
    schedule_uncoded_joint,
)

from helpers import seeded, small_instance


@pytest.mark.parametrize("name", sorted(SCHEDULERS))
def test_toy_all_schedulers_valid(name):
    inst = toy_instance()
    plan = run_scheduler(name, inst)
    metrics = evaluate(plan, inst)
    assert metrics["sum_rate"] == plan.sum_rate
    expected = 2.0 if name == "uncoded" else 3.0
    assert plan.sum_rate == expected


def test_toy_joint_metrics():
    plan = schedule_joint(toy_instance())
    assert plan.per_user_hz == 1.0
    assert plan.delivered_bits == 3
    assert "sum_rate: 3" in plan.describe()
    assert plan.to_dict()["sum_rate"] == 3.0


@pytest.mark.parametrize("seed", seeded(10, 8))
def test_dominance_on_random_instances(seed):
    inst = small_instance(seed, num_users=4, num_rrhs=2, num_rrbs=2, num_files=3)
    joint = schedule_joint(inst)
    for other in (schedule_uncoded_joint(inst), schedule_max_power(inst)):
        assert other.sum_rate <= joint.sum_rate
        evaluate(other, inst)
    assert schedule_uncoded_joint(inst).sum_rate >= 0
    for name in ("classical", "rlnc", "iterative"):
        evaluate(run_scheduler(name, inst), inst)


@pytest.mark.parametrize("seed", seeded(11, 4))
def test_single_rrh_max_power_is_joint(seed):
    inst = small_instance(seed, num_rrhs=1, num_users=4)
    assert schedule_max_power(inst).sum_rate == schedule_joint(inst).sum_rate


@pytest.mark.parametrize("seed", seeded(12, 4))
def test_single_user(seed):
    inst = small_instance(seed, num_users=1)
    joint = schedule_joint(inst)
    assert schedule_uncoded_joint(inst).sum_rate == joint.sum_rate
    # every RRB of the best RRH, uncoded
    (b,) = {b for b, _ in joint.cells}
    assert len(joint.cells) == inst.config.num_rrbs
    assert all(len(c.kappa) == 1 for c in joint.cells.values())
    assert joint.user_rrh == [b]
    classical = schedule_classical_idnc(inst)
    assert [c.kappa for c in classical.cells.values()] == [tuple(sorted(inst.side_info.wants[0]))[:1]]


def test_nobody_wants_anything():
    inst = capacity_instance([[1, 1], [2, 2]], [{0, 1}, {0, 1}], 2)
    for name in SCHEDULERS:
        plan = run_scheduler(name, inst)
        assert plan.sum_rate == 0.0 and not plan.cells
        assert evaluate(plan, inst) == {"sum_rate": 0.0, "delivered_bits": 0, "per_user_hz": 0.0}


def test_rlnc_ties_pile_onto_first_cell():
    inst = capacity_instance([[1, 1]] * 3, [{1}, {0}, set()], 2, num_rrbs=2)
    plan = schedule_rlnc(inst)
    assert list(plan.cells) == [(0, 0)]
    cell = plan.cells[(0, 0)]
    assert cell.tau == (0, 1, 2) and cell.coding == RLNC and cell.rate == 1.0


def test_rlnc_picks_best_cell_and_min_rate():
    inst = capacity_instance([[1, 3], [2, 1]], [set(), set()], 2)
    plan = schedule_rlnc(inst)
    assert {k: c.tau for k, c in plan.cells.items()} == {(0, 0): (1,), (1, 0): (0,)}
    assert plan.sum_rate == 5.0


def test_classical_prefers_most_users():
    plan = schedule_classical_idnc(toy_instance())
    assert [(k, c.tau) for k, c in plan.cells.items()] == [((0, 0), (0, 1, 2))]


def test_iterative_trace_monotone():
    for seed in seeded(13, 5):
        inst = small_instance(seed, num_users=4)
        plan = schedule_iterative(inst)
        assert all(a <= b for a, b in zip(plan.trace, plan.trace[1:]))
        assert plan.sum_rate == plan.trace[-1]


def test_iterative_single_rrh_stops_early():
    inst = small_instance(3, num_rrhs=1, num_users=3)
    plan = schedule_iterative(inst)
    assert plan.info["iterations"] == 2
    assert "not-converged" not in plan.flags


def test_file_size_scales_delivered_bits():
    inst = small_instance(4)
    a = schedule_joint(inst)
    big = dataclasses.replace(inst, config=inst.config.replace(file_size=3 * inst.config.file_size))
    b = schedule_joint(big)
    assert b.delivered_bits == 3 * a.delivered_bits
    assert b.sum_rate == a.sum_rate


def test_budget_degrades_with_flag():
    inst = generate_instance(NetworkConfig(num_users=5, num_files=3, power_grid_points=5, rng_seed=1))
    plan = schedule_joint(inst, node_budget=2)
    assert "budget-degraded" in plan.flags
    evaluate(plan, inst)
    assert schedule_joint(inst, exact=False).flags == ["greedy"]


def test_unknown_scheduler():
    with pytest.raises(KeyError):
        run_scheduler("nope", toy_instance())


# ---- validator diagnostics -------------------------------------------------


def toy_plan(assignment, p=None):
    inst = toy_instance(num_rrbs=2)
    return inst, assemble_plan(inst, "t", assignment, np.ones((2, 2)) if p is None else p)


def test_user_on_two_rrhs():
    inst, plan = toy_plan({(0, 0): ((0,), (0,), IDNC), (1, 1): ((0,), (0,), IDNC)})
    with pytest.raises(PlanValidationError) as exc:
        evaluate(plan, inst)
    assert exc.value.constraint == SINGLE_RRH
    assert "single-rrh" in str(exc.value)


def test_power_out_of_box():
    inst, plan = toy_plan({(0, 0): ((0,), (0,), IDNC)})
    plan.powers[0, 0] = 2.0
    with pytest.raises(PlanValidationError) as exc:
        evaluate(plan, inst)
    assert exc.value.constraint == POWER_BOX


def test_undecodable_cell():
    inst, plan = toy_plan({(0, 0): ((0,), (1,), IDNC)})  # u2 already has f1
    with pytest.raises(PlanValidationError) as exc:
        evaluate(plan, inst)
    assert exc.value.constraint == DECODABILITY


def test_binding_flags_disagree():
    inst, plan = toy_plan({(0, 0): ((0,), (0,), IDNC)})
    plan.user_rrh[0] = 1
    with pytest.raises(PlanValidationError) as exc:
        evaluate(plan, inst)
    assert exc.value.constraint == RRH_BINDING


def test_rate_above_capacity_and_metric_mismatch():
    inst, plan = toy_plan({(0, 0): ((0,), (0,), IDNC)})
    cell = plan.cells[(0, 0)]
    plan.cells[(0, 0)] = dataclasses.replace(cell, rate=1.5)
    with pytest.raises(PlanValidationError) as exc:
        evaluate(plan, inst)
    assert exc.value.constraint == DECODABILITY
    inst, plan = toy_plan({(0, 0): ((0,), (0,), IDNC)})
    plan.sum_rate = 7.0
    with pytest.raises(PlanValidationError) as exc:
        evaluate(plan, inst)
    assert exc.value.constraint == METRICS


def test_zero_rate_cells_are_dropped():
    inst = toy_instance()
    plan = assemble_plan(inst, "t", {(0, 0): ((0,), (0,), IDNC)}, np.zeros((2, 1)))
    assert not plan.cells and plan.sum_rate == 0.0
