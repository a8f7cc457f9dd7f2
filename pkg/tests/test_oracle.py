import pytest

from cranidnc.fixtures import toy_instance
from cranidnc.model import NetworkConfig, generate_instance
from cranidnc.oracle import OracleGuardError, brute_force_best_plan, target_options
from cranidnc.sched import evaluate, run_scheduler, schedule_joint

from helpers import seeded, small_instance


def test_guard():
    with pytest.raises(OracleGuardError):
        brute_force_best_plan(generate_instance(NetworkConfig()))


def test_toy():
    inst = toy_instance()
    plan = brute_force_best_plan(inst)
    assert plan.sum_rate == 3.0
    evaluate(plan, inst)
    assert len(target_options(inst)) == 7


@pytest.mark.parametrize("seed", seeded(20, 8))
def test_joint_equals_oracle(seed):
    inst = small_instance(seed, num_users=3, power_grid_points=5)
    oracle = brute_force_best_plan(inst)
    evaluate(oracle, inst)
    assert schedule_joint(inst).sum_rate == oracle.sum_rate
    assert oracle.info["oracle_value"] == pytest.approx(oracle.sum_rate, rel=1e-12)
    for name in ("classical", "rlnc", "max_power", "uncoded"):
        assert run_scheduler(name, inst).sum_rate <= oracle.sum_rate


def test_degree_cap_respected():
    inst = toy_instance(max_coding_degree=1)
    opts = target_options(inst)
    assert all(len(k) == 1 for k in opts.values())
    assert brute_force_best_plan(inst).sum_rate == schedule_joint(inst).sum_rate == 2.0
