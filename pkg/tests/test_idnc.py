import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cranidnc.fixtures import TOY_COMBINATIONS, TOY_HAS
from cranidnc.idnc import (
    Combination,
    CombinationBudgetExceeded,
    associations,
    associations_combinable,
    enumerate_combinations,
    is_instantly_decodable,
    reduce_by_targets,
    singleton_combinations,
)
from cranidnc.model import SideInformation

from helpers import subsets


def toy_side():
    return SideInformation.from_has(TOY_HAS, 3)


def brute_force_combinations(side, num_files, max_degree=None):
    """(kappa, tau): every user in tau decodes kappa and every file of kappa is wanted in tau."""
    out = set()
    users = range(side.num_users)
    for kappa in subsets(range(num_files)):
        if max_degree is not None and len(kappa) > max_degree:
            continue
        decoders = [u for u in users if is_instantly_decodable(kappa, u, side)]
        for tau in subsets(decoders):
            covered = set().union(*(set(kappa) & side.wants[u] for u in tau))
            if covered == set(kappa):
                out.add(Combination(kappa, tau))
    return sorted(out)


def test_toy_yields_the_seven_combinations():
    found = enumerate_combinations(toy_side())
    assert len(found) == 7
    assert set(found) == set(TOY_COMBINATIONS)
    assert Combination((0, 1, 2), (0, 1, 2)) in found


def test_decodability_rule():
    side = toy_side()
    assert is_instantly_decodable((0, 1), 0, side)
    assert is_instantly_decodable((0,), 0, side)
    assert not is_instantly_decodable((1,), 0, side)  # nothing new
    side2 = SideInformation.from_has([set(), {0}], 2)
    assert not is_instantly_decodable((0, 1), 0, side2)  # two unknown files


def test_association_edges():
    side = SideInformation.from_has([{1}, {0}, set()], 2)
    assert associations(side) == [(0, 0), (1, 1), (2, 0), (2, 1)]
    assert associations_combinable((0, 0), (2, 0), side)  # same file
    assert associations_combinable((0, 0), (1, 1), side)  # cross possession
    assert not associations_combinable((0, 0), (2, 1), side)  # u3 lacks f1
    assert not associations_combinable((2, 0), (2, 1), side)  # same user


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 5).flatmap(
        lambda F: st.tuples(
            st.just(F),
            st.lists(st.frozensets(st.integers(0, F - 1)), min_size=1, max_size=5),
        )
    )
)
def test_matches_brute_force(data):
    F, has = data
    side = SideInformation.from_has(has, F)
    assert enumerate_combinations(side) == brute_force_combinations(side, F)


@pytest.mark.parametrize("cap", [1, 2])
def test_degree_cap(cap):
    side = toy_side()
    found = enumerate_combinations(side, max_degree=cap)
    assert found == brute_force_combinations(side, 3, max_degree=cap)
    assert all(c.degree <= cap for c in found)


def test_budget():
    with pytest.raises(CombinationBudgetExceeded):
        enumerate_combinations(toy_side(), budget=3)


def test_empty_wants():
    side = SideInformation.from_has([{0, 1}, {0, 1}], 2)
    assert enumerate_combinations(side) == []


def test_reduce_by_targets_keeps_smallest_kappa():
    combos = [Combination((0, 1), (0,)), Combination((2,), (0,)), Combination((0,), (1,))]
    assert reduce_by_targets(combos) == [Combination((0,), (1,)), Combination((2,), (0,))]


def test_singletons_and_labels():
    s = singleton_combinations(TOY_COMBINATIONS)
    assert [c.label() for c in s] == ["(f1),(u1)", "(f2),(u2)", "(f3),(u3)"]
    with pytest.raises(ValueError):
        Combination((), (0,))
