"""Instantly decodable XOR combinations from Has/Wants side information."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .model import SideInformation


class CombinationBudgetExceeded(RuntimeError):
    def __init__(self, budget):
        super().__init__(f"combination budget exceeded ({budget})")
        self.budget = budget


@dataclass(frozen=True, order=True)
class Combination:
    """XOR of the files in ``kappa`` targeting the users in ``tau``.

    Both fields are sorted tuples of 0-based indices, so the natural
    dataclass ordering is lexicographic on (kappa, tau).
    """

    kappa: tuple
    tau: tuple

    def __post_init__(self):
        object.__setattr__(self, "kappa", tuple(sorted(set(self.kappa))))
        object.__setattr__(self, "tau", tuple(sorted(set(self.tau))))
        if not self.kappa or not self.tau:
            raise ValueError("combination needs at least one file and one user")

    @property
    def degree(self) -> int:
        return len(self.kappa)

    def label(self) -> str:
        files = "+".join(f"f{f + 1}" for f in self.kappa)
        users = ",".join(f"u{u + 1}" for u in self.tau)
        return f"({files}),({users})"


def is_instantly_decodable(kappa: Iterable[int], u: int, side_info: SideInformation) -> bool:
    kappa = frozenset(kappa)
    wanted = kappa & side_info.wants[u]
    return len(wanted) == 1 and (kappa - wanted) <= side_info.has[u]


def associations(side_info: SideInformation) -> list:
    """Every (user, wanted file) pair, sorted."""
    return [(u, f) for u in range(side_info.num_users) for f in sorted(side_info.wants[u])]


def associations_combinable(s, t, side_info: SideInformation) -> bool:
    (u, f), (v, g) = s, t
    if u == v:
        return False
    if f == g:
        return True
    return f in side_info.has[v] and g in side_info.has[u]


def enumerate_combinations(
    side_info: SideInformation,
    max_degree: Optional[int] = None,
    budget: Optional[int] = None,
) -> list:
    """All (kappa, tau) pairs realised by cliques of the association graph.

    Every clique, not only maximal ones, yields a combination; ``max_degree``
    caps the number of XOR-ed files. Raises CombinationBudgetExceeded once
    more than ``budget`` distinct combinations are found.
    """
    assoc = associations(side_info)
    n = len(assoc)
    later = [
        [j for j in range(i + 1, n) if associations_combinable(assoc[i], assoc[j], side_info)]
        for i in range(n)
    ]
    found = set()

    def extend(users, files, cands):
        key = (tuple(sorted(files)), tuple(sorted(users)))
        if key not in found:
            found.add(key)
            if budget is not None and len(found) > budget:
                raise CombinationBudgetExceeded(budget)
        for j in cands:
            v, g = assoc[j]
            new_files = files | {g}
            if max_degree is not None and len(new_files) > max_degree:
                continue
            extend(users | {v}, new_files, [k for k in cands if k > j and k in later_sets[j]])

    later_sets = [set(x) for x in later]
    for i in range(n):
        u, f = assoc[i]
        extend(frozenset([u]), frozenset([f]), later[i])
    return sorted(Combination(kappa=k, tau=t) for k, t in found)


def reduce_by_targets(combos: Iterable[Combination]) -> list:
    """Keep one combination (the smallest kappa) per distinct target set."""
    best = {}
    for c in sorted(combos, key=lambda c: (len(c.kappa), c.kappa, c.tau)):
        best.setdefault(c.tau, c)
    return sorted(best.values())


def singleton_combinations(combos: Iterable[Combination]) -> list:
    return [c for c in combos if len(c.kappa) == 1 and len(c.tau) == 1]
