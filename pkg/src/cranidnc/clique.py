"""Maximum-weight clique search on ConflictGraph."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .graph import ConflictGraph, _bit_indices


@dataclass(frozen=True)
class Clique:
    ids: tuple
    total_weight: float
    proven: bool = True
    nodes: int = 0
    flags: tuple = field(default=())

    def __len__(self):
        return len(self.ids)


def _make(g: ConflictGraph, ids, proven=True, nodes=0, flags=()):
    ids = tuple(sorted(ids))
    return Clique(ids, float(sum(g.weights[i] for i in ids)), proven, nodes, tuple(flags))


def _weight_order(g: ConflictGraph):
    return sorted(range(len(g)), key=lambda i: (-g.weights[i], i))


def greedy_max_weight_clique(g: ConflictGraph) -> Clique:
    """Repeatedly take the heaviest vertex adjacent to everything taken so far."""
    order = _weight_order(g)
    cand = (1 << len(g)) - 1
    chosen = []
    while cand:
        v = next(i for i in order if (cand >> i) & 1)
        chosen.append(v)
        cand &= g.adj[v]
    return _make(g, chosen)


class _Budget(Exception):
    pass


class _Search:
    def __init__(self, g: ConflictGraph, node_budget: Optional[int]):
        self.g = g
        self.w = [float(x) for x in g.weights]
        self.node_budget = node_budget
        self.nodes = 0
        self.best_w = -1.0
        self.best_ids = ()

    def offer(self, w, ids):
        ids = tuple(sorted(ids))
        if w > self.best_w or (w == self.best_w and ids < self.best_ids):
            self.best_w, self.best_ids = w, ids

    def tick(self):
        self.nodes += 1
        if self.node_budget is not None and self.nodes > self.node_budget:
            raise _Budget


class _PartSearch(_Search):
    """DFS over parts: pick one vertex of each part or skip it."""

    def __init__(self, g, node_budget):
        super().__init__(g, node_budget)
        labels = sorted(set(g.parts))
        self.part_lists = [
            [i for i in _weight_order(g) if g.parts[i] == lab] for lab in labels
        ]
        tops = [max([self.w[i] for i in lst], default=0.0) for lst in self.part_lists]
        self.static_rest = [0.0] * (len(tops) + 1)
        for k in range(len(tops) - 1, -1, -1):
            self.static_rest[k] = self.static_rest[k + 1] + max(tops[k], 0.0)

    def rest_bound(self, k, cand):
        total = 0.0
        for lst in self.part_lists[k:]:
            for i in lst:
                if (cand >> i) & 1:
                    total += max(self.w[i], 0.0)
                    break
        return total

    def dfs(self, k, cand, cur, chosen):
        self.tick()
        if k == len(self.part_lists):
            self.offer(cur, chosen)
            return
        if cur + self.rest_bound(k, cand) < self.best_w:
            return
        for i in self.part_lists[k]:
            if cur + self.w[i] + self.static_rest[k + 1] < self.best_w:
                break
            if (cand >> i) & 1:
                chosen.append(i)
                self.dfs(k + 1, cand & self.g.adj[i], cur + self.w[i], chosen)
                chosen.pop()
        self.dfs(k + 1, cand, cur, chosen)

    def first_choices(self):
        if not self.part_lists:
            return [None]
        return list(self.part_lists[0]) + [None]

    def run_from(self, first, full):
        if not self.part_lists:
            self.offer(0.0, [])
        elif first is None:
            self.dfs(1, full, 0.0, [])
        else:
            self.dfs(1, full & self.g.adj[first], self.w[first], [first])


class _GeneralSearch(_Search):
    """Weighted branch and bound with a greedy colouring bound."""

    def colour_bound(self, cand):
        bound = 0.0
        rest = cand
        order = [i for i in self.order if (rest >> i) & 1]
        while order:
            # one colour class: greedy independent set, heaviest first
            cls_max = None
            blocked = 0
            left = []
            for i in order:
                if (blocked >> i) & 1:
                    left.append(i)
                    continue
                if cls_max is None:
                    cls_max = max(self.w[i], 0.0)
                blocked |= self.g.adj[i]
            bound += cls_max
            order = left
        return bound

    def expand(self, cand, cur, chosen):
        self.tick()
        self.offer(cur, chosen)
        if not cand or cur + self.colour_bound(cand) < self.best_w:
            return
        for i in [i for i in self.order if (cand >> i) & 1]:
            if not (cand >> i) & 1:
                continue
            if cur + self.colour_bound(cand) < self.best_w:
                return
            chosen.append(i)
            self.expand(cand & self.g.adj[i], cur + self.w[i], chosen)
            chosen.pop()
            cand &= ~(1 << i)

    def run(self):
        self.order = _weight_order(self.g)
        self.expand((1 << len(self.g)) - 1, 0.0, [])


def exact_max_weight_clique(
    g: ConflictGraph,
    node_budget: Optional[int] = None,
    use_parts: bool = True,
    workers: int = 1,
) -> Clique:
    """Global optimum; ties go to the lexicographically smallest id set.

    Uses the part structure when the graph has one (at most one vertex per
    part). If ``node_budget`` search nodes are exhausted the incumbent is
    returned with ``proven=False``.
    """
    greedy = greedy_max_weight_clique(g)
    if g.parts is not None and use_parts:
        return _exact_parts(g, node_budget, workers, greedy)
    s = _GeneralSearch(g, node_budget)
    s.offer(greedy.total_weight, greedy.ids)
    try:
        s.run()
    except _Budget:
        return _make(g, s.best_ids, proven=False, nodes=s.nodes, flags=("bound-not-proven",))
    return _make(g, s.best_ids, nodes=s.nodes)


def _exact_parts(g, node_budget, workers, greedy):
    full = (1 << len(g)) - 1
    probe = _PartSearch(g, node_budget)
    choices = probe.first_choices()
    if workers <= 1:
        searches = [probe]
        probe.offer(greedy.total_weight, greedy.ids)
        proven = True
        try:
            for first in choices:
                probe.run_from(first, full)
        except _Budget:
            proven = False
    else:
        def task(first):
            s = _PartSearch(g, node_budget)
            s.offer(greedy.total_weight, greedy.ids)
            try:
                s.run_from(first, full)
                return s, True
            except _Budget:
                return s, False

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, choices))
        searches = [s for s, _ in results]
        proven = all(ok for _, ok in results)
    best = max(searches, key=lambda s: (s.best_w, tuple(-i for i in s.best_ids)))
    # lexicographic tie-break across workers
    ties = [s.best_ids for s in searches if s.best_w == best.best_w]
    ids = min(ties)
    nodes = sum(s.nodes for s in searches)
    if not proven:
        return _make(g, ids, proven=False, nodes=nodes, flags=("bound-not-proven",))
    return _make(g, ids, nodes=nodes)


def brute_force_max_weight_clique(g: ConflictGraph) -> Clique:
    """Subset enumeration; only for tiny graphs."""
    n = len(g)
    if n > 20:
        raise ValueError("brute force limited to 20 vertices")
    best_w, best_ids = -1.0, ()
    for mask in range(1 << n):
        ids = _bit_indices(mask)
        if g.parts is not None and len({g.parts[i] for i in ids}) < len(ids):
            continue
        if not g.is_clique(ids):
            continue
        w = sum(float(g.weights[i]) for i in ids)
        key = tuple(ids)
        if w > best_w or (w == best_w and key < best_ids):
            best_w, best_ids = w, key
    return _make(g, best_ids)


def maximal_cliques(g: ConflictGraph):
    """Bron-Kerbosch with pivoting; yields sorted id tuples."""

    def bk(r, p, x):
        if not p and not x:
            yield tuple(sorted(r))
            return
        pivot = _bit_indices(p | x)[0]
        for v in _bit_indices(p & ~g.adj[pivot]):
            yield from bk(r + [v], p & g.adj[v], x & g.adj[v])
            p &= ~(1 << v)
            x |= 1 << v

    if len(g) == 0:
        return
    yield from bk([], (1 << len(g)) - 1, 0)
