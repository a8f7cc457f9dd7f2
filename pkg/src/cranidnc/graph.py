"""Conflict graphs whose cliques are feasible transmission schedules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .idnc import Combination, associations_combinable
from .model import Instance, capacity_tensor
from .power import VertexPowerSolver


class VertexBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ScheduleVertex:
    """One RRB's cross-RRH assignment: ``(rrh, combination, rate)`` triples."""

    z: int
    assignments: tuple
    powers: tuple  # (rrh, watts) pairs, aligned with assignments
    weight: float

    @property
    def part_id(self) -> int:
        return self.z

    @property
    def binding(self) -> dict:
        return {u: b for b, c, _ in self.assignments for u in c.tau}

    def label(self, names: Optional[dict] = None) -> str:
        parts = []
        for b, c, _ in self.assignments:
            name = names.get(c, c.label()) if names else c.label()
            parts.append(f"{b + 1}{self.z + 1}{name}")
        return "{" + ",".join(parts) + "}"

    def symbolic_weight(self) -> str:
        terms = []
        for b, c, _ in self.assignments:
            k = len(c.tau)
            r = f"r*_{b + 1}{self.z + 1}"
            terms.append(r if k == 1 else f"{k}*{r}")
        return "+".join(terms)


@dataclass(frozen=True)
class SchedVertexFixedP:
    b: int
    z: int
    u: int
    f: int
    r: float

    @property
    def weight(self) -> float:
        return self.r

    def label(self, rate_label: Optional[str] = None) -> str:
        r = rate_label if rate_label is not None else f"{self.r:g}"
        return f"{self.b + 1}{self.z + 1}{self.u + 1}{self.f + 1}{r}"


class ConflictGraph:
    """Undirected vertex-weighted graph with bitset adjacency.

    ``adj[i]`` is a Python int whose bit ``j`` is set iff i and j are
    adjacent. ``parts`` optionally labels each vertex with its part (RRB).
    """

    def __init__(self, vertices: Sequence, weights, adj: Sequence[int], parts: Optional[Sequence[int]] = None):
        self.vertices = list(vertices)
        self.weights = np.asarray(weights, dtype=float)
        self.adj = list(adj)
        self.parts = None if parts is None else list(parts)
        if not (len(self.vertices) == len(self.weights) == len(self.adj)):
            raise ValueError("vertex, weight and adjacency lengths differ")

    def __len__(self):
        return len(self.vertices)

    @classmethod
    def from_matrix(cls, weights, matrix, parts=None, vertices=None):
        m = np.asarray(matrix, dtype=bool)
        adj = [_bits_from_bool(row) for row in m]
        n = len(adj)
        return cls(list(range(n)) if vertices is None else vertices, weights, adj, parts)

    def adjacent(self, i: int, j: int) -> bool:
        return bool((self.adj[i] >> j) & 1)

    def neighbors(self, i: int) -> list:
        return _bit_indices(self.adj[i])

    def edges(self):
        for i in range(len(self)):
            for j in _bit_indices(self.adj[i] >> (i + 1)):
                yield i, i + 1 + j

    def check(self):
        for i in range(len(self)):
            if self.adjacent(i, i):
                raise ValueError(f"self edge at {i}")
            for j in self.neighbors(i):
                if not self.adjacent(j, i):
                    raise ValueError(f"asymmetric edge {i}-{j}")
            if self.parts is not None:
                for j in self.neighbors(i):
                    if self.parts[j] == self.parts[i]:
                        raise ValueError(f"edge inside part {self.parts[i]}")

    def is_clique(self, ids: Iterable[int]) -> bool:
        ids = list(ids)
        return all(self.adjacent(a, b) for k, a in enumerate(ids) for b in ids[k + 1:])

    def is_maximal_clique(self, ids: Iterable[int]) -> bool:
        ids = list(ids)
        if not self.is_clique(ids):
            return False
        common = (1 << len(self)) - 1
        for i in ids:
            common &= self.adj[i]
        return common == 0

    def dump_edgelist(self, out: TextIO, describe=repr):
        """Write ``# id weight part descriptor`` header lines, then one ``i j`` per edge."""
        out.write(f"# vertices {len(self)}\n")
        for i, v in enumerate(self.vertices):
            part = "-" if self.parts is None else self.parts[i]
            out.write(f"# {i} {self.weights[i]:.12g} {part} {describe(v)}\n")
        for i, j in self.edges():
            out.write(f"{i} {j}\n")


def _bits_from_bool(row) -> int:
    row = np.asarray(row, dtype=bool)
    if not row.size:
        return 0
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


def _bit_indices(x: int) -> list:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


# ---------------------------------------------------------------------------
# Power-control subgraphs and the CRAN-IDNC graph
# ---------------------------------------------------------------------------


def _user_mask(users) -> int:
    m = 0
    for u in users:
        m |= 1 << u
    return m


def enumerate_rrb_schedules(num_rrhs: int, combos: Sequence[Combination], limit: Optional[int] = None):
    """Every assignment of target-disjoint combinations to a nonempty RRH subset.

    Yields tuples of ``(rrh, combination)`` in RRH order.
    """
    masks = [_user_mask(c.tau) for c in combos]
    count = 0

    def rec(b, used, chosen):
        nonlocal count
        if b == num_rrhs:
            if chosen:
                count += 1
                if limit is not None and count > limit:
                    raise VertexBudgetExceeded(f"vertex budget exceeded ({limit})")
                yield tuple(chosen)
            return
        for c, m in zip(combos, masks):
            if m & used:
                continue
            chosen.append((b, c))
            yield from rec(b + 1, used | m, chosen)
            chosen.pop()
        yield from rec(b + 1, used, chosen)

    yield from rec(0, 0, [])


def _has_extension(schedule, combos, masks, num_rrhs) -> bool:
    used = 0
    busy = set()
    for b, c in schedule:
        used |= _user_mask(c.tau)
        busy.add(b)
    if len(busy) == num_rrhs:
        return False
    return any(not (m & used) for m in masks)


def build_power_subgraph(
    z: int,
    combos: Sequence[Combination],
    instance: Instance,
    power_solver=None,
    prune_silent: bool = False,
    vertex_budget: Optional[int] = None,
) -> list:
    """Vertices of the power-control subgraph of RRB ``z``, powers solved."""
    solver = power_solver or VertexPowerSolver(instance)
    B = instance.config.num_rrhs
    masks = [_user_mask(c.tau) for c in combos]
    schedules = [
        s for s in enumerate_rrb_schedules(B, combos, vertex_budget)
        if not (prune_silent and _has_extension(s, combos, masks, B))
    ]
    out = []
    for schedule in schedules:
        rep = solver(z, schedule)
        assignments = tuple((b, c, rep.rates[b]) for b, c in schedule)
        out.append(
            ScheduleVertex(
                z=z,
                assignments=assignments,
                powers=tuple((b, rep.powers[b]) for b, _ in schedule),
                weight=sum(len(c.tau) * r for _, c, r in assignments),
            )
        )
    return out


def cran_idnc_adjacent(v: ScheduleVertex, w: ScheduleVertex) -> bool:
    if v.z == w.z:
        return False
    bv, bw = v.binding, w.binding
    return all(bv[u] == bw[u] for u in bv.keys() & bw.keys())


def build_cran_idnc_graph(
    instance: Instance,
    combos: Sequence[Combination],
    power_solver=None,
    prune_silent: bool = False,
    vertex_budget: Optional[int] = None,
) -> ConflictGraph:
    solver = power_solver or VertexPowerSolver(instance)
    vertices = []
    for z in range(instance.config.num_rrbs):
        vertices.extend(build_power_subgraph(z, combos, instance, solver, prune_silent, vertex_budget))
    return assemble_cran_idnc_graph(vertices)


def assemble_cran_idnc_graph(vertices: Sequence[ScheduleVertex]) -> ConflictGraph:
    n = len(vertices)
    full = (1 << n) - 1
    part_mask = {}
    bound = {}  # user -> vertices serving it (any RRH)
    bound_at = {}  # (user, rrh) -> vertices serving it at that RRH
    for i, v in enumerate(vertices):
        bit = 1 << i
        part_mask[v.z] = part_mask.get(v.z, 0) | bit
        for u, b in v.binding.items():
            bound[u] = bound.get(u, 0) | bit
            bound_at[(u, b)] = bound_at.get((u, b), 0) | bit
    adj = []
    for v in vertices:
        conflicts = part_mask[v.z]
        for u, b in v.binding.items():
            conflicts |= bound[u] & ~bound_at[(u, b)]
        adj.append(full & ~conflicts)
    return ConflictGraph(vertices, [v.weight for v in vertices], adj, [v.z for v in vertices])


# ---------------------------------------------------------------------------
# Coordinated scheduling graph (fixed powers)
# ---------------------------------------------------------------------------


def coordinated_vertices(instance: Instance, p) -> list:
    caps = capacity_tensor(p, instance.channel)
    side = instance.side_info
    B, Z, U = caps.shape
    out = []
    for b in range(B):
        for z in range(Z):
            rates = sorted(set(float(x) for x in caps[b, z]))
            for u in range(U):
                for f in sorted(side.wants[u]):
                    for r in rates:
                        if r <= caps[b, z, u] and r > 0.0:
                            out.append(SchedVertexFixedP(b, z, u, f, r))
    return out


def coordinated_adjacent(v: SchedVertexFixedP, w: SchedVertexFixedP, side_info) -> bool:
    if (v.b, v.z) == (w.b, w.z):
        return v.r == w.r and associations_combinable((v.u, v.f), (w.u, w.f), side_info)
    if v.u == w.u and v.b == w.b:
        return True
    if v.b == w.b and (v.f == w.f or (v.f in side_info.has[w.u] and w.f in side_info.has[v.u])):
        return True
    return v.u != w.u


def build_coordinated_graph(instance: Instance, p) -> ConflictGraph:
    vertices = coordinated_vertices(instance, p)
    side = instance.side_info
    n = len(vertices)
    m = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if coordinated_adjacent(vertices[i], vertices[j], side):
                m[i, j] = m[j, i] = True
    return ConflictGraph.from_matrix([v.r for v in vertices], m, vertices=vertices)
