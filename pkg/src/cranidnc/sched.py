"""End-to-end schedulers and throughput metrics.

Every scheduler returns a TransmissionPlan whose cells carry the XOR
combination, targeted users, broadcast rate and power of one (RRH, RRB)
pair. ``evaluate`` re-checks a plan from scratch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import clique as cq
from .graph import assemble_cran_idnc_graph, build_coordinated_graph, build_power_subgraph
from .idnc import enumerate_combinations, is_instantly_decodable, reduce_by_targets, singleton_combinations
from .model import Instance, capacity, capacity_tensor
from .power import VertexPowerSolver, iterate_power

log = logging.getLogger(__name__)

RLNC = "rlnc"
IDNC = "idnc"

# constraint names used in validation errors
POWER_BOX = "power-box"
RRH_BINDING = "rrh-binding"
SINGLE_RRH = "single-rrh"
DECODABILITY = "decodability"
METRICS = "metrics"

RATE_SLACK = 1e-12


class PlanValidationError(ValueError):
    def __init__(self, constraint: str, message: str):
        super().__init__(f"[{constraint}] {message}")
        self.constraint = constraint


@dataclass(frozen=True)
class Cell:
    kappa: tuple  # XOR-ed files; for RLNC cells the whole library
    tau: tuple
    rate: float
    power: float
    coding: str = IDNC


@dataclass
class TransmissionPlan:
    scheduler: str
    cells: dict  # (b, z) -> Cell, active cells only
    powers: np.ndarray  # (B, Z) watts
    user_rrh: list  # per user: serving RRH or None
    user_rrb_flags: np.ndarray  # (U, B, Z) bool
    sum_rate: float
    delivered_bits: int
    per_user_hz: float
    flags: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def metrics(self) -> dict:
        return {
            "sum_rate": self.sum_rate,
            "delivered_bits": self.delivered_bits,
            "per_user_hz": self.per_user_hz,
        }

    def to_dict(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "cells": [
                {
                    "rrh": b,
                    "rrb": z,
                    "files": list(c.kappa),
                    "users": list(c.tau),
                    "rate": c.rate,
                    "power": c.power,
                    "coding": c.coding,
                }
                for (b, z), c in sorted(self.cells.items())
            ],
            "user_rrh": list(self.user_rrh),
            "sum_rate": self.sum_rate,
            "delivered_bits": self.delivered_bits,
            "per_user_hz": self.per_user_hz,
            "flags": list(self.flags),
        }

    def describe(self) -> str:
        lines = [f"scheduler: {self.scheduler}"]
        for (b, z), c in sorted(self.cells.items()):
            files = "+".join(f"f{f + 1}" for f in c.kappa) if c.coding == IDNC else "RLNC(all files)"
            users = ",".join(f"u{u + 1}" for u in c.tau)
            lines.append(
                f"  RRH {b + 1} RRB {z + 1}: {files} -> {{{users}}} rate={c.rate:.6g} power={c.power:.6g} W"
            )
        if not self.cells:
            lines.append("  (no transmissions)")
        lines.append(f"sum_rate: {self.sum_rate:.12g}")
        lines.append(f"per_user_hz: {self.per_user_hz:.12g}")
        lines.append(f"delivered_bits: {self.delivered_bits}")
        if self.flags:
            lines.append(f"flags: {';'.join(self.flags)}")
        return "\n".join(lines)


def assemble_plan(instance: Instance, scheduler: str, assignment: dict, powers, flags=None) -> TransmissionPlan:
    """Build a plan from ``(b, z) -> (kappa, tau, coding)`` and a power matrix.

    Rates are the minimum targeted capacity at the given powers. Cells with
    nobody to serve, or whose rate comes out as zero, are dropped and their
    power set to zero.
    """
    cfg = instance.config
    B, Z, U = cfg.num_rrhs, cfg.num_rrbs, cfg.num_users
    p = np.array(powers, dtype=float).reshape(B, Z)
    live = {k: v for k, v in assignment.items() if v[1]}
    while True:
        for b in range(B):
            for z in range(Z):
                if (b, z) not in live:
                    p[b, z] = 0.0
        rates = {
            (b, z): min(capacity(p, instance.channel, b, z, u) for u in tau)
            for (b, z), (_, tau, _) in live.items()
        }
        dead = [k for k, r in rates.items() if not r > 0.0]
        if not dead:
            break
        for k in dead:
            del live[k]
    cells = {}
    for (b, z), (kappa, tau, coding) in sorted(live.items()):
        cells[(b, z)] = Cell(tuple(kappa), tuple(sorted(tau)), rates[(b, z)], float(p[b, z]), coding)
    user_rrh = [None] * U
    flags_x = np.zeros((U, B, Z), dtype=bool)
    for (b, z), c in cells.items():
        for u in c.tau:
            flags_x[u, b, z] = True
            user_rrh[u] = b
    sum_rate = 0.0
    served = 0
    for c in cells.values():
        sum_rate += len(c.tau) * c.rate
        served += len(c.tau)
    return TransmissionPlan(
        scheduler=scheduler,
        cells=cells,
        powers=p,
        user_rrh=user_rrh,
        user_rrb_flags=flags_x,
        sum_rate=sum_rate,
        delivered_bits=int(cfg.file_size) * served,
        per_user_hz=sum_rate / U,
        flags=list(flags or []),
    )


def evaluate(plan: TransmissionPlan, instance: Instance) -> dict:
    """Independent feasibility check and metric recomputation."""
    cfg = instance.config
    B, Z, U = cfg.num_rrhs, cfg.num_rrbs, cfg.num_users
    p = np.asarray(plan.powers, dtype=float)
    pm = cfg.p_max_matrix()
    if p.shape != (B, Z):
        raise PlanValidationError(POWER_BOX, f"power matrix shape {p.shape} != {(B, Z)}")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > pm * (1 + 1e-12)):
        raise PlanValidationError(POWER_BOX, "power outside [0, p_max]")

    serving = {}
    for (b, z), c in plan.cells.items():
        if not (0 <= b < B and 0 <= z < Z):
            raise PlanValidationError(RRH_BINDING, f"cell ({b}, {z}) out of range")
        for u in c.tau:
            serving.setdefault(u, set()).add(b)
    for u, rrhs in sorted(serving.items()):
        if len(rrhs) > 1:
            raise PlanValidationError(
                SINGLE_RRH, f"user {u + 1} is served by RRHs {sorted(b + 1 for b in rrhs)}"
            )

    x = np.zeros((U, B, Z), dtype=bool)
    for (b, z), c in plan.cells.items():
        for u in c.tau:
            x[u, b, z] = True
    if plan.user_rrb_flags.shape != x.shape or np.any(plan.user_rrb_flags != x):
        raise PlanValidationError(RRH_BINDING, "user/RRB flags disagree with targeted sets")
    for u in range(U):
        expected = next(iter(serving[u])) if u in serving else None
        if plan.user_rrh[u] != expected:
            raise PlanValidationError(
                RRH_BINDING, f"user {u + 1} bound to RRH {plan.user_rrh[u]} but served by {expected}"
            )

    sum_rate = 0.0
    served = 0
    for (b, z), c in sorted(plan.cells.items()):
        if not c.tau:
            raise PlanValidationError(DECODABILITY, f"cell ({b + 1}, {z + 1}) has no targeted users")
        if c.power != p[b, z]:
            raise PlanValidationError(POWER_BOX, f"cell ({b + 1}, {z + 1}) power disagrees with matrix")
        for u in c.tau:
            if c.coding == IDNC:
                if not is_instantly_decodable(c.kappa, u, instance.side_info):
                    raise PlanValidationError(
                        DECODABILITY, f"user {u + 1} cannot instantly decode files {list(c.kappa)}"
                    )
            elif not instance.side_info.wants[u]:
                raise PlanValidationError(DECODABILITY, f"user {u + 1} wants nothing")
            cap = capacity(p, instance.channel, b, z, u)
            if c.rate > cap + RATE_SLACK * max(1.0, cap):
                raise PlanValidationError(
                    DECODABILITY, f"rate {c.rate} exceeds capacity {cap} of user {u + 1}"
                )
        sum_rate += len(c.tau) * c.rate
        served += len(c.tau)
    metrics = {
        "sum_rate": sum_rate,
        "delivered_bits": int(cfg.file_size) * served,
        "per_user_hz": sum_rate / U,
    }
    if not math.isclose(metrics["sum_rate"], plan.sum_rate, rel_tol=1e-9, abs_tol=1e-12):
        raise PlanValidationError(METRICS, f"stored sum_rate {plan.sum_rate} != recomputed {sum_rate}")
    if metrics["delivered_bits"] != plan.delivered_bits:
        raise PlanValidationError(METRICS, "stored delivered_bits disagrees")
    if not math.isclose(metrics["per_user_hz"], plan.per_user_hz, rel_tol=1e-9, abs_tol=1e-12):
        raise PlanValidationError(METRICS, "stored per_user_hz disagrees")
    return metrics


# ---------------------------------------------------------------------------
# Graph-based joint scheduler and its variants
# ---------------------------------------------------------------------------


def _combinations(instance, singleton_only=False):
    cfg = instance.config
    combos = enumerate_combinations(instance.side_info, cfg.max_coding_degree, cfg.combination_budget)
    if singleton_only:
        combos = singleton_combinations(combos)
    # vertices differing only in kappa have identical weight and conflicts
    return reduce_by_targets(combos)


def joint_graph(instance: Instance, fixed_power=False, singleton_only=False, grid_points=None):
    combos = _combinations(instance, singleton_only)
    solver = VertexPowerSolver(instance, grid_points, fixed=fixed_power)
    vertices = []
    for z in range(instance.config.num_rrbs):
        for v in build_power_subgraph(z, combos, instance, solver, instance.config.prune_silent):
            # an assignment left at zero rate is dominated by the same
            # vertex without it (fewer bindings, weight at least as large)
            if all(r > 0.0 for _, _, r in v.assignments):
                vertices.append(v)
    return assemble_cran_idnc_graph(vertices)


def _plan_from_vertices(instance, name, vertices, flags):
    B, Z = instance.config.num_rrhs, instance.config.num_rrbs
    p = np.zeros((B, Z))
    assignment = {}
    for v in vertices:
        powers = dict(v.powers)
        for b, c, _ in v.assignments:
            assignment[(b, v.z)] = (c.kappa, c.tau, IDNC)
            p[b, v.z] = powers[b]
    return assemble_plan(instance, name, assignment, p, flags)


def _solve_graph(g, exact, node_budget, workers):
    flags = []
    if not exact:
        return cq.greedy_max_weight_clique(g), ["greedy"]
    best = cq.exact_max_weight_clique(g, node_budget=node_budget, workers=workers)
    if not best.proven:
        greedy = cq.greedy_max_weight_clique(g)
        if greedy.total_weight > best.total_weight:
            best = greedy
        flags.append("budget-degraded")
        log.warning("clique node budget exhausted; using best of incumbent and greedy")
    return best, flags


def schedule_joint(
    instance: Instance,
    exact: bool = True,
    node_budget: Optional[int] = None,
    workers: int = 1,
    grid_points: Optional[int] = None,
    fixed_power: bool = False,
    singleton_only: bool = False,
    name: str = "joint",
) -> TransmissionPlan:
    """Maximum-weight clique over the CRAN-IDNC graph with per-vertex powers."""
    if node_budget is None:
        node_budget = instance.config.node_budget
    g = joint_graph(instance, fixed_power, singleton_only, grid_points)
    best, flags = _solve_graph(g, exact, node_budget, workers)
    plan = _plan_from_vertices(instance, name, [g.vertices[i] for i in best.ids], flags)
    plan.info.update(vertices=len(g), clique_nodes=best.nodes, clique_weight=best.total_weight)
    return plan


def schedule_max_power(instance: Instance, **kw) -> TransmissionPlan:
    return schedule_joint(instance, fixed_power=True, name="max_power", **kw)


def schedule_uncoded_joint(instance: Instance, **kw) -> TransmissionPlan:
    return schedule_joint(instance, singleton_only=True, name="uncoded", **kw)


# ---------------------------------------------------------------------------
# Iterative scheduler
# ---------------------------------------------------------------------------


def _assignment_from_coordinated(g, ids):
    groups = {}
    for i in ids:
        v = g.vertices[i]
        files, users = groups.setdefault((v.b, v.z), (set(), set()))
        files.add(v.f)
        users.add(v.u)
    return {k: (tuple(sorted(f)), tuple(sorted(u)), IDNC) for k, (f, u) in groups.items()}


def schedule_iterative(
    instance: Instance,
    power_tol: float = 1e-6,
    power_max_iter: int = 500,
    exact: bool = False,
    node_budget: Optional[int] = None,
) -> TransmissionPlan:
    """Alternate fixed-power coordinated scheduling and fixed-schedule power control.

    Keeps the best plan seen; ``plan.trace`` holds the best objective after
    each outer iteration.
    """
    cfg = instance.config
    p = cfg.p_max_matrix()
    best = None
    trace = []
    last_obj = None
    converged = False
    iterations = 0
    for it in range(cfg.max_iterations):
        iterations = it + 1
        g = build_coordinated_graph(instance, p)
        if exact:
            cl = cq.exact_max_weight_clique(g, node_budget=node_budget or cfg.node_budget)
        else:
            cl = cq.greedy_max_weight_clique(g)
        assignment = _assignment_from_coordinated(g, cl.ids)
        at_p = assemble_plan(instance, "iterative", assignment, p)
        if it == 0:
            first_objective = at_p.sum_rate  # all-p_max schedule
        schedule = {k: v[1] for k, v in assignment.items()}
        res = iterate_power(schedule, instance, p0=at_p.powers, tol=power_tol, max_iter=power_max_iter)
        after = assemble_plan(instance, "iterative", assignment, res.powers)
        for cand in (at_p, after):
            if best is None or cand.sum_rate > best.sum_rate:
                best = cand
        trace.append(best.sum_rate)
        obj = after.sum_rate
        if last_obj is not None and obj - last_obj < cfg.tolerance:
            converged = True
            break
        last_obj = obj
        p = res.powers
    best.trace = trace
    best.info["iterations"] = iterations
    best.info["first_objective"] = first_objective
    if not converged:
        best.flags.append("not-converged")
    return best


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def _full_power_for(instance, assignment):
    pm = instance.config.p_max_matrix()
    p = np.zeros_like(pm)
    for (b, z) in assignment:
        p[b, z] = pm[b, z]
    return p


def schedule_classical_idnc(instance: Instance) -> TransmissionPlan:
    """Rate-unaware IDNC: each RRB greedily targets as many new users as possible."""
    cfg = instance.config
    combos = enumerate_combinations(instance.side_info, cfg.max_coding_degree, cfg.combination_budget)
    combos = sorted(combos, key=lambda c: (-len(c.tau), len(c.kappa), c.kappa, c.tau))
    served = set()
    assignment = {}
    for b in range(cfg.num_rrhs):
        for z in range(cfg.num_rrbs):
            for c in combos:
                if not served.intersection(c.tau):
                    assignment[(b, z)] = (c.kappa, c.tau, IDNC)
                    served.update(c.tau)
                    break
    return assemble_plan(instance, "classical", assignment, _full_power_for(instance, assignment))


def schedule_rlnc(instance: Instance) -> TransmissionPlan:
    """Each user joins the RRB where its full-power capacity is largest."""
    cfg = instance.config
    B, Z, U = cfg.num_rrhs, cfg.num_rrbs, cfg.num_users
    caps = capacity_tensor(cfg.p_max_matrix(), instance.channel)
    members = {}
    for u in range(U):
        if not instance.side_info.wants[u]:
            continue
        k = int(np.argmax(caps[:, :, u].ravel()))
        members.setdefault(divmod(k, Z), []).append(u)
    library = tuple(range(cfg.num_files))
    assignment = {k: (library, tuple(v), RLNC) for k, v in members.items()}
    return assemble_plan(instance, "rlnc", assignment, _full_power_for(instance, assignment))


SCHEDULERS = {
    "joint": schedule_joint,
    "iterative": schedule_iterative,
    "classical": schedule_classical_idnc,
    "rlnc": schedule_rlnc,
    "max_power": schedule_max_power,
    "uncoded": schedule_uncoded_joint,
}

GRAPH_SCHEDULERS = {"joint", "max_power", "uncoded"}


def run_scheduler(name: str, instance: Instance, exact: bool = True, node_budget: Optional[int] = None) -> TransmissionPlan:
    if name not in SCHEDULERS:
        raise KeyError(f"unknown scheduler {name!r}; choose from {sorted(SCHEDULERS)}")
    if name in GRAPH_SCHEDULERS:
        return SCHEDULERS[name](instance, exact=exact, node_budget=node_budget)
    return SCHEDULERS[name](instance)
