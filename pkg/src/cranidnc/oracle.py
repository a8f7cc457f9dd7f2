"""Exhaustive reference solver for very small instances.

Works directly on the scheduling problem: choose, for every (RRH, RRB),
a set of targeted users that some XOR combination serves, keep every user
on at most one RRH, and pick the best grid power matrix. Nothing here goes
through the conflict graphs, the clique search or the power module.
"""

from __future__ import annotations

from itertools import combinations, product
from typing import Optional

import numpy as np

from .idnc import is_instantly_decodable
from .model import Instance, capacity, power_grid
from .sched import IDNC, assemble_plan

MAX_USERS, MAX_RRHS, MAX_RRBS, MAX_FILES = 4, 2, 2, 3


class OracleGuardError(ValueError):
    pass


def _subsets(items):
    items = list(items)
    for k in range(1, len(items) + 1):
        yield from combinations(items, k)


def target_options(instance: Instance) -> dict:
    """Every servable target set mapped to the smallest combination serving it."""
    side = instance.side_info
    cfg = instance.config
    out = {}
    for kappa in _subsets(range(cfg.num_files)):
        if cfg.max_coding_degree is not None and len(kappa) > cfg.max_coding_degree:
            continue
        decoders = [u for u in range(cfg.num_users) if is_instantly_decodable(kappa, u, side)]
        for tau in _subsets(decoders):
            if tau not in out or (len(kappa), kappa) < (len(out[tau]), out[tau]):
                out[tau] = kappa
    return out


def _best_rrb_powers(instance, z, taus, grid_points):
    """Best grid powers on RRB z for per-RRH target sets ``taus``."""
    cfg = instance.config
    B, Z = cfg.num_rrhs, cfg.num_rrbs
    pm = cfg.p_max_matrix()
    axes = [power_grid(pm[b, z], grid_points) for b in range(B)]
    best_val, best_pw = -1.0, None
    p = np.zeros((B, Z))
    for pw in product(*axes):
        p[:, z] = pw
        val = 0.0
        for b, tau in enumerate(taus):
            if tau:
                val += len(tau) * min(capacity(p, instance.channel, b, z, u) for u in tau)
        if val > best_val:
            best_val, best_pw = val, pw
    return best_val, best_pw


def brute_force_best_plan(instance: Instance, power_grid_points: Optional[int] = None):
    cfg = instance.config
    B, Z, U, F = cfg.num_rrhs, cfg.num_rrbs, cfg.num_users, cfg.num_files
    if U > MAX_USERS or B > MAX_RRHS or Z > MAX_RRBS or F > MAX_FILES:
        raise OracleGuardError(
            f"instance too large for brute force (U={U}, B={B}, Z={Z}, F={F}; "
            f"limits U<={MAX_USERS}, B<={MAX_RRHS}, Z<={MAX_RRBS}, F<={MAX_FILES})"
        )
    G = power_grid_points or cfg.power_grid_points
    options = target_options(instance)
    choices = [()] + sorted(options)

    # per-RRB candidates: target set per RRH, no user on two RRHs
    rrb_tables = []
    for z in range(Z):
        table = {}
        for taus in product(choices, repeat=B):
            users = [u for t in taus for u in t]
            if len(users) != len(set(users)):
                continue
            table[taus] = _best_rrb_powers(instance, z, taus, G)
        rrb_tables.append(table)

    best = {"val": -1.0, "key": None}

    def rec(z, binding, picked, total):
        if z == Z:
            key = tuple(picked)
            if total > best["val"] or (total == best["val"] and key < best["key"]):
                best.update(val=total, key=key)
            return
        for taus, (val, _) in rrb_tables[z].items():
            new = dict(binding)
            ok = True
            for b, tau in enumerate(taus):
                for u in tau:
                    if new.setdefault(u, b) != b:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                rec(z + 1, new, picked + [taus], total + val)

    rec(0, {}, [], 0.0)
    p = np.zeros((B, Z))
    assignment = {}
    for z, taus in enumerate(best["key"]):
        p[:, z] = rrb_tables[z][taus][1]
        for b, tau in enumerate(taus):
            if tau:
                assignment[(b, z)] = (options[tau], tau, IDNC)
    plan = assemble_plan(instance, "oracle", assignment, p)
    plan.info["oracle_value"] = best["val"]
    return plan
