"""Per-RRB power control.

Two solvers live here:

* a grid search for the power levels of one scheduling vertex, maximising
  ``sum_b |tau_b| * min_{u in tau_b} log2(1 + SINR_u)`` over the box
  ``[0, p_max]`` of the active RRHs;
* the fixed-point ("KKT") update for a fixed schedule, maximising the sum
  of per-user rates ``sum_b sum_{u in tau_b} log2(1 + SINR_u)`` one RRB at a
  time with Gauss-Seidel sweeps.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import Instance, capacity, power_grid

LN2 = math.log(2.0)
MAX_EXHAUSTIVE_ACTIVE = 3
ASCENT_STARTS = 8


@dataclass
class PowerSolveReport:
    powers: dict  # rrh -> watts
    rates: dict  # rrh -> bits/s/Hz
    objective: float
    method: str
    iterations: int = 0
    kkt_residual: float = 0.0
    t_terms: dict = field(default_factory=dict)


def _targets(assignment):
    """Accept (b, Combination) or (b, users) pairs."""
    b, item = assignment
    users = getattr(item, "tau", item)
    return int(b), tuple(sorted(users))


def vertex_rates(instance: Instance, z: int, powers: Mapping[int, float], targets: Mapping[int, tuple]):
    """Min targeted capacity per active RRH with all other RRHs silent on z."""
    B, Z = instance.config.num_rrhs, instance.config.num_rrbs
    p = np.zeros((B, Z))
    for b, w in powers.items():
        p[b, z] = w
    return {b: min(capacity(p, instance.channel, b, z, u) for u in users) for b, users in targets.items()}


class VertexPowerSolver:
    """Solves the per-vertex power problem, caching SINR grids per RRB.

    ``fixed`` pins every active RRH to p_max instead of searching (used by
    the maximum-power baseline).
    """

    def __init__(self, instance: Instance, grid_points: Optional[int] = None, fixed: bool = False):
        self.instance = instance
        self.grid_points = grid_points or instance.config.power_grid_points
        self.fixed = fixed
        self.p_max = instance.config.p_max_matrix()
        self._grids = {}
        self._sinr = {}
        self._min_rate = {}
        self._buf = None
        self._gains = instance.channel.gains.tolist()

    def _grid(self, z, active):
        key = (z, active)
        if key not in self._grids:
            axes = [power_grid(self.p_max[b, z], self.grid_points) for b in active]
            mesh = np.meshgrid(*axes, indexing="ij")
            self._grids[key] = (axes, np.stack([m.ravel() for m in mesh], axis=1))
        return self._grids[key]

    def _sinr_grid(self, z, active, i, u):
        key = (z, active, i, u)
        arr = self._sinr.get(key)
        if arr is None:
            _, P = self._grid(z, active)
            ch = self.instance.channel
            g = ch.gains[list(active), z, u]
            denom = ch.noise_power
            if ch.interference:
                for j in range(len(active)):
                    if j != i:
                        denom = denom + P[:, j] * g[j]
            arr = P[:, i] * g[i] / denom
            self._sinr[key] = arr
        return arr

    def _rate_grid(self, z, active, i, users):
        key = (z, active, i, users)
        arr = self._min_rate.get(key)
        if arr is None:
            s = self._sinr_grid(z, active, i, users[0])
            for u in users[1:]:
                s = np.minimum(s, self._sinr_grid(z, active, i, u))
            arr = len(users) * np.log2(1.0 + s)
            self._min_rate[key] = arr
        return arr

    def _objective_at(self, z, active, targets, powers):
        # same operation order as model.sinr, skipping the silent RRHs
        ch = self.instance.channel
        g = self._gains
        noise = ch.noise_power
        rates = {}
        objective = 0.0
        for b, pb in zip(active, powers):
            worst = math.inf
            if pb == 0.0:
                worst = 0.0
            else:
                for u in targets[b]:
                    interf = 0.0
                    if ch.interference:
                        for bb, pbb in zip(active, powers):
                            if bb != b:
                                interf += pbb * g[bb][z][u]
                    s = pb * g[b][z][u] / (noise + interf)
                    r = math.log2(1.0 + s)
                    if r < worst:
                        worst = r
            rates[b] = worst
        for b in active:
            objective += len(targets[b]) * rates[b]
        return objective, rates

    def __call__(self, z: int, assignments: Sequence) -> PowerSolveReport:
        targets = dict(_targets(a) for a in assignments)
        active = tuple(sorted(targets))
        if not active:
            raise ValueError("a vertex needs at least one active RRH")
        if self.fixed:
            powers = tuple(float(self.p_max[b, z]) for b in active)
            method = "fixed"
        elif len(active) <= MAX_EXHAUSTIVE_ACTIVE:
            _, P = self._grid(z, active)
            if len(active) == 1:
                k = int(np.argmax(self._rate_grid(z, active, 0, targets[active[0]])))
            else:
                buf = self._buffer(len(P))
                np.add(
                    self._rate_grid(z, active, 0, targets[active[0]]),
                    self._rate_grid(z, active, 1, targets[active[1]]),
                    out=buf,
                )
                for i in range(2, len(active)):
                    np.add(buf, self._rate_grid(z, active, i, targets[active[i]]), out=buf)
                k = int(np.argmax(buf))  # first maximum = lexicographically smallest
            powers = tuple(float(x) for x in P[k])
            method = "grid"
        else:
            powers = self._ascent(z, active, targets)
            method = "ascent"
        objective, rates = self._objective_at(z, active, targets, powers)
        return PowerSolveReport(
            powers=dict(zip(active, powers)), rates=rates, objective=objective, method=method
        )

    def _buffer(self, n):
        if self._buf is None or len(self._buf) != n:
            self._buf = np.empty(n)
        return self._buf

    def _ascent(self, z, active, targets):
        axes = [power_grid(self.p_max[b, z], self.grid_points) for b in active]
        G = self.grid_points
        seed = zlib.crc32(repr((self.instance.config.rng_seed, z, sorted(targets.items()))).encode())
        rng = np.random.default_rng(seed)
        starts = [tuple([G - 1] * len(active))]
        starts += [tuple(int(x) for x in rng.integers(0, G, len(active))) for _ in range(ASCENT_STARTS)]

        def value(idx):
            return self._objective_at(z, active, targets, [axes[i][j] for i, j in enumerate(idx)])[0]

        best = None
        for start in starts:
            idx = list(start)
            cur = value(idx)
            improved = True
            while improved:
                improved = False
                for i in range(len(active)):
                    for j in range(G):
                        if j == idx[i]:
                            continue
                        trial = idx.copy()
                        trial[i] = j
                        v = value(trial)
                        if v > cur or (v == cur and j < idx[i]):
                            idx, cur, improved = trial, v, improved or v > cur
            cand = (cur, tuple(-x for x in idx))
            if best is None or cand > best:
                best = cand
        idx = [-x for x in best[1]]
        return tuple(float(axes[i][j]) for i, j in enumerate(idx))


def solve_vertex_power(assignments, z: int, instance: Instance, grid_points: Optional[int] = None) -> PowerSolveReport:
    """One-off solve of the per-vertex power problem (see VertexPowerSolver)."""
    return VertexPowerSolver(instance, grid_points)(z, assignments)


def exhaustive_grid_objective(assignments, z, instance, grid_points=None):
    """Objective at every grid point (brute force re-scan, used for checks)."""
    targets = dict(_targets(a) for a in assignments)
    active = tuple(sorted(targets))
    G = grid_points or instance.config.power_grid_points
    pm = instance.config.p_max_matrix()
    axes = [power_grid(pm[b, z], G) for b in active]
    out = []
    for powers in product(*axes):
        rates = vertex_rates(instance, z, dict(zip(active, powers)), targets)
        out.append((powers, sum(len(targets[b]) * rates[b] for b in active)))
    return out


# ---------------------------------------------------------------------------
# Fixed-schedule KKT iteration
# ---------------------------------------------------------------------------


def _tau(schedule, b, z):
    return tuple(schedule.get((b, z), ()))


def _interference(p, ch, b, z, u):
    if not ch.interference:
        return 0.0
    return sum(p[bb, z] * ch.gains[bb, z, u] for bb in range(ch.gains.shape[0]) if bb != b)


def user_sum_rate(schedule, p, instance: Instance, z: Optional[int] = None) -> float:
    """Sum of per-user rates over scheduled users (all RRBs, or just ``z``)."""
    ch = instance.channel
    p = np.asarray(p, dtype=float)
    B, Z = p.shape
    zs = range(Z) if z is None else [z]
    total = 0.0
    for zz in zs:
        for b in range(B):
            for u in _tau(schedule, b, zz):
                s = p[b, zz] * ch.gains[b, zz, u] / (ch.noise_power + _interference(p, ch, b, zz, u))
                total += math.log2(1.0 + s)
    return total


def t_term(schedule, p, instance: Instance, b: int, b2: int, z: int) -> float:
    """Marginal interference cost that RRH ``b``'s power inflicts on RRH ``b2``."""
    ch = instance.channel
    if not ch.interference:
        return 0.0
    g = ch.gains
    total = 0.0
    for u in _tau(schedule, b2, z):
        denom = ch.noise_power + _interference(p, ch, b2, z, u)
        s = p[b2, z] * g[b2, z, u] / denom
        # g_bu * S^2 / (P_b2 g_b2u), written without the division by P_b2
        total += g[b, z, u] * p[b2, z] * g[b2, z, u] / (denom * denom * (1.0 + s))
    return total


def kkt_power_update(schedule, p, b: int, z: int, instance: Instance, return_terms: bool = False):
    ch = instance.channel
    p = np.asarray(p, dtype=float)
    p_max = instance.config.p_max_matrix()[b, z]
    users = _tau(schedule, b, z)
    terms = {
        b2: t_term(schedule, p, instance, b, b2, z)
        for b2 in range(p.shape[0])
        if b2 != b and _tau(schedule, b2, z)
    }
    if not users:
        new = 0.0
    else:
        num = 0.0
        for u in users:
            s = p[b, z] * ch.gains[b, z, u] / (ch.noise_power + _interference(p, ch, b, z, u))
            num += s / (1.0 + s)
        den = sum(terms.values())
        new = p_max if den <= 0.0 else min(max(num / den, 0.0), p_max)
    return (new, terms) if return_terms else new


def user_sum_rate_gradient(schedule, p, instance: Instance, b: int, z: int) -> float:
    """Analytic derivative of the per-user sum rate w.r.t. p[b, z] (bits/W)."""
    ch = instance.channel
    p = np.asarray(p, dtype=float)
    own = 0.0
    for u in _tau(schedule, b, z):
        denom = ch.noise_power + _interference(p, ch, b, z, u)
        s = p[b, z] * ch.gains[b, z, u] / denom
        own += ch.gains[b, z, u] / denom / (1.0 + s)
    cost = sum(t_term(schedule, p, instance, b, b2, z) for b2 in range(p.shape[0]) if b2 != b)
    return (own - cost) / LN2


def kkt_residual(schedule, p, instance: Instance, scale: Optional[float] = None, edge: float = 1e-6) -> float:
    """Largest projected-gradient violation over scheduled RRBs.

    ``scale`` multiplies the gradient (default p_max of each RRB, giving a
    dimensionless residual). Powers within ``edge * p_max`` of a bound count
    as sitting on it: the multiplicative update only approaches zero
    geometrically, so a switched-off RRB ends at a tiny positive power.
    """
    p = np.asarray(p, dtype=float)
    pm = instance.config.p_max_matrix()
    worst = 0.0
    for (b, z), users in schedule.items():
        if not users:
            continue
        g = user_sum_rate_gradient(schedule, p, instance, b, z) * (pm[b, z] if scale is None else scale)
        if p[b, z] >= pm[b, z] * (1.0 - edge):
            viol = max(0.0, -g)
        elif p[b, z] <= pm[b, z] * edge:
            viol = max(0.0, g)
        else:
            viol = abs(g)
        worst = max(worst, viol)
    return worst


@dataclass
class PowerIterationResult:
    powers: np.ndarray  # best-objective accepted iterate
    fixed_point: np.ndarray  # last accepted iterate
    converged: bool
    sweeps: int
    objective_trace: list
    reports: dict  # rrb -> PowerSolveReport
    flags: list = field(default_factory=list)


def normalize_schedule(schedule, B, Z):
    return {(b, z): tuple(sorted(schedule.get((b, z), ()))) for b in range(B) for z in range(Z)}


def iterate_power(
    schedule,
    instance: Instance,
    p0=None,
    tol: float = 1e-6,
    max_iter: int = 500,
    inner_iter: int = 5000,
    inner_tol: float = 1e-9,
) -> PowerIterationResult:
    """Nonlinear Gauss-Seidel sweeps of the KKT update in (b, z) lexicographic order.

    Within a sweep each coordinate repeats the update (others held fixed)
    until it moves by less than ``inner_tol * p_max`` or ``inner_iter``
    times; ``inner_iter=1`` gives the plain one-update-per-sweep scheme,
    which can stall far from the fixed point when the update contracts
    slowly. Stops when a sweep would move no power by ``tol * p_max`` or
    more; that final sweep is not applied. RRBs serving nobody are held at
    zero.
    """
    B, Z = instance.config.num_rrhs, instance.config.num_rrbs
    schedule = normalize_schedule(schedule, B, Z)
    pm = instance.config.p_max_matrix()
    p = pm.copy() if p0 is None else np.array(p0, dtype=float)
    for (b, z), users in schedule.items():
        if not users:
            p[b, z] = 0.0
    trace = [user_sum_rate(schedule, p, instance)]
    best_p, best_obj = p.copy(), trace[0]
    converged = False
    sweeps = 0
    while sweeps < max_iter:
        sweeps += 1
        q = p.copy()
        for b in range(B):
            for z in range(Z):
                if not schedule[(b, z)]:
                    continue
                for _ in range(inner_iter):
                    new = kkt_power_update(schedule, q, b, z, instance)
                    step = abs(new - q[b, z])
                    q[b, z] = new
                    if step < inner_tol * pm[b, z]:
                        break
        change = float(np.max(np.abs(q - p) / pm))
        if not change >= tol:
            converged = True
            break
        p = q
        obj = user_sum_rate(schedule, p, instance)
        trace.append(obj)
        if obj > best_obj:
            best_p, best_obj = p.copy(), obj
    flags = [] if converged else ["not-converged"]
    reports = {}
    for z in range(Z):
        active = [b for b in range(B) if schedule[(b, z)]]
        if not active:
            continue
        targets = {b: schedule[(b, z)] for b in active}
        rates = vertex_rates_full(instance, z, best_p, targets)
        terms = {}
        for b in active:
            _, t = kkt_power_update(schedule, best_p, b, z, instance, return_terms=True)
            terms[b] = t
        reports[z] = PowerSolveReport(
            powers={b: float(best_p[b, z]) for b in active},
            rates=rates,
            objective=sum(len(targets[b]) * rates[b] for b in active),
            method="iterative",
            iterations=sweeps,
            kkt_residual=kkt_residual({k: v for k, v in schedule.items() if k[1] == z}, best_p, instance),
            t_terms=terms,
        )
    return PowerIterationResult(
        powers=best_p,
        fixed_point=p,
        converged=converged,
        sweeps=sweeps,
        objective_trace=trace,
        reports=reports,
        flags=flags,
    )


def vertex_rates_full(instance, z, p, targets):
    return {b: min(capacity(p, instance.channel, b, z, u) for u in users) for b, users in targets.items()}
