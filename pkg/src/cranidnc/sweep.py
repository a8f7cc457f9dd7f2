"""Monte-Carlo sweeps over one network parameter, written as CSV."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .config import ConfigError, RunConfig, config_from_dict, config_to_dict
from .model import dbm_to_watts, trial_seed
from .sched import SCHEDULERS, PlanValidationError, evaluate, run_scheduler

log = logging.getLogger(__name__)

CSV_HEADER = ["variable", "value", "scheduler", "seed", "sum_rate", "per_user_hz", "delivered_bits", "wall_ms", "flags"]
VARIABLES = ("users", "rrbs", "file_size", "p_max", "cell_size")
DEGRADED = "budget-degraded"


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    schedulers: tuple
    trials: int
    base_config: RunConfig
    exact: bool = True
    node_budget: Optional[int] = None

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigError(f"field 'variable': must be one of {', '.join(VARIABLES)}")
        if not self.values:
            raise ConfigError("field 'values': must be nonempty")
        if list(self.values) != sorted(self.values):
            raise ConfigError("field 'values': must be sorted ascending")
        if len(set(self.values)) != len(self.values):
            raise ConfigError("field 'values': duplicates")
        unknown = [s for s in self.schedulers if s not in SCHEDULERS]
        if unknown or not self.schedulers:
            raise ConfigError(f"field 'schedulers': unknown or empty {unknown}; choose from {sorted(SCHEDULERS)}")
        if int(self.trials) < 1:
            raise ConfigError("field 'trials': must be >= 1")
        if self.base_config.is_fixture:
            raise ConfigError("field 'base_config': fixture channels cannot be swept")

    def config_for(self, value) -> RunConfig:
        net = self.base_config.network
        if self.variable == "users":
            net = net.replace(num_users=int(value))
        elif self.variable == "rrbs":
            net = net.replace(num_rrbs=int(value), p_max_per_rrb=None)
        elif self.variable == "file_size":
            net = net.replace(file_size=int(value))
        elif self.variable == "p_max":
            # swept in dBm/Hz, like the budget quoted for the default network
            net = net.replace(p_max=dbm_to_watts(float(value)) * net.bandwidth, p_max_per_rrb=None)
        else:
            net = net.replace(cell_radius=float(value))
        return RunConfig(net)


@dataclass(frozen=True)
class ResultRow:
    variable: str
    value: float
    scheduler: str
    seed: int
    sum_rate: float
    per_user_hz: float
    delivered_bits: int
    wall_ms: float
    flags: str

    def __post_init__(self):
        for name in ("sum_rate", "per_user_hz", "delivered_bits", "wall_ms"):
            x = getattr(self, name)
            if not math.isfinite(x) or x < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {x}")

    def cells(self) -> list:
        return [
            self.variable,
            _fmt(self.value),
            self.scheduler,
            str(self.seed),
            repr(float(self.sum_rate)),
            repr(float(self.per_user_hz)),
            str(int(self.delivered_bits)),
            f"{self.wall_ms:.3f}",
            self.flags,
        ]


def _fmt(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def spec_from_dict(data: dict) -> SweepSpec:
    if not isinstance(data, dict):
        raise ConfigError("sweep spec must be a JSON object")
    allowed = {"variable", "values", "schedulers", "trials", "base_config", "exact", "node_budget"}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"field '{key}': unknown field")
    for key in ("variable", "values", "schedulers", "trials"):
        if key not in data:
            raise ConfigError(f"field '{key}': missing")
    values = data["values"]
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ConfigError("field 'values': expected a list of numbers")
    schedulers = data["schedulers"]
    if not isinstance(schedulers, list):
        raise ConfigError("field 'schedulers': expected a list of names")
    trials = data["trials"]
    if isinstance(trials, bool) or not isinstance(trials, int):
        raise ConfigError("field 'trials': expected an integer")
    return SweepSpec(
        variable=data["variable"],
        values=tuple(values),
        schedulers=tuple(schedulers),
        trials=trials,
        base_config=config_from_dict(data.get("base_config", {})),
        exact=bool(data.get("exact", True)),
        node_budget=data.get("node_budget"),
    )


def spec_to_dict(spec: SweepSpec) -> dict:
    out = {
        "variable": spec.variable,
        "values": list(spec.values),
        "schedulers": list(spec.schedulers),
        "trials": spec.trials,
        "base_config": config_to_dict(spec.base_config),
        "exact": spec.exact,
    }
    if spec.node_budget is not None:
        out["node_budget"] = spec.node_budget
    return out


def load_spec(path) -> SweepSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read sweep spec {path}: {exc.strerror}") from None
    try:
        return spec_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _run_cell(spec: SweepSpec, value, trial: int, timing: bool) -> list:
    """All schedulers on one (value, trial) instance."""
    master = spec.base_config.network.rng_seed
    seed = trial_seed(master, trial)
    instance = spec.config_for(value).make_instance(seed)
    rows = []
    for name in spec.schedulers:
        t0 = time.perf_counter()
        plan = run_scheduler(name, instance, exact=spec.exact, node_budget=spec.node_budget)
        wall = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        flags = list(plan.flags)
        try:
            evaluate(plan, instance)
        except PlanValidationError as exc:
            flags.append(f"invalid:{exc.constraint}")
        rows.append(
            ResultRow(
                variable=spec.variable,
                value=value,
                scheduler=name,
                seed=seed,
                sum_rate=plan.sum_rate,
                per_user_hz=plan.per_user_hz,
                delivered_bits=plan.delivered_bits,
                wall_ms=wall,
                flags=";".join(flags),
            )
        )
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1, timing: bool = False) -> list:
    """Rows ordered by (value, trial, scheduler order in the spec).

    ``wall_ms`` is only measured with ``timing=True``; otherwise it is 0 so
    that repeated sweeps produce identical files.
    """
    tasks = [(vi, t) for vi in range(len(spec.values)) for t in range(spec.trials)]

    def task(item):
        vi, t = item
        return item, _run_cell(spec, spec.values[vi], t, timing)

    if workers <= 1:
        results = [task(item) for item in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, tasks))
    results.sort(key=lambda r: r[0])
    return [row for _, rows in results for row in rows]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def write_csv(rows, path) -> None:
    text = rows_to_csv(rows)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [dict(zip(CSV_HEADER, rec)) for rec in reader if rec]
    if not rows:
        raise ValueError(f"{path}: CSV has no data rows")
    return rows
