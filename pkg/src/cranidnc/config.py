"""JSON run configuration.

A config file is one JSON object. Every :class:`NetworkConfig` field may
appear under its own name; powers may instead be given in dBm through the
suffix-tagged keys

* ``p_max_dbm``            per-RRB power budget in dBm
* ``p_max_dbm_per_hz``     power spectral density in dBm/Hz (times bandwidth)
* ``noise_density_dbm_per_hz``

An optional ``fixture`` object pins the channel instead of drawing it::

    "fixture": {"capacities": [[1, 1], [1, 1], [1, 1]],   # users x RRHs, bits/s/Hz
                "has": [[1, 2], [0, 2], [0, 1]]}          # 0-based file ids

Fixture channels are interference free and identical on every RRB, with
gains chosen so that full power yields exactly the listed capacities.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .model import (
    ChannelRealization,
    Instance,
    NetworkConfig,
    SideInformation,
    dbm_to_watts,
    generate_instance,
)

_FIELDS = {f.name: f for f in dataclasses.fields(NetworkConfig)}
_INT_FIELDS = {
    "num_rrhs", "num_rrbs", "num_users", "num_files", "power_grid_points",
    "max_iterations", "file_size", "rng_seed", "combination_budget", "node_budget",
}
_BOOL_FIELDS = {"prune_silent"}
_DBM_KEYS = {"p_max_dbm", "p_max_dbm_per_hz", "noise_density_dbm_per_hz"}


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending field or line."""


@dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig
    capacities: Optional[tuple] = None  # users x RRHs
    has: Optional[tuple] = None

    @property
    def is_fixture(self) -> bool:
        return self.capacities is not None

    def make_instance(self, seed: Optional[int] = None) -> Instance:
        cfg = self.network if seed is None else self.network.replace(rng_seed=int(seed))
        if not self.is_fixture:
            return generate_instance(cfg)
        cap = np.asarray(self.capacities, dtype=float)
        pm = cfg.p_max_matrix()
        # gains[b, z, u] such that p_max * g / noise = 2^C - 1
        gains = np.empty((cfg.num_rrhs, cfg.num_rrbs, cfg.num_users))
        for b in range(cfg.num_rrhs):
            for z in range(cfg.num_rrbs):
                gains[b, z] = (2.0 ** cap[:, b] - 1.0) * cfg.noise_power / pm[b, z]
        return Instance(
            config=cfg,
            channel=ChannelRealization(gains=gains, noise_power=cfg.noise_power, interference=False),
            side_info=SideInformation.from_has([set(h) for h in self.has], cfg.num_files),
            name="fixture",
        )


def _coerce(name, value):
    if name in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise ConfigError(f"field '{name}': expected true/false, got {value!r}")
        return value
    if name == "max_coding_degree" and value is None:
        return None
    name_int = name in _INT_FIELDS or name == "max_coding_degree"
    if name == "p_max_per_rrb":
        if value is None:
            return None
        try:
            return tuple(tuple(float(x) for x in row) for row in value)
        except (TypeError, ValueError):
            raise ConfigError(f"field '{name}': expected a list of lists of numbers") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{name}': expected a number, got {value!r}")
    if name_int:
        if float(value) != int(value):
            raise ConfigError(f"field '{name}': expected an integer, got {value!r}")
        return int(value)
    return float(value)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    kw = {}
    fixture = None
    for key, value in data.items():
        if key == "fixture":
            fixture = value
        elif key in _DBM_KEYS:
            kw[key] = _coerce(key, value)
        elif key in _FIELDS:
            kw[key] = _coerce(key, value)
        else:
            raise ConfigError(f"field '{key}': unknown field")
    if len({"p_max", "p_max_dbm", "p_max_dbm_per_hz"} & kw.keys()) > 1:
        raise ConfigError("field 'p_max': given more than once (watts / dBm / dBm per Hz)")
    if "noise_density" in kw and "noise_density_dbm_per_hz" in kw:
        raise ConfigError("field 'noise_density': given both in W/Hz and dBm/Hz")
    if "noise_density_dbm_per_hz" in kw:
        kw["noise_density"] = dbm_to_watts(kw.pop("noise_density_dbm_per_hz"))
    bandwidth = kw.get("bandwidth", _FIELDS["bandwidth"].default)
    if "p_max_dbm" in kw:
        kw["p_max"] = dbm_to_watts(kw.pop("p_max_dbm"))
    if "p_max_dbm_per_hz" in kw:
        kw["p_max"] = dbm_to_watts(kw.pop("p_max_dbm_per_hz")) * bandwidth
    try:
        network = NetworkConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    if fixture is None:
        return RunConfig(network)
    return _with_fixture(network, fixture)


def _with_fixture(network, fixture) -> RunConfig:
    if not isinstance(fixture, dict) or set(fixture) != {"capacities", "has"}:
        raise ConfigError("field 'fixture': expected an object with 'capacities' and 'has'")
    try:
        cap = np.asarray(fixture["capacities"], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("field 'fixture.capacities': expected a users x RRHs number matrix") from None
    if cap.shape != (network.num_users, network.num_rrhs):
        raise ConfigError(
            f"field 'fixture.capacities': shape {cap.shape} does not match "
            f"(num_users, num_rrhs) = ({network.num_users}, {network.num_rrhs})"
        )
    if np.any(cap < 0) or not np.all(np.isfinite(cap)):
        raise ConfigError("field 'fixture.capacities': entries must be finite and >= 0")
    has = fixture["has"]
    if not isinstance(has, list) or len(has) != network.num_users:
        raise ConfigError("field 'fixture.has': expected one file list per user")
    try:
        has_t = tuple(tuple(sorted({int(f) for f in h})) for h in has)
        if any(not 0 <= f < network.num_files for h in has_t for f in h):
            raise ValueError(f"file ids must lie in 0..{network.num_files - 1}")
        SideInformation.from_has([set(h) for h in has_t], network.num_files)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'fixture.has': {exc}") from None
    caps_t = tuple(tuple(float(x) for x in row) for row in cap)
    return RunConfig(network, caps_t, has_t)


def config_to_dict(rc: RunConfig) -> dict:
    """Canonical form: all NetworkConfig fields in SI units."""
    out = {}
    for name in _FIELDS:
        value = getattr(rc.network, name)
        if isinstance(value, tuple):
            value = [list(row) for row in value]
        out[name] = value
    if rc.is_fixture:
        out["fixture"] = {
            "capacities": [list(row) for row in rc.capacities],
            "has": [list(h) for h in rc.has],
        }
    return out


def loads_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def dumps_config(rc: RunConfig) -> str:
    return json.dumps(config_to_dict(rc), indent=2) + "\n"


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return loads_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
