"""Hand-built reference instances (3 users, 3 files, 2 RRHs, 1 RRB)."""

from __future__ import annotations

import numpy as np

from .idnc import Combination
from .model import ChannelRealization, Instance, NetworkConfig, SideInformation

# u1 wants f1, u2 wants f2, u3 wants f3; each holds the other two files.
TOY_HAS = ({1, 2}, {0, 2}, {0, 1})

# The seven XOR combinations of the toy network, in the order they are
# usually listed (c1 .. c7).
TOY_COMBINATIONS = (
    Combination((0, 1), (0, 1)),
    Combination((0,), (0,)),
    Combination((0, 2), (0, 2)),
    Combination((1,), (1,)),
    Combination((1, 2), (1, 2)),
    Combination((2,), (2,)),
    Combination((0, 1, 2), (0, 1, 2)),
)

# Distinct feasible single-RRB schedules as (rrh, combination index) pairs,
# 1-based combination indices, RRHs 0/1.
TOY_SCHEDULES = (
    ((0, 1), (1, 6)),
    ((0, 5), (1, 2)),
    ((0, 7),),
    ((1, 2), (0, 6)),
    ((0, 6), (1, 1)),
    ((0, 4), (1, 3)),
    ((0, 3), (1, 4)),
    ((1, 5), (0, 2)),
    ((1, 7),),
    ((0, 2), (1, 4)),
    ((0, 6), (1, 4)),
    ((0, 4), (1, 2)),
    ((1, 6), (0, 2)),
    ((1, 6), (0, 4)),
)

# Integer capacities (bits/s/Hz) per user (rows) and RRH (columns) used
# for the fixed-power coordinated scheduling example.
COORDINATED_CAPACITIES = ((1, 2), (3, 1), (2, 2))


def _toy_config(**kw) -> NetworkConfig:
    base = dict(
        num_rrhs=2,
        num_rrbs=1,
        num_users=3,
        num_files=3,
        p_max=1.0,
        noise_density=1.0,
        bandwidth=1.0,
        file_size=1,
    )
    base.update(kw)
    return NetworkConfig(**base)


def capacity_instance(capacities, has, num_files, name="", **config_kw) -> Instance:
    """Instance whose full-power capacities equal ``capacities[u][b]``.

    The channel is interference free, so each capacity only depends on the
    RRB's own power and equals the given value at p_max = 1.
    """
    cap = np.asarray(capacities, dtype=float)  # (U, B)
    U, B = cap.shape
    kw = dict(num_rrhs=B, num_users=U, num_files=num_files)
    kw.update(config_kw)
    config = _toy_config(**kw)
    # same capacities on every RRB
    gains = np.repeat((2.0 ** cap - 1.0).T[:, None, :], config.num_rrbs, axis=1)
    return Instance(
        config=config,
        channel=ChannelRealization(gains=gains, noise_power=config.noise_power, interference=False),
        side_info=SideInformation.from_has(has, num_files),
        name=name,
    )


def toy_instance(**config_kw) -> Instance:
    """Unit capacities from every RRH to every user."""
    return capacity_instance(np.ones((3, 2)), TOY_HAS, 3, name="toy-unit", **config_kw)


def coordinated_instance(**config_kw) -> Instance:
    return capacity_instance(COORDINATED_CAPACITIES, TOY_HAS, 3, name="toy-coordinated", **config_kw)
