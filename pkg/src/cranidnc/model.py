"""Network topology, channel generation and link-level SINR / capacity."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# SUI terrain type B constants (path-loss exponent model)
SUI_A = 4.0
SUI_B = 0.0065  # 1/m
SUI_C = 17.1  # m
SUI_D0 = 100.0  # reference distance, m
SPEED_OF_LIGHT = 299_792_458.0

MASK64 = (1 << 64) - 1


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * math.log10(watts) + 30.0


def splitmix64(x: int) -> int:
    """One round of the splitmix64 finalizer, used to derive per-trial seeds."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    return splitmix64((master_seed + trial) & MASK64)


@dataclass(frozen=True)
class NetworkConfig:
    num_rrhs: int = 3
    num_rrbs: int = 2
    num_users: int = 7
    num_files: int = 4
    p_max: float = dbm_to_watts(-42.60) * 10e6  # -42.60 dBm/Hz over 10 MHz
    noise_density: float = dbm_to_watts(-168.60)  # W/Hz
    bandwidth: float = 10e6
    cell_radius: float = 500.0
    carrier_freq: float = 2.5e9
    has_probability: float = 0.5
    max_coding_degree: Optional[int] = None  # None: unlimited
    power_grid_points: int = 33
    tolerance: float = 1e-3
    max_iterations: int = 20
    file_size: int = 1_000_000
    rng_seed: int = 0
    # optional (B, Z) override of the per-RRB power budget
    p_max_per_rrb: Optional[tuple] = None
    rrh_height: float = 30.0
    combination_budget: int = 50_000
    node_budget: int = 5_000_000
    prune_silent: bool = False

    def __post_init__(self):
        for name in ("num_rrhs", "num_rrbs", "num_users", "num_files"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.p_max > 0:
            raise ValueError("p_max must be > 0")
        if not 0.0 <= self.has_probability < 1.0:
            raise ValueError("has_probability must lie in [0, 1)")
        if self.power_grid_points < 2:
            raise ValueError("power_grid_points must be >= 2")
        if self.max_coding_degree is not None and self.max_coding_degree < 1:
            raise ValueError("max_coding_degree must be >= 1 or None")
        if self.noise_density <= 0 or self.bandwidth <= 0:
            raise ValueError("noise_density and bandwidth must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.p_max_per_rrb is not None:
            arr = np.asarray(self.p_max_per_rrb, dtype=float)
            if arr.shape != (self.num_rrhs, self.num_rrbs):
                raise ValueError("p_max_per_rrb must have shape (num_rrhs, num_rrbs)")
            if np.any(arr <= 0):
                raise ValueError("p_max_per_rrb entries must be > 0")
            # keep the dataclass hashable
            object.__setattr__(self, "p_max_per_rrb", tuple(tuple(float(x) for x in row) for row in arr))

    @property
    def noise_power(self) -> float:
        return self.noise_density * self.bandwidth

    def p_max_matrix(self) -> np.ndarray:
        if self.p_max_per_rrb is not None:
            return np.array(self.p_max_per_rrb, dtype=float)
        return np.full((self.num_rrhs, self.num_rrbs), float(self.p_max))

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ChannelRealization:
    """Linear power gains indexed ``gains[b, z, u]`` and the noise power.

    With ``interference=False`` the co-channel terms are dropped from the
    SINR denominator. Hand-built fixtures use this to pin capacities to
    fixed values independently of the other RRHs' powers.
    """

    gains: np.ndarray
    noise_power: float
    interference: bool = True

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 3:
            raise ValueError("gains must be a (B, Z, U) array")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValueError("gains must be finite and >= 0")
        if not self.noise_power > 0:
            raise ValueError("noise power must be > 0")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @property
    def shape(self):
        return self.gains.shape


@dataclass(frozen=True)
class SideInformation:
    has: tuple  # per-user frozenset of files
    wants: tuple

    def __post_init__(self):
        object.__setattr__(self, "has", tuple(frozenset(h) for h in self.has))
        object.__setattr__(self, "wants", tuple(frozenset(w) for w in self.wants))
        if len(self.has) != len(self.wants):
            raise ValueError("has/wants length mismatch")
        files = frozenset().union(*self.has, *self.wants)
        for h, w in zip(self.has, self.wants):
            if h & w:
                raise ValueError("Has and Wants sets must be disjoint")
        self._check_files(files)

    def _check_files(self, files):
        if files and min(files) < 0:
            raise ValueError("file indices must be >= 0")

    @classmethod
    def from_has(cls, has, num_files: int) -> "SideInformation":
        universe = frozenset(range(num_files))
        has = [frozenset(h) for h in has]
        return cls(has=tuple(has), wants=tuple(universe - h for h in has))

    @property
    def num_users(self) -> int:
        return len(self.has)


@dataclass(frozen=True)
class Instance:
    config: NetworkConfig
    channel: ChannelRealization
    side_info: SideInformation
    user_positions: Optional[np.ndarray] = None
    rrh_positions: Optional[np.ndarray] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        c = self.config
        if self.channel.shape != (c.num_rrhs, c.num_rrbs, c.num_users):
            raise ValueError(
                f"channel shape {self.channel.shape} does not match "
                f"(B, Z, U) = {(c.num_rrhs, c.num_rrbs, c.num_users)}"
            )
        if self.side_info.num_users != c.num_users:
            raise ValueError("side information user count does not match config")
        for w, h in zip(self.side_info.wants, self.side_info.has):
            if (w | h) - frozenset(range(c.num_files)):
                raise ValueError("side information references unknown files")

    @property
    def p_max(self) -> np.ndarray:
        return self.config.p_max_matrix()

    def full_power(self) -> np.ndarray:
        return self.config.p_max_matrix()


# ---------------------------------------------------------------------------
# Link level
# ---------------------------------------------------------------------------


def sinr(p, ch: ChannelRealization, b: int, z: int, u: int) -> float:
    p = np.asarray(p, dtype=float)
    g = ch.gains
    signal = p[b, z] * g[b, z, u]
    interf = 0.0
    if ch.interference:
        for bb in range(g.shape[0]):
            if bb != b:
                interf += p[bb, z] * g[bb, z, u]
    return float(signal / (ch.noise_power + interf))


def capacity(p, ch: ChannelRealization, b: int, z: int, u: int) -> float:
    return math.log2(1.0 + sinr(p, ch, b, z, u))


def sinr_tensor(p, ch: ChannelRealization) -> np.ndarray:
    """All SINRs at once, shape (B, Z, U)."""
    p = np.asarray(p, dtype=float)
    received = p[:, :, None] * ch.gains
    if ch.interference:
        interf = received.sum(axis=0, keepdims=True) - received
    else:
        interf = 0.0
    return received / (ch.noise_power + interf)


def capacity_tensor(p, ch: ChannelRealization) -> np.ndarray:
    return np.log2(1.0 + sinr_tensor(p, ch))


def rate_set(p, ch: ChannelRealization, b: int, z: int) -> list:
    """Sorted distinct user capacities on RRB ``z`` of RRH ``b``."""
    U = ch.gains.shape[2]
    return sorted({capacity(p, ch, b, z, u) for u in range(U)})


def power_grid(p_max: float, points: int) -> np.ndarray:
    return np.linspace(0.0, p_max, points)


# ---------------------------------------------------------------------------
# Geometry and channel generation
# ---------------------------------------------------------------------------


def sui_path_loss_db(d, carrier_freq: float, rrh_height: float = 30.0):
    """SUI terrain-B path loss in dB; distances below d0 are clamped to d0."""
    wavelength = SPEED_OF_LIGHT / carrier_freq
    a0 = 20.0 * math.log10(4.0 * math.pi * SUI_D0 / wavelength)
    gamma = SUI_A - SUI_B * rrh_height + SUI_C / rrh_height
    d = np.maximum(np.asarray(d, dtype=float), SUI_D0)
    return a0 + 10.0 * gamma * np.log10(d / SUI_D0)


def rrh_layout(num_rrhs: int, cell_radius: float) -> np.ndarray:
    """RRHs on a regular polygon of circumradius R/2 around the cell centre.

    For three RRHs this is the equilateral triangle; a single RRH sits at
    the centre.
    """
    if num_rrhs == 1:
        return np.zeros((1, 2))
    angles = math.pi / 2 + 2 * math.pi * np.arange(num_rrhs) / num_rrhs
    r = cell_radius / 2.0
    return np.column_stack([r * np.cos(angles), r * np.sin(angles)])


def in_hexagon(xy: np.ndarray, radius: float) -> np.ndarray:
    """Pointy-top regular hexagon of circumradius ``radius`` centred at 0."""
    x = np.abs(xy[..., 0])
    y = np.abs(xy[..., 1])
    half_w = radius * math.sqrt(3) / 2
    return (x <= half_w) & (y <= radius - x / math.sqrt(3))


def sample_hexagon(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    out = np.empty((0, 2))
    half_w = radius * math.sqrt(3) / 2
    while len(out) < n:
        cand = np.column_stack(
            [rng.uniform(-half_w, half_w, 2 * n), rng.uniform(-radius, radius, 2 * n)]
        )
        out = np.vstack([out, cand[in_hexagon(cand, radius)]])
    return out[:n]


def generate_side_info(rng: np.random.Generator, num_users: int, num_files: int, mu: float) -> SideInformation:
    has = []
    for _ in range(num_users):
        h = {f for f in range(num_files) if rng.random() < mu}
        if len(h) == num_files:
            h.discard(int(rng.integers(num_files)))
        has.append(frozenset(h))
    return SideInformation.from_has(has, num_files)


def generate_instance(config: NetworkConfig) -> Instance:
    rng = np.random.default_rng(config.rng_seed & MASK64)
    B, Z, U = config.num_rrhs, config.num_rrbs, config.num_users
    rrhs = rrh_layout(B, config.cell_radius)
    users = sample_hexagon(rng, U, config.cell_radius)
    dist = np.linalg.norm(rrhs[:, None, :] - users[None, :, :], axis=2)  # (B, U)
    pl_db = sui_path_loss_db(dist, config.carrier_freq, config.rrh_height)
    fading = rng.exponential(1.0, size=(B, Z, U))
    gains = 10.0 ** (-pl_db / 10.0)[:, None, :] * fading
    side = generate_side_info(rng, U, config.num_files, config.has_probability)
    return Instance(
        config=config,
        channel=ChannelRealization(gains=gains, noise_power=config.noise_power),
        side_info=side,
        user_positions=users,
        rrh_positions=rrhs,
    )
