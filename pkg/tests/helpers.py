"""Shared builders for the test-suite."""

from itertools import combinations

from cranidnc.model import NetworkConfig, generate_instance, trial_seed


def small_config(seed, **kw):
    base = dict(num_rrhs=2, num_rrbs=2, num_users=4, num_files=3, power_grid_points=9, rng_seed=seed)
    base.update(kw)
    return NetworkConfig(**base)


def small_instance(seed, **kw):
    return generate_instance(small_config(seed, **kw))


def seeded(master, n):
    return [trial_seed(master, t) for t in range(n)]


def subsets(items, min_size=1):
    items = list(items)
    for k in range(min_size, len(items) + 1):
        yield from combinations(items, k)
