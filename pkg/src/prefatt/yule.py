"""Continuous-time Yule model: a pure-birth process of genera (rate beta per
genus) in which every genus grows as an independent pure-birth process of
species (rate lambda per species) from size 1 at its birth.

Two independent sampling routes are provided and cross-checked in the test
suite: the full event-driven simulation built from exponential inter-event
times, and a direct sampler that inverts the conditional birth-time law of a
uniformly chosen genus and then draws its size from the geometric law of a
pure-birth population at fixed elapsed time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .models import ResourceCapError

__all__ = [
    "YuleCaps",
    "yule_simulate_event_driven",
    "yule_sample_genus_direct",
    "yule_genus_size_at",
    "genus_birth_time_ppf",
]


@dataclass
class YuleCaps:
    """Growth guards: a pure-birth population explodes like e^(rate*T)."""

    max_genera: int = 10_000_000
    max_species: int = 10_000_000


def yule_simulate_event_driven(beta: float, lam: float, horizon: float,
                               rng: np.random.Generator,
                               caps: YuleCaps = YuleCaps()) -> np.ndarray:
    """Simulate the full two-level process and return all genus sizes at
    time `horizon`.

    Genus arrivals and species births are both generated event by event from
    exponential waits (rate beta*count and lambda*size respectively).

    Raises:
        ResourceCapError: if the genus count or total species count would
            exceed the configured caps.
    """
    if beta <= 0 or lam <= 0:
        raise ValueError("beta and lambda must be positive")
    if horizon < 0 or not np.isfinite(horizon):
        raise ValueError("horizon must be finite and >= 0")
    expected = np.exp(min(beta * horizon, 50.0))
    buf = np.zeros(min(caps.max_genera, max(1024, int(4 * expected))), dtype=np.float64)
    count, acc, done = _kernels.genus_births_kernel(rng, beta, horizon, buf, 1, 0.0)
    while not done:
        if count >= caps.max_genera:
            raise ResourceCapError(
                f"genus count reached the cap ({caps.max_genera})")
        grown = np.zeros(min(caps.max_genera, 2 * len(buf)), dtype=np.float64)
        grown[:len(buf)] = buf
        buf = grown
        count, acc, done = _kernels.genus_births_kernel(rng, beta, horizon, buf,
                                                        count, acc)
    births = buf[:count]
    durations = horizon - births
    sizes = np.ones(count, dtype=np.int64)
    budget = caps.max_species - count
    if budget < 0:
        raise ResourceCapError(f"species count reached the cap ({caps.max_species})")
    total = _kernels.genus_sizes_kernel(rng, lam, durations, sizes, budget)
    if total < 0:
        raise ResourceCapError(f"species count reached the cap ({caps.max_species})")
    return sizes


def genus_birth_time_ppf(u, beta: float, horizon: float):
    """Inverse CDF of the birth time of a uniformly chosen genus alive at
    `horizon`: CDF(tau) = (e^(beta*tau) - 1)/(e^(beta*horizon) - 1)."""
    return np.log1p(u * np.expm1(beta * horizon)) / beta


def yule_sample_genus_direct(beta: float, lam: float, horizon: float,
                             rng: np.random.Generator,
                             size: int | None = None):
    """Sample the size of a uniformly chosen genus at time `horizon` without
    simulating the tree: draw the birth time by CDF inversion, then the size
    from Geometric(e^(-lambda * elapsed)). Serves as the independent oracle
    for `yule_simulate_event_driven`."""
    if beta <= 0 or lam <= 0:
        raise ValueError("beta and lambda must be positive")
    if horizon < 0 or not np.isfinite(horizon):
        raise ValueError("horizon must be finite and >= 0")
    n = 1 if size is None else int(size)
    tau = genus_birth_time_ppf(rng.random(n), beta, horizon)
    p = np.exp(-lam * (horizon - tau))
    sizes = rng.geometric(np.minimum(p, 1.0))
    return int(sizes[0]) if size is None else sizes


def yule_genus_size_at(lam: float, duration: float, rng: np.random.Generator,
                       replicas: int = 1,
                       caps: YuleCaps = YuleCaps()) -> np.ndarray:
    """Event-driven sizes of a single genus observed `duration` after its
    birth, replicated. The waits are exponential at rate lambda*size."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if duration < 0:
        raise ValueError("duration must be >= 0")
    durations = np.full(replicas, duration, dtype=np.float64)
    sizes = np.ones(replicas, dtype=np.int64)
    total = _kernels.genus_sizes_kernel(rng, lam, durations, sizes,
                                        caps.max_species)
    if total < 0:
        raise ResourceCapError(f"species count reached the cap ({caps.max_species})")
    return sizes
