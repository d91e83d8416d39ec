"""Bernoulli arrivals, link service draws and queue evolution."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .network import NetworkGraph, random_topology, ring_topology

# (rng, mu, shape) -> rewards in [0, 1]
ServiceSampler = Callable[[np.random.Generator, np.ndarray, tuple], np.ndarray]


def bernoulli_service(rng: np.random.Generator, mu: np.ndarray, shape: tuple) -> np.ndarray:
    return (rng.random(shape) < mu).astype(float)


@dataclass
class TrafficModel:
    arrival: np.ndarray
    service: np.ndarray
    sampler: ServiceSampler | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.arrival = np.asarray(self.arrival, dtype=float)
        self.service = np.asarray(self.service, dtype=float)
        if self.arrival.shape != self.service.shape or self.arrival.ndim != 1:
            raise ValueError("arrival and service vectors must be 1-D and equally long")
        for name, vec in (("arrival", self.arrival), ("service", self.service)):
            if np.any(vec < 0) or np.any(vec > 1):
                raise ValueError(f"{name} probabilities must lie in [0, 1]")

    @property
    def link_count(self) -> int:
        return self.arrival.size


@dataclass
class QueueState:
    queues: np.ndarray
    t: int = 1

    def __post_init__(self) -> None:
        self.queues = np.asarray(self.queues, dtype=np.int64)
        if np.any(self.queues < 0):
            raise ValueError("queue lengths must be non-negative")

    @property
    def total(self) -> int:
        return int(self.queues.sum())


def step_queues(
    qs: QueueState, schedule: Iterable[int], tm: TrafficModel, rng: np.random.Generator
) -> tuple[QueueState, dict[int, float]]:
    """Serve scheduled links, then add arrivals: ``q <- [q - X]^+ + a``.

    Service outcomes are reported for every scheduled link, empty or not.
    """
    links = sorted(schedule)
    sampler = tm.sampler or bernoulli_service
    x = sampler(rng, tm.service[links], (len(links),)) if links else np.zeros(0)
    arrivals = (rng.random(tm.link_count) < tm.arrival).astype(np.int64)
    q = qs.queues.copy()
    outcomes: dict[int, float] = {}
    for lid, xv in zip(links, x):
        xv = float(xv)
        outcomes[lid] = xv
        depart = 1 if (xv >= 1.0 or (xv > 0.0 and rng.random() < xv)) else 0
        q[lid] = max(q[lid] - depart, 0)
    q += arrivals
    return QueueState(q, qs.t + 1), outcomes


class TrafficDriver:
    """Block-drawn arrivals and service outcomes for a whole run.

    Outcomes for every link are drawn every slot whether or not the link is
    scheduled, so two policies fed the same seed see identical channels.
    """

    def __init__(self, tm: TrafficModel, seed, block: int = 4096):
        self.tm = tm
        self._rng = np.random.default_rng(seed)
        self._block = block
        self._i = block
        self._arr = None
        self._x = None
        self._dep = None

    def next_slot(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrivals (int), rewards X in [0, 1], and departure flags for one slot."""
        if self._i >= self._block:
            shape = (self._block, self.tm.link_count)
            self._arr = (self._rng.random(shape) < self.tm.arrival).astype(np.int64)
            if self.tm.sampler is None:
                self._x = (self._rng.random(shape) < self.tm.service).astype(float)
                self._dep = self._x
            else:
                self._x = np.clip(self.tm.sampler(self._rng, self.tm.service, shape), 0.0, 1.0)
                self._dep = (self._rng.random(shape) < self._x).astype(float)
            self._i = 0
        i = self._i
        self._i += 1
        return self._arr[i], self._x[i], self._dep[i]


def make_grid_experiment_traffic(g: NetworkGraph, arrival: float, rate_seed,
                                 mu_range: tuple[float, float] = (0.25, 0.75)) -> TrafficModel:
    rng = np.random.default_rng(rate_seed)
    mu = rng.uniform(mu_range[0], mu_range[1], size=g.link_count)
    return TrafficModel(np.full(g.link_count, float(arrival)), mu)


@dataclass
class RingExperiment:
    graph: NetworkGraph
    traffic: TrafficModel
    initial_queues: np.ndarray
    frame_length: int


def make_ring_experiment(epsilon: float, frame_length: int = 6000) -> RingExperiment:
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    g = ring_topology(6)
    lam = np.full(6, 1.0 / 6.0 + epsilon)
    mu = np.full(6, 0.5)
    T = frame_length
    q0 = np.array([3 * T // 6, 2 * T // 6, T // 6] * 2, dtype=np.int64)
    return RingExperiment(g, TrafficModel(lam, mu), q0, T)


@dataclass
class RandomNetworkExperiment:
    graph: NetworkGraph
    traffic: TrafficModel
    frame_length: int
    rho: np.ndarray


def make_random_network_experiment(arrival: float, topology_seed, rate_seed,
                                   n_nodes: int = 50, n_links: int = 200,
                                   frame_length: int = 500) -> RandomNetworkExperiment:
    g = random_topology(n_nodes, n_links, topology_seed)
    rng = np.random.default_rng(rate_seed)
    mu = rng.uniform(0.25, 0.75, size=g.link_count)
    rho = rng.uniform(0.4, 0.7, size=g.link_count)
    return RandomNetworkExperiment(g, TrafficModel(arrival * rho, mu), frame_length, rho)
