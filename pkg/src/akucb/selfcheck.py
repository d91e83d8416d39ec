"""Quick invariant and oracle checks on small graphs, used by ``akucb check``."""

from __future__ import annotations

import itertools
from typing import Callable

import numpy as np

from .augment import ProtocolStream, apply_augmentations, check_augmentation, run_augmentation_round
from .matching import (
    enumerate_matchings,
    greedy_matching,
    max_weight_matching,
    optimal_augmentation_set,
    weight_sum,
)
from .network import NetworkGraph, grid_topology, is_matching, random_topology, ring_topology
from .policies import PolicySpec, build_policy
from .simulate import simulate
from .traffic import TrafficModel


def _small_graphs(rng: np.random.Generator) -> list[NetworkGraph]:
    gs = [ring_topology(6), grid_topology(2, 3), grid_topology(3, 3)]
    for _ in range(6):
        n = int(rng.integers(4, 8))
        m = int(rng.integers(n - 1, min(10, n * (n - 1) // 2) + 1))
        gs.append(random_topology(n, m, int(rng.integers(1 << 30))))
    return gs


def check_exact_matching(rng: np.random.Generator) -> list[str]:
    errs = []
    for g in _small_graphs(rng):
        w = rng.random(g.link_count)
        best = max(weight_sum(m, w) for m in enumerate_matchings(g))
        m, val = max_weight_matching(g, w)
        if not is_matching(g, m) or abs(val - best) > 1e-9:
            errs.append(f"max_weight_matching off by {best - val:.3g} on {g.link_count} links")
        if not is_matching(g, greedy_matching(g, w)):
            errs.append("greedy_matching returned a conflicting set")
    return errs


def check_decomposition(rng: np.random.Generator) -> list[str]:
    errs = []
    for g, k in itertools.product(_small_graphs(rng), (2, 3, 4)):
        w = rng.random(g.link_count)
        ms = enumerate_matchings(g)
        r_star = max(weight_sum(m, w) for m in ms)
        s_prev = ms[int(rng.integers(len(ms)))]
        target = max_weight_matching(g, w)[0]
        augs = optimal_augmentation_set(g, s_prev, target, k, w)
        got = weight_sum(apply_augmentations(g, s_prev, augs), w)
        if got < (k - 1) / (k + 1) * r_star - 1e-9:
            errs.append(f"decomposition reached {got:.4f} < alpha r* on {g.link_count} links, k={k}")
    return errs


def check_rounds(rng: np.random.Generator, rounds: int = 300) -> list[str]:
    errs = []
    for g, k in itertools.product((grid_topology(3, 3), ring_topology(6)), (2, 3, 4)):
        stream = ProtocolStream(int(rng.integers(1 << 30)), g.node_count)
        s = frozenset()
        for _ in range(rounds):
            w = rng.random(g.link_count)
            s_new, augs = run_augmentation_round(g, s, w, 0.2, k, stream.next_round())
            if not is_matching(g, s_new):
                errs.append("augmentation round produced a conflicting schedule")
            if weight_sum(s_new, w) < weight_sum(s, w) - 1e-9:
                errs.append("augmentation round lowered the weight sum")
            for a in augs:
                errs += check_augmentation(g, s, a, k)
            s = s_new
    return errs


def check_conservation(rng: np.random.Generator) -> list[str]:
    g = grid_topology(3, 3)
    tm = TrafficModel(np.full(g.link_count, 0.1), rng.uniform(0.25, 0.75, g.link_count))
    errs = []
    for kind in ("akucb", "ucb_gmm", "mwm"):
        pol = build_policy(PolicySpec(kind, frame_length=500), g, tm.service, int(rng.integers(1 << 30)))
        q0 = rng.integers(0, 20, g.link_count)
        res = simulate(g, tm, pol, 2000, 500, int(rng.integers(1 << 30)), initial_queues=q0)
        if res.arrivals - res.departures != res.end_total - int(q0.sum()):
            errs.append(f"{kind}: queue conservation violated")
    return errs


CHECKS: dict[str, Callable[[np.random.Generator], list[str]]] = {
    "exact matching vs enumeration": check_exact_matching,
    "decomposition reaches alpha r*": check_decomposition,
    "augmentation round invariants": check_rounds,
    "queue conservation": check_conservation,
}


def run_checks(seed: int = 0, echo: Callable[[str], None] = print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, fn in CHECKS.items():
        errs = fn(rng)
        echo(f"{'PASS' if not errs else 'FAIL'}  {name}")
        for e in errs[:5]:
            echo(f"      {e}")
        ok = ok and not errs
    return ok
