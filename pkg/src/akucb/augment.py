"""Randomized distributed augmentation, simulated mini-slot by mini-slot.

One call to :func:`run_augmentation_round` plays the four stages of a time
slot (seeding, path augmenting, cycle check, back-propagation) over the
whole network and returns the next schedule. Mini-slots are synchronous:
every REQ sent in mini-slot ``tau`` is delivered before ``tau + 1``, and a
node that receives two or more REQs in one mini-slot acknowledges at most
one of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .network import Matching, NetworkGraph

NULL, ACTIVE, WAIT, USED, DONE = "NULL", "ACTIVE", "WAIT", "USED", "DONE"

PREFER_MATCHED = "prefer_matched"
TERMINATE_ALL = "terminate_all"
COLLISION_RULES = (PREFER_MATCHED, TERMINATE_ALL)


@dataclass
class Augmentation:
    """An alternating path or cycle relative to the previous schedule.

    ``size`` counts links outside the previous schedule; ``cap`` is the size
    limit drawn by the seed. ``gain_pair`` holds the (reward, confidence)
    split used with local normalizers.
    """

    links: tuple[int, ...]
    seed: int
    terminus: int
    size: int
    cap: int
    is_cycle: bool = False
    gain: float = 0.0
    gain_pair: tuple[float, float] | None = None
    applied: bool = False
    members: tuple[int, ...] = ()


class MalformedAugmentation(ValueError):
    pass


def augmentation_gain(links: Sequence[int], s_prev: Iterable[int], w: Sequence[float]) -> float:
    """Weight of new links minus weight of links already scheduled.

    Raises if consecutive links do not alternate membership in ``s_prev``.
    """
    s_prev = s_prev if isinstance(s_prev, (set, frozenset)) else frozenset(s_prev)
    gain = 0.0
    prev_in = None
    for lid in links:
        inside = lid in s_prev
        if prev_in is not None and inside == prev_in:
            raise MalformedAugmentation(f"links {list(links)} do not alternate")
        prev_in = inside
        gain += -float(w[lid]) if inside else float(w[lid])
    return gain


def apply_augmentations(g: NetworkGraph, s_prev: Iterable[int], augs: Iterable[Augmentation | Sequence[int]]) -> Matching:
    """``S_prev`` with every listed augmentation swapped in.

    Scheduled links touched by any augmentation are dropped once, so an old
    link shared by two augmentations is not re-added.
    """
    s_prev = frozenset(s_prev)
    removed: set[int] = set()
    added: set[int] = set()
    for a in augs:
        links = a.links if isinstance(a, Augmentation) else a
        for lid in links:
            (removed if lid in s_prev else added).add(lid)
    return Matching(g, (s_prev - removed) | added)


def delta_lower_bound(n_nodes: int, max_degree: int, p: float, k: int) -> float:
    """Probability floor for one round landing on a near-optimal schedule."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if k < 1 or max_degree < 1 or n_nodes < 1:
        raise ValueError("k, max_degree and n_nodes must be positive")
    return min(1.0, (p / (1 - p)) ** n_nodes) * ((1 - p) / (k * max_degree)) ** n_nodes


# ------------------------------------------------------------------ randomness


class RoundDraws(Protocol):
    def seeds(self, p: float) -> list[int]: ...

    def size_cap(self, node: int, k: int) -> int: ...

    def choose(self, node: int, options: Sequence[int]) -> int: ...


class UniformRound:
    """Per-node uniforms for one slot: column 0 seeds, 1 size cap, 2 neighbor pick.

    A node makes at most one neighbor choice per slot, so three numbers per
    node cover the whole round and node decisions do not depend on the order
    nodes are visited.
    """

    __slots__ = ("u",)

    def __init__(self, u: np.ndarray):
        self.u = u

    def seeds(self, p: float) -> list[int]:
        return np.flatnonzero(self.u[:, 0] < p).tolist()

    def size_cap(self, node: int, k: int) -> int:
        return min(k, 1 + int(self.u[node, 1] * k))

    def choose(self, node: int, options: Sequence[int]) -> int:
        j = min(len(options) - 1, int(self.u[node, 2] * len(options)))
        return options[j]


class ProtocolStream:
    """Seeded source of :class:`UniformRound` objects, one per time slot."""

    def __init__(self, seed, n_nodes: int, block: int = 2048):
        self._rng = np.random.default_rng(seed)
        self._n = n_nodes
        self._block_size = block
        self._block = None
        self._i = block

    def next_round(self) -> UniformRound:
        if self._i >= self._block_size:
            self._block = self._rng.random((self._block_size, self._n, 3))
            self._i = 0
        r = UniformRound(self._block[self._i])
        self._i += 1
        return r


class ScriptedRound:
    """Hand-specified seeds, size caps and neighbor picks (for tests and traces)."""

    def __init__(self, seeds: Iterable[int] = (), caps: dict[int, int] | None = None,
                 picks: dict[int, int] | None = None):
        self._seeds = sorted(seeds)
        self._caps = dict(caps or {})
        self._picks = dict(picks or {})

    def seeds(self, p: float) -> list[int]:
        return list(self._seeds)

    def size_cap(self, node: int, k: int) -> int:
        return self._caps.get(node, k)

    def choose(self, node: int, options: Sequence[int]) -> int:
        want = self._picks.get(node)
        if want is None:
            return options[0]
        if want not in options:
            raise ValueError(f"scripted pick {want} for node {node} is not among {list(options)}")
        return want


# ------------------------------------------------------------------ engine


class _Walk:
    __slots__ = ("seed", "cap", "size", "links", "path", "members", "alt", "pending",
                 "gain", "g1", "g2", "q", "terminus", "is_cycle")

    def __init__(self, seed: int, cap: int):
        self.seed = seed
        self.cap = cap
        self.size = 0
        self.links: list[int] = []
        self.path: list[int] = [seed]
        self.members: list[int] = [seed]
        self.alt = False
        self.pending: int | None = None
        self.gain = 0.0
        self.g1 = 0.0
        self.g2 = 0.0
        self.q = 0.0
        self.terminus = seed
        self.is_cycle = False


@dataclass
class LocalView:
    """What a node may read about a link: frame-start queue, raw mean reward
    and confidence radius. No network-wide maximum is exposed."""

    frame_queues: Sequence[float]
    means: Sequence[float]
    radii: Sequence[float]


class _Round:
    def __init__(self, g, s_prev, p, k, draws, collision, trace, weights=None, view=None, normalizers=None):
        if k < 1:
            raise ValueError("k must be at least 1")
        if collision not in COLLISION_RULES:
            raise ValueError(f"unknown collision rule {collision!r}")
        self.g = g
        self.s_prev = s_prev
        self.mate = s_prev.mate
        self.p = p
        self.k = k
        self.draws = draws
        self.collision = collision
        self.trace = trace
        self.w = weights
        self.view = view
        self.qt = normalizers
        self.distributed = view is not None
        self.state: dict[int, str] = {}
        self.holder: dict[int, _Walk] = {}
        self.walks: list[_Walk] = []
        self.outbox: list[tuple[int, int, _Walk, bool]] = []

    # gain bookkeeping -------------------------------------------------
    def _add(self, walk: _Walk, lid: int, sign: int, at: int) -> None:
        if not self.distributed:
            walk.gain += sign * self.w[lid]
            return
        q_local = self.qt[at]
        ratio = self.view.frame_queues[lid] / q_local if q_local > 0 else 1.0
        walk.g1 += sign * ratio * self.view.means[lid]
        walk.g2 += sign * self.view.radii[lid]

    def _on_receive(self, walk: _Walk, node: int) -> None:
        if not self.distributed:
            return
        q_new = max(walk.q, self.qt[node])
        if q_new > 0 and walk.q != q_new:
            walk.g1 *= walk.q / q_new
        self.qt[node] = q_new
        walk.q = q_new

    def _total(self, walk: _Walk) -> float:
        return walk.g1 + walk.g2 if self.distributed else walk.gain

    # messaging --------------------------------------------------------
    def _send(self, tau: int, u: int, v: int, walk: _Walk, via_matched: bool) -> None:
        self.state[u] = WAIT
        self.outbox.append((u, v, walk, via_matched))
        if self.trace is not None:
            self.trace.append(f"tau={tau} REQ {u}->{v} Z={walk.size} G={self._total(walk):.6g}")

    def _finish(self, node: int, walk: _Walk) -> None:
        self.state[node] = DONE
        walk.terminus = node

    def _deliver(self, tau: int) -> None:
        inbox: dict[int, list] = {}
        for msg in self.outbox:
            inbox.setdefault(msg[1], []).append(msg)
        self.outbox = []
        for v in sorted(inbox):
            reqs = inbox[v]
            winner = None
            if v not in self.state:
                if len(reqs) == 1:
                    winner = reqs[0]
                elif self.collision == PREFER_MATCHED:
                    matched = [m for m in reqs if m[3]]
                    if len(matched) == 1:
                        winner = matched[0]
            for msg in reqs:
                u, _, walk, _ = msg
                if msg is winner:
                    self.state[u] = USED
                    self.state[v] = ACTIVE
                    walk.members.append(v)
                    self._on_receive(walk, v)
                    self.holder[v] = walk
                    if self.trace is not None:
                        self.trace.append(f"tau={tau} ACK {v}->{u}")
                else:
                    self._finish(u, walk)

    # stages -----------------------------------------------------------
    def _extend_matched(self, tau: int, v: int, walk: _Walk) -> None:
        lid = self.mate[v]
        n = self.g.other_end(lid, v)
        walk.links.append(lid)
        walk.path.append(n)
        self._add(walk, lid, -1, v)
        walk.alt = True
        self._send(tau, v, n, walk, True)

    def _initialize(self) -> None:
        g = self.g
        seeds = self.draws.seeds(self.p)
        for v in seeds:
            self.state[v] = ACTIVE
        for v in seeds:
            walk = _Walk(v, self.draws.size_cap(v, self.k))
            self.walks.append(walk)
            if self.distributed:
                walk.q = self.qt[v]
            if v in self.mate:
                self._extend_matched(1, v, walk)
                continue
            opts = [n for n, _ in g.neighbors[v]]
            if not opts:
                self._finish(v, walk)
                continue
            n = self.draws.choose(v, opts)
            walk.pending = g.link_between(v, n)
            walk.alt = False
            self._send(1, v, n, walk, False)
        self._deliver(1)

    def _augment(self) -> None:
        g = self.g
        for tau in range(2, 2 * self.k + 2):
            active = sorted(v for v, s in self.state.items() if s == ACTIVE)
            if not active:
                break
            for v in active:
                walk = self.holder.pop(v)
                if walk.alt:
                    on_path = walk.path
                    opts = [n for n, _ in g.neighbors[v] if n not in on_path]
                    if opts and walk.size < walk.cap:
                        n = self.draws.choose(v, opts)
                        walk.pending = g.link_between(v, n)
                        walk.alt = False
                        self._send(tau, v, n, walk, False)
                    else:
                        self._finish(v, walk)
                else:
                    lid = walk.pending
                    walk.pending = None
                    walk.links.append(lid)
                    walk.path.append(v)
                    walk.size += 1
                    self._add(walk, lid, +1, v)
                    if v in self.mate:
                        self._extend_matched(tau, v, walk)
                    else:
                        self._finish(v, walk)
            self._deliver(tau)
        for v, walk in self.holder.items():
            self._finish(v, walk)
        self.holder.clear()

    def _check_cycle(self, walk: _Walk) -> None:
        links = walk.links
        v = walk.terminus
        if len(links) < 3 or walk.path[-1] != v or walk.size >= walk.cap:
            return
        s_prev = self.s_prev
        if links[0] not in s_prev or links[-1] not in s_prev:
            return
        closing = self.g.link_between(v, walk.path[0])
        if closing is None or closing in links:
            return
        links.append(closing)
        walk.path.append(walk.path[0])
        walk.size += 1
        walk.is_cycle = True
        self._add(walk, closing, +1, v)

    def run(self) -> tuple[Matching, list[Augmentation]]:
        self._initialize()
        self._augment()
        augs = []
        for walk in self.walks:
            if not walk.links:
                continue
            self._check_cycle(walk)
            total = self._total(walk)
            aug = Augmentation(
                links=tuple(walk.links),
                seed=walk.seed,
                terminus=walk.terminus,
                size=walk.size,
                cap=walk.cap,
                is_cycle=walk.is_cycle,
                gain=total,
                gain_pair=(walk.g1, walk.g2) if self.distributed else None,
                applied=total > 0,
                members=tuple(walk.members),
            )
            augs.append(aug)
            if self.distributed:
                # back-propagation hands the terminus normalizer to every member
                for node in walk.members:
                    self.qt[node] = walk.q
        chosen = [a for a in augs if a.applied]
        s_new = apply_augmentations(self.g, self.s_prev, chosen) if chosen else self.s_prev
        if self.trace is not None:
            for a in augs:
                self.trace.append(
                    f"decide seed={a.seed} terminus={a.terminus} links={list(a.links)} "
                    f"G={a.gain:.6g} {'augment' if a.applied else 'keep'}"
                )
        return s_new, augs


def _as_matching(g: NetworkGraph, s) -> Matching:
    return s if isinstance(s, Matching) else Matching(g, s)


def run_augmentation_round(
    g: NetworkGraph,
    s_prev: Iterable[int],
    w: Sequence[float],
    p: float,
    k: int,
    draws: RoundDraws,
    *,
    collision: str = PREFER_MATCHED,
    trace: list[str] | None = None,
) -> tuple[Matching, list[Augmentation]]:
    """One slot of the augmentation protocol with link weights ``w``.

    Returns the new schedule and every augmentation built this slot (with
    ``applied`` set on those whose gain was positive).
    """
    w = w.tolist() if isinstance(w, np.ndarray) else w
    return _Round(g, _as_matching(g, s_prev), p, k, draws, collision, trace, weights=w).run()


def run_augmentation_round_distributed(
    g: NetworkGraph,
    s_prev: Iterable[int],
    view: LocalView,
    normalizers: list[float],
    p: float,
    k: int,
    draws: RoundDraws,
    *,
    collision: str = PREFER_MATCHED,
    trace: list[str] | None = None,
) -> tuple[Matching, list[Augmentation], list[float]]:
    """Same protocol, but gains travel as a (reward, confidence) pair scaled
    by per-node normalizers, which are raised to the running maximum along
    each augmentation. ``normalizers`` is updated in place and returned."""
    s_new, augs = _Round(g, _as_matching(g, s_prev), p, k, draws, collision, trace,
                         view=view, normalizers=normalizers).run()
    return s_new, augs, normalizers


def check_augmentation(g: NetworkGraph, s_prev: Iterable[int], a: Augmentation, k: int) -> list[str]:
    """Invariant violations for one augmentation (empty list when valid)."""
    s_prev = frozenset(s_prev)
    problems = []
    links = list(a.links)
    for x, y in zip(links, links[1:]):
        if (x in s_prev) == (y in s_prev):
            problems.append(f"links {x},{y} do not alternate")
        if not set(g.links[x]) & set(g.links[y]):
            problems.append(f"links {x},{y} are not adjacent")
    new = sum(1 for lid in links if lid not in s_prev)
    if new != a.size:
        problems.append(f"size {a.size} != new-link count {new}")
    if not a.size <= a.cap <= k:
        problems.append(f"size/cap out of range: {a.size} <= {a.cap} <= {k}")
    if len(links) > 2 * a.cap + 1:
        problems.append(f"{len(links)} links exceeds 2*cap+1")
    try:
        apply_augmentations(g, s_prev, [a])
    except ValueError as exc:
        problems.append(f"S_prev (+) A is not a matching: {exc}")
    return problems
