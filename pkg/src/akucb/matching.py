"""Exact, greedy and enumerative matching solvers, plus the constructive
decomposition of ``S_prev (+) S_target`` into short disjoint augmentations."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .augment import Augmentation, augmentation_gain
from .network import Matching, NetworkGraph

MAX_ENUM_LINKS = 24
MAX_BNB_LINKS = 30
RATIO_TOL = 1e-12


class EnumerationTooLarge(ValueError):
    pass


def check_weights(g: NetworkGraph, w: Sequence[float]) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.shape != (g.link_count,):
        raise ValueError(f"weight vector has shape {arr.shape}, expected ({g.link_count},)")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("weights must be finite and non-negative")
    return arr


def weight_sum(m: Iterable[int], w: Sequence[float]) -> float:
    total = 0.0
    for lid in sorted(m):
        total += float(w[lid])
    return total


def greedy_matching(g: NetworkGraph, w: Sequence[float]) -> Matching:
    """Heaviest compatible link first; ties go to the lowest link id."""
    order = sorted(range(g.link_count), key=lambda i: (-float(w[i]), i))
    used: set[int] = set()
    chosen = []
    for lid in order:
        u, v = g.links[lid]
        if u not in used and v not in used:
            used.add(u)
            used.add(v)
            chosen.append(lid)
    return Matching(g, chosen)


def enumerate_matchings(g: NetworkGraph, limit: int = MAX_ENUM_LINKS) -> list[frozenset[int]]:
    """All matchings (including the empty one), in include-before-exclude order."""
    if g.link_count > limit:
        raise EnumerationTooLarge(f"{g.link_count} links exceeds enumeration limit {limit}")
    out: list[frozenset[int]] = []
    links = g.links
    n = g.link_count

    def rec(i: int, used: frozenset, chosen: tuple) -> None:
        if i == n:
            out.append(frozenset(chosen))
            return
        u, v = links[i]
        if u not in used and v not in used:
            rec(i + 1, used | {u, v}, chosen + (i,))
        rec(i + 1, used, chosen)

    rec(0, frozenset(), ())
    return out


def maximal_matchings(g: NetworkGraph, limit: int = MAX_BNB_LINKS) -> list[frozenset[int]]:
    """Matchings to which no further link can be added."""
    if g.link_count > limit:
        raise EnumerationTooLarge(f"{g.link_count} links exceeds enumeration limit {limit}")
    links = g.links
    n = g.link_count
    out: list[frozenset[int]] = []

    def rec(i: int, used: frozenset, chosen: tuple) -> None:
        if i == n:
            # maximal iff every skipped link is blocked
            for j in range(n):
                a, b = links[j]
                if a not in used and b not in used:
                    return
            out.append(frozenset(chosen))
            return
        u, v = links[i]
        if u not in used and v not in used:
            rec(i + 1, used | {u, v}, chosen + (i,))
        rec(i + 1, used, chosen)

    rec(0, frozenset(), ())
    return out


def _bnb_max_weight(g: NetworkGraph, w: Sequence[float]) -> tuple[list[int], float]:
    cand = sorted((i for i in range(g.link_count) if w[i] > 0), key=lambda i: (-float(w[i]), i))
    ends = [g.links[i] for i in cand]
    ws = [float(w[i]) for i in cand]
    n = len(cand)
    best_val = 0.0
    best_set: list[int] = []
    chosen: list[int] = []

    def bound(i: int, used: set) -> float:
        # each free node contributes at most half of its heaviest open link
        top: dict[int, float] = {}
        for j in range(i, n):
            a, b = ends[j]
            if a in used or b in used:
                continue
            if ws[j] > top.get(a, 0.0):
                top[a] = ws[j]
            if ws[j] > top.get(b, 0.0):
                top[b] = ws[j]
        return 0.5 * sum(top.values())

    def rec(i: int, used: set, val: float) -> None:
        nonlocal best_val, best_set
        if val > best_val:
            best_val = val
            best_set = list(chosen)
        if i == n or val + bound(i, used) <= best_val:
            return
        a, b = ends[i]
        if a not in used and b not in used:
            used.add(a)
            used.add(b)
            chosen.append(cand[i])
            rec(i + 1, used, val + ws[i])
            chosen.pop()
            used.discard(a)
            used.discard(b)
        rec(i + 1, used, val)

    rec(0, set(), 0.0)
    return best_set, best_val


def _blossom_max_weight(g: NetworkGraph, w: Sequence[float]) -> list[int]:
    import networkx as nx

    G = nx.Graph()
    G.add_nodes_from(range(g.node_count))
    for lid, (u, v) in enumerate(g.links):
        if w[lid] > 0:
            G.add_edge(u, v, weight=float(w[lid]), lid=lid)
    pairs = nx.max_weight_matching(G, maxcardinality=False)
    return [G.edges[u, v]["lid"] for u, v in pairs]


def max_weight_matching(g: NetworkGraph, w: Sequence[float], *, allow_large: bool = True) -> tuple[Matching, float]:
    """Exact maximum weight matching and its value.

    Branch and bound up to ``MAX_BNB_LINKS`` links; a blossom solver above
    that when ``allow_large`` is set.
    """
    check_weights(g, w)
    if g.link_count <= MAX_BNB_LINKS:
        links, _ = _bnb_max_weight(g, w)
    elif allow_large:
        links = _blossom_max_weight(g, w)
    else:
        raise EnumerationTooLarge(
            f"{g.link_count} links needs the polynomial solver; enable allow_large"
        )
    m = Matching(g, links)
    return m, weight_sum(m, w)


class MatchingTable:
    """Precomputed maximal matchings for repeated exact queries on one graph.

    Valid for non-negative weights only (some maximal matching is optimal).
    """

    def __init__(self, g: NetworkGraph):
        self.g = g
        self.matchings = maximal_matchings(g)
        self.incidence = np.zeros((len(self.matchings), g.link_count))
        for r, m in enumerate(self.matchings):
            self.incidence[r, list(m)] = 1.0
        self._cache: dict[frozenset, Matching] = {}

    def __len__(self) -> int:
        return len(self.matchings)

    def best(self, w: Sequence[float]) -> tuple[Matching, float]:
        vals = self.incidence @ np.asarray(w, dtype=float)
        r = int(np.argmax(vals))
        links = self.matchings[r]
        m = self._cache.get(links)
        if m is None:
            m = self._cache[links] = Matching(self.g, links)
        return m, weight_sum(links, w)


def near_optimal_set(
    g: NetworkGraph, w: Sequence[float], alpha: float, matchings: list[frozenset[int]] | None = None
) -> list[frozenset[int]]:
    """Matchings whose weight is at least ``alpha`` times the optimum."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if matchings is None:
        matchings = enumerate_matchings(g)
    values = [weight_sum(m, w) for m in matchings]
    r_star = max(values)
    threshold = alpha * r_star - RATIO_TOL * max(1.0, r_star)
    return [m for m, val in zip(matchings, values) if val >= threshold]


def near_optimal_gaps(g: NetworkGraph, w: Sequence[float], alpha: float) -> tuple[float, float] | None:
    """Minimum and maximum gap ``alpha*r* - r_w(S)`` over non-near-optimal matchings.

    Returns None when every matching is near-optimal. Diagnostic only.
    """
    matchings = enumerate_matchings(g)
    values = [weight_sum(m, w) for m in matchings]
    r_star = max(values)
    threshold = alpha * r_star - RATIO_TOL * max(1.0, r_star)
    bad = [val for val in values if val < threshold]
    if not bad:
        return None
    return alpha * r_star - max(bad), alpha * r_star - min(bad)


# ---------------------------------------------------------------- decomposition


def _components(g: NetworkGraph, diff: set[int]) -> list[tuple[list[int], bool, list[int]]]:
    """Split a degree<=2 link set into ordered (links, is_cycle, nodes) components.

    Paths are walked from the endpoint with the lower node id; cycles start at
    their lowest node and leave it through its lower-id link.
    """
    adj: dict[int, list[int]] = {}
    for lid in diff:
        for x in g.links[lid]:
            adj.setdefault(x, []).append(lid)
    for x, ls in adj.items():
        if len(ls) > 2:
            raise ValueError("symmetric difference has a node of degree > 2; inputs are not matchings")
        ls.sort()
    seen: set[int] = set()
    comps = []

    def walk(start: int) -> tuple[list[int], list[int]]:
        links, nodes = [], [start]
        cur, prev_link = start, None
        while True:
            nxt = [l for l in adj[cur] if l != prev_link and l not in seen]
            if not nxt:
                return links, nodes
            lid = nxt[0]
            seen.add(lid)
            links.append(lid)
            cur = g.other_end(lid, cur)
            nodes.append(cur)
            prev_link = lid

    for x in sorted(adj):
        if len(adj[x]) == 1 and adj[x][0] not in seen:
            links, nodes = walk(x)
            comps.append((links, False, nodes))
    for x in sorted(adj):
        if any(l not in seen for l in adj[x]):
            links, nodes = walk(x)
            comps.append((links, True, nodes[:-1]))
    return comps


def _split_path(links: list[int], target: frozenset[int], k: int, w: Sequence[float],
                s_prev: frozenset[int]) -> list[list[int]]:
    """Best of the k+1 removal phases for an ordered alternating path."""
    opt_pos = [j for j, lid in enumerate(links) if lid in target]
    if len(opt_pos) <= k:
        return [links]
    best = None
    for phase in range(k + 1):
        removed = set(opt_pos[phase::k + 1])
        pieces, cur = [], []
        for j, lid in enumerate(links):
            if j in removed:
                if cur:
                    pieces.append(cur)
                cur = []
            else:
                cur.append(lid)
        if cur:
            pieces.append(cur)
        gain = sum(augmentation_gain(p, s_prev, w) for p in pieces)
        if best is None or gain > best[0]:
            best = (gain, pieces)
    return best[1]


def optimal_augmentation_set(
    g: NetworkGraph,
    s_prev: Iterable[int],
    s_target: Iterable[int],
    k: int,
    w: Sequence[float],
) -> list[Augmentation]:
    """Disjoint augmentations of size <= k whose joint gain is at least
    ``(k-1)/(k+1) * r_w(s_target) - r_w(s_prev)``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    s_prev = frozenset(s_prev)
    s_target = frozenset(s_target)
    for m in (s_prev, s_target):
        Matching(g, m)  # raises on conflicts
    diff = set(s_prev ^ s_target)
    out: list[Augmentation] = []
    for links, is_cycle, nodes in _components(g, diff):
        if is_cycle:
            opt_links = [l for l in links if l in s_target]
            if len(opt_links) <= k:
                pieces = [links]
            else:
                e = min(opt_links, key=lambda l: (float(w[l]), l))
                # reopen the cycle at e, walking from its lower-numbered end
                a, b = g.links[e]
                start = min(a, b)
                pos = links.index(e)
                rot = links[pos + 1:] + links[:pos]
                first_node = nodes[(pos + 1) % len(nodes)]
                if first_node != start:
                    rot.reverse()
                pieces = _split_path(rot, s_target, k, w, s_prev)
                is_cycle = False
        else:
            pieces = [links] if sum(l in s_target for l in links) <= k else _split_path(links, s_target, k, w, s_prev)
        for piece in pieces:
            size = sum(1 for l in piece if l in s_target)
            closed = is_cycle and piece is links
            out.append(Augmentation(
                links=tuple(piece),
                seed=-1,
                terminus=-1,
                size=size,
                cap=k,
                is_cycle=closed,
                gain=augmentation_gain(piece, s_prev, w),
            ))
    return out
