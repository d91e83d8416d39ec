"""Network topologies and feasibility under the primary interference model."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected simple graph; links are identified by dense integer ids.

    ``links[i]`` is the node pair of link ``i`` stored as ``(min, max)``.
    """

    node_count: int
    links: tuple[tuple[int, int], ...]
    incident: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    neighbors: tuple[tuple[tuple[int, int], ...], ...] = field(init=False, repr=False, compare=False)
    _link_of: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.node_count < 0:
            raise ValueError("node_count must be non-negative")
        norm = []
        seen = set()
        for u, v in self.links:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValueError(f"link ({u}, {v}) references an unknown node")
            pair = (u, v) if u < v else (v, u)
            if pair in seen:
                raise ValueError(f"duplicate link {pair}")
            seen.add(pair)
            norm.append(pair)
        inc: list[list[int]] = [[] for _ in range(self.node_count)]
        nbr: list[list[tuple[int, int]]] = [[] for _ in range(self.node_count)]
        for lid, (u, v) in enumerate(norm):
            inc[u].append(lid)
            inc[v].append(lid)
            nbr[u].append((v, lid))
            nbr[v].append((u, lid))
        object.__setattr__(self, "links", tuple(norm))
        object.__setattr__(self, "incident", tuple(tuple(x) for x in inc))
        object.__setattr__(self, "neighbors", tuple(tuple(x) for x in nbr))
        object.__setattr__(self, "_link_of", {pair: lid for lid, pair in enumerate(norm)})

    @property
    def link_count(self) -> int:
        return len(self.links)

    def link_between(self, u: int, v: int) -> int | None:
        """Id of the link joining ``u`` and ``v``, or None."""
        return self._link_of.get((u, v) if u < v else (v, u))

    def other_end(self, link: int, node: int) -> int:
        u, v = self.links[link]
        return v if node == u else u

    def degree(self, node: int) -> int:
        return len(self.incident[node])

    def is_connected(self) -> bool:
        if self.node_count <= 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y, _ in self.neighbors[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.node_count

    # plain-text edge list: "nodes <N>" then one "u v" per line
    def to_edge_list(self) -> str:
        lines = [f"nodes {self.node_count}"]
        lines += [f"{u} {v}" for u, v in self.links]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "NetworkGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or rows[0][0] != "nodes" or len(rows[0]) != 2:
            raise ValueError("edge list must start with 'nodes <N>'")
        n = int(rows[0][1])
        links = []
        for row in rows[1:]:
            if len(row) != 2:
                raise ValueError(f"malformed edge line: {' '.join(row)!r}")
            links.append((int(row[0]), int(row[1])))
        return cls(n, tuple(links))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_edge_list())

    @classmethod
    def load(cls, path: str | Path) -> "NetworkGraph":
        return cls.from_edge_list(Path(path).read_text())


class Matching(frozenset):
    """A conflict-free set of link ids with a node -> link occupancy index.

    Compares equal to a plain ``frozenset``/``set`` of the same ids.
    """

    def __new__(cls, g: NetworkGraph, links: Iterable[int] = ()):
        self = super().__new__(cls, links)
        mate: dict[int, int] = {}
        for lid in self:
            if not 0 <= lid < g.link_count:
                raise ValueError(f"unknown link id {lid}")
            u, v = g.links[lid]
            if u in mate or v in mate:
                raise ValueError(f"link {lid} conflicts with link {mate.get(u, mate.get(v))}")
            mate[u] = lid
            mate[v] = lid
        self.mate = mate
        return self

    def __repr__(self) -> str:
        return f"Matching({sorted(self)})"

    def __reduce__(self):
        raise TypeError("Matching is bound to a graph; pickle frozenset(m) instead")

    def occupied(self, node: int) -> bool:
        return node in self.mate


def grid_topology(rows: int, cols: int) -> NetworkGraph:
    """Lattice with horizontal links first (row-major), then vertical links."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    node = lambda r, c: r * cols + c  # noqa: E731
    links = [(node(r, c), node(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
    links += [(node(r, c), node(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
    return NetworkGraph(rows * cols, tuple(links))


def ring_topology(n: int) -> NetworkGraph:
    """Cycle on ``n`` nodes; link ``i`` joins nodes ``i`` and ``i+1 (mod n)``."""
    if n < 3:
        raise ValueError("a ring needs at least 3 nodes")
    return NetworkGraph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path_topology(n_nodes: int) -> NetworkGraph:
    if n_nodes < 1:
        raise ValueError("n_nodes must be positive")
    return NetworkGraph(n_nodes, tuple((i, i + 1) for i in range(n_nodes - 1)))


def random_topology(n_nodes: int, n_links: int, seed) -> NetworkGraph:
    """Connected simple graph: random spanning tree, then uniform extra pairs."""
    max_links = n_nodes * (n_nodes - 1) // 2
    if n_nodes < 1 or n_links < n_nodes - 1 or n_links > max_links:
        raise ValueError(
            f"cannot build a connected simple graph with {n_nodes} nodes and {n_links} links"
        )
    rng = np.random.default_rng(seed)
    order = [int(x) for x in rng.permutation(n_nodes)]
    chosen: set[tuple[int, int]] = set()
    links: list[tuple[int, int]] = []
    # random recursive tree over a random node order
    for i in range(1, n_nodes):
        parent = order[int(rng.integers(i))]
        pair = tuple(sorted((order[i], parent)))
        chosen.add(pair)
        links.append(pair)
    remaining = n_links - len(links)
    if remaining:
        pool = [p for p in itertools.combinations(range(n_nodes), 2) if p not in chosen]
        picks = rng.choice(len(pool), size=remaining, replace=False)
        links += [pool[int(j)] for j in sorted(picks)]
    return NetworkGraph(n_nodes, tuple(links))


def is_matching(g: NetworkGraph, links: Iterable[int]) -> bool:
    used: set[int] = set()
    for lid in links:
        if not 0 <= lid < g.link_count:
            raise ValueError(f"unknown link id {lid}")
        u, v = g.links[lid]
        if u in used or v in used:
            return False
        used.add(u)
        used.add(v)
    return True


def max_degree(g: NetworkGraph) -> int:
    return max((len(x) for x in g.incident), default=0)
