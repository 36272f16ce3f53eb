"""System graphs with local neighbor numbering, roots and Byzantine subsets.

Processes are anonymous: the integer ids used here are simulator bookkeeping
only and are never exposed to protocol guards or actions (those see a
``LocalView`` built by the engine). Each process orders its neighbors in a
seeded-random local order; position ``k`` (1-based) in that order is the only
way a protocol can refer to a neighbor.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence


class TopologyError(ValueError):
    """Raised for malformed graphs or graphs invalid for a protocol mode."""


@dataclass(frozen=True, eq=False)
class Topology:
    """Immutable system graph.

    ``neighbor_order[v]`` is a permutation of v's adjacency set; its k-th
    entry (1-based k) is the neighbor a protocol sees at position k.
    Register slots index the flat tuple of directed link registers kept in
    every Configuration: slot of (v, u) holds the register written by v and
    read by u.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    neighbor_order: tuple[tuple[int, ...], ...]
    root: Optional[int]
    byzantine: frozenset[int]
    # derived lookup tables, filled in by build_topology
    neighbor_pos: tuple[dict[int, int], ...] = field(repr=False, default=())
    out_slot: tuple[tuple[int, ...], ...] = field(repr=False, default=())
    in_slot: tuple[tuple[int, ...], ...] = field(repr=False, default=())
    num_registers: int = 0

    def degree(self, v: int) -> int:
        return len(self.neighbor_order[v])

    @property
    def max_degree(self) -> int:
        return max(len(order) for order in self.neighbor_order)

    @property
    def correct(self) -> frozenset[int]:
        return frozenset(range(self.n)) - self.byzantine

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.neighbor_order[v]

    def is_tree(self) -> bool:
        return len(self.edges) == self.n - 1


@dataclass(frozen=True)
class CorrectSubgraphMetrics:
    """Connectivity and diameter of the subgraph induced by correct processes."""

    connected: bool
    d: Optional[int]
    f: int


def build_topology(
    edge_list: Iterable[tuple[int, int]],
    root: Optional[int] = None,
    byzantine: Iterable[int] = (),
    neighbor_seed: int = 0,
    mode: Optional[str] = None,
) -> Topology:
    """Validate a graph and derive per-process neighbor orders.

    ``mode`` is None, ``"ss-st"`` (rooted, general graph, correct subgraph
    must stay connected) or ``"ss-to"`` (tree, no root). Neighbor orders are
    seeded-random permutations so nothing downstream can rely on a canonical
    adjacency order.
    """
    edges = []
    seen = set()
    for u, v in edge_list:
        if u == v:
            raise TopologyError(f"self-loop at {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise TopologyError(f"duplicate edge {key}")
        seen.add(key)
        edges.append(key)
    if not edges:
        raise TopologyError("empty edge list")

    ids = {w for e in edges for w in e}
    n = max(ids) + 1
    if ids != set(range(n)):
        raise TopologyError("process ids must be dense in 0..n-1")

    adjacency: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        adjacency[u].add(v)
        adjacency[v].add(u)

    if _bfs_reach(adjacency, 0) != set(range(n)):
        raise TopologyError("graph is disconnected")

    byz = frozenset(byzantine)
    for b in byz:
        if not 0 <= b < n:
            raise TopologyError(f"byzantine id {b} out of range")
    if root is not None and not 0 <= root < n:
        raise TopologyError(f"root id {root} out of range")

    rng = random.Random(neighbor_seed)
    order = []
    for v in range(n):
        local = sorted(adjacency[v])
        rng.shuffle(local)
        order.append(tuple(local))

    neighbor_pos = tuple({u: k + 1 for k, u in enumerate(order[v])} for v in range(n))

    slot_of: dict[tuple[int, int], int] = {}
    for v in range(n):
        for u in order[v]:
            slot_of[(v, u)] = len(slot_of)
    out_slot = tuple(tuple(slot_of[(v, u)] for u in order[v]) for v in range(n))
    in_slot = tuple(tuple(slot_of[(u, v)] for u in order[v]) for v in range(n))

    topo = Topology(
        n=n,
        edges=tuple(sorted(edges)),
        neighbor_order=tuple(order),
        root=root,
        byzantine=byz,
        neighbor_pos=neighbor_pos,
        out_slot=out_slot,
        in_slot=in_slot,
        num_registers=len(slot_of),
    )
    if mode is not None:
        validate_mode(topo, mode)
    return topo


def validate_mode(t: Topology, mode: str) -> None:
    """Check the mode-specific structural requirements."""
    if mode == "ss-st":
        if t.root is None:
            raise TopologyError("ss-st requires a root process")
        if t.root in t.byzantine:
            raise TopologyError("root must not be Byzantine in ss-st mode")
        if not correct_metrics(t).connected:
            raise TopologyError("correct subgraph is disconnected in ss-st mode")
    elif mode == "ss-to":
        if not t.is_tree():
            raise TopologyError("ss-to requires a tree")
        if t.root is not None:
            raise TopologyError("ss-to is rootless")
    else:
        raise TopologyError(f"unknown mode {mode!r}")


def kth_neighbor(t: Topology, v: int, k: int) -> int:
    """Return N_v(k), 1-based."""
    if not 1 <= k <= t.degree(v):
        raise TopologyError(f"neighbor index {k} out of range for degree {t.degree(v)}")
    return t.neighbor_order[v][k - 1]


def correct_metrics(t: Topology) -> CorrectSubgraphMetrics:
    """BFS connectivity and diameter of the correct-process subgraph."""
    correct = sorted(t.correct)
    f = len(t.byzantine)
    if not correct:
        return CorrectSubgraphMetrics(connected=False, d=None, f=f)
    adjacency = {v: [u for u in t.neighbor_order[v] if u not in t.byzantine] for v in correct}
    start = correct[0]
    dist0 = _bfs_dist(adjacency, [start])
    if len(dist0) != len(correct):
        return CorrectSubgraphMetrics(connected=False, d=None, f=f)
    diameter = 0
    for v in correct:
        dist = _bfs_dist(adjacency, [v])
        diameter = max(diameter, max(dist.values()))
    return CorrectSubgraphMetrics(connected=True, d=diameter, f=f)


def distance_to_byzantine(t: Topology) -> dict[int, float]:
    """Multi-source BFS hop distance from the Byzantine set; inf when none."""
    if not t.byzantine:
        return {v: math.inf for v in range(t.n)}
    adjacency = {v: list(t.neighbor_order[v]) for v in range(t.n)}
    dist = _bfs_dist(adjacency, sorted(t.byzantine))
    return {v: dist.get(v, math.inf) for v in range(t.n)}


def _bfs_reach(adjacency: Sequence[set[int]], start: int) -> set[int]:
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for u in adjacency[v]:
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return seen


def _bfs_dist(adjacency: dict[int, list[int]], sources: list[int]) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    frontier = list(sources)
    while frontier:
        nxt = []
        for v in frontier:
            for u in adjacency.get(v, ()):
                if u not in dist:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt
    return dist


# ---------------------------------------------------------------------------
# file format: `n <count>` header, optional `root <id>` / `byz <id> ...`,
# one `edge <u> <v>` per line, '#' comments.

def parse_topology_text(text: str) -> dict:
    n = None
    root = None
    byz: list[int] = []
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        try:
            if key == "n":
                n = int(args[0])
            elif key == "root":
                root = int(args[0])
            elif key == "byz":
                byz.extend(int(a) for a in args)
            elif key == "edge":
                edges.append((int(args[0]), int(args[1])))
            else:
                raise TopologyError(f"unknown directive {key!r} (line {lineno})")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, TopologyError):
                raise
            raise TopologyError(f"bad topology line {lineno}: {raw!r}") from exc
    if n is None:
        raise TopologyError("missing 'n' header")
    return {"n": n, "root": root, "byzantine": byz, "edges": edges}


def load_topology(path: str, neighbor_seed: int = 0, mode: Optional[str] = None) -> Topology:
    with open(path, encoding="utf-8") as fh:
        parsed = parse_topology_text(fh.read())
    topo = build_topology(
        parsed["edges"],
        root=parsed["root"],
        byzantine=parsed["byzantine"],
        neighbor_seed=neighbor_seed,
        mode=mode,
    )
    if topo.n != parsed["n"]:
        raise TopologyError(f"header says n={parsed['n']} but edges span {topo.n} processes")
    return topo


# ---------------------------------------------------------------------------
# seeded generators used by sweeps and tests

def random_tree_edges(n: int, seed: int) -> list[tuple[int, int]]:
    """Uniform-ish random tree by random attachment over a shuffled order."""
    if n < 2:
        raise TopologyError("need at least 2 processes")
    rng = random.Random(seed)
    nodes = list(range(n))
    rng.shuffle(nodes)
    edges = []
    for i in range(1, n):
        edges.append((nodes[i], nodes[rng.randrange(i)]))
    return edges


def random_connected_graph_edges(n: int, extra: int, seed: int) -> list[tuple[int, int]]:
    """Random tree plus `extra` distinct non-tree edges."""
    rng = random.Random(seed)
    edges = set(tuple(sorted(e)) for e in random_tree_edges(n, seed))
    candidates = [
        (u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges
    ]
    rng.shuffle(candidates)
    edges.update(candidates[:extra])
    return sorted(edges)
