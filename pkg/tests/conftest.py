import random

from strongstab.engine import Daemon, StopCondition, arbitrary_configuration, run
from strongstab.adversary import make_adversary
from strongstab.topology import (
    build_topology,
    random_connected_graph_edges,
    random_tree_edges,
    TopologyError,
)


def path_edges(n):
    return [(i, i + 1) for i in range(n - 1)]


def st_topology(n=3, byz=(), seed=0, edges=None):
    return build_topology(edges or path_edges(n), root=0, byzantine=byz, neighbor_seed=seed, mode="ss-st")


def to_topology(n=3, byz=(), seed=0, edges=None):
    return build_topology(edges or path_edges(n), byzantine=byz, neighbor_seed=seed, mode="ss-to")


def random_st_topology(n, f, seed, extra=1):
    """Random connected graph with root 0 and f Byzantine processes chosen so
    the correct subgraph stays connected."""
    rng = random.Random(seed)
    for attempt in range(60):
        s = seed * 100 + attempt
        edges = random_connected_graph_edges(n, extra, s)
        byz = rng.sample(range(1, n), f) if f else []
        try:
            return build_topology(edges, root=0, byzantine=byz, neighbor_seed=s, mode="ss-st")
        except TopologyError:
            continue
    raise AssertionError("no valid topology found")


def random_to_topology(n, f, seed, prefer_internal=False):
    rng = random.Random(seed)
    edges = random_tree_edges(n, seed)
    byz = []
    if f:
        degs = {}
        for u, v in edges:
            degs[u] = degs.get(u, 0) + 1
            degs[v] = degs.get(v, 0) + 1
        if prefer_internal:
            byz = [max(degs, key=lambda v: (degs[v], -v))]
        else:
            byz = rng.sample(range(n), f)
    return build_topology(edges, byzantine=byz, neighbor_seed=seed, mode="ss-to")


def quick_run(topo, protocol, adversary_name="silent", adversary_params=None, *,
              init=None, init_seed=0, daemon_seed=0, adversary_seed=0,
              max_steps=2000, fairness=None, kind="distributed", hostile=False,
              predicate=None):
    adv = make_adversary(adversary_name, adversary_params or {}, adversary_seed, topo, protocol)
    daemon = Daemon(
        kind=kind,
        fairness_bound=fairness if fairness is not None else 2 * topo.n,
        rng_seed=daemon_seed,
        hostile=hostile,
    )
    if init is None:
        init = arbitrary_configuration(topo, protocol, init_seed)
    trace = run(topo, protocol, adv, daemon, init, StopCondition(max_steps=max_steps, predicate=predicate))
    return trace, daemon
