import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongstab.topology import (
    TopologyError,
    build_topology,
    correct_metrics,
    distance_to_byzantine,
    kth_neighbor,
    load_topology,
    parse_topology_text,
    random_connected_graph_edges,
    random_tree_edges,
)


def test_smallest_path():
    t = build_topology([(0, 1), (1, 2)], root=0)
    assert t.n == 3
    assert t.max_degree == 2
    assert t.degree(1) == 2


def test_byzantine_leaf_keeps_correct_subgraph_connected():
    t = build_topology([(0, 1), (1, 2)], root=0, byzantine=[2], mode="ss-st")
    m = correct_metrics(t)
    assert m.connected and m.d == 1 and m.f == 1


@pytest.mark.parametrize(
    "edges, err",
    [
        ([(0, 1), (2, 3)], "disconnected"),
        ([(0, 0)], "self-loop"),
        ([(0, 1), (1, 0)], "duplicate"),
        ([(0, 2)], "dense"),
        ([], "empty"),
    ],
)
def test_rejects_malformed_graphs(edges, err):
    with pytest.raises(TopologyError, match=err):
        build_topology(edges)


def test_mode_validation():
    with pytest.raises(TopologyError, match="root must not be Byzantine"):
        build_topology([(0, 1)], root=0, byzantine=[0], mode="ss-st")
    with pytest.raises(TopologyError, match="disconnected in ss-st"):
        build_topology([(0, 1), (1, 2)], root=0, byzantine=[1], mode="ss-st")
    with pytest.raises(TopologyError, match="requires a tree"):
        build_topology([(0, 1), (1, 2), (0, 2)], mode="ss-to")
    with pytest.raises(TopologyError, match="rootless"):
        build_topology([(0, 1)], root=0, mode="ss-to")
    with pytest.raises(TopologyError, match="requires a root"):
        build_topology([(0, 1)], mode="ss-st")


def test_kth_neighbor_reads_stored_order():
    t = build_topology([(0, 1), (1, 2)], root=0, neighbor_seed=3)
    order = t.neighbor_order[1]
    assert kth_neighbor(t, 1, 1) == order[0]
    assert kth_neighbor(t, 1, 2) == order[1]
    assert sorted(order) == [0, 2]
    with pytest.raises(TopologyError):
        kth_neighbor(t, 0, 2)


def test_neighbor_orders_seeded_and_reproducible():
    a = build_topology(random_tree_edges(12, 4), neighbor_seed=1)
    b = build_topology(random_tree_edges(12, 4), neighbor_seed=1)
    c = build_topology(random_tree_edges(12, 4), neighbor_seed=2)
    assert a.neighbor_order == b.neighbor_order
    assert a.neighbor_order != c.neighbor_order  # overwhelmingly likely at n=12


def test_correct_metrics_examples():
    t = build_topology([(0, 1), (1, 2), (2, 3)], byzantine=[3])
    m = correct_metrics(t)
    assert (m.connected, m.d, m.f) == (True, 2, 1)

    t = build_topology([(0, 1), (1, 2)], byzantine=[1])
    assert not correct_metrics(t).connected

    star = build_topology([(0, i) for i in range(1, 5)])
    assert correct_metrics(star).d == 2


def test_distance_to_byzantine_examples():
    path5 = [(i, i + 1) for i in range(4)]
    t = build_topology(path5, byzantine=[0])
    assert [distance_to_byzantine(t)[v] for v in range(5)] == [0, 1, 2, 3, 4]

    t = build_topology(path5)
    assert all(d == math.inf for d in distance_to_byzantine(t).values())

    t = build_topology([(0, 1), (1, 2)], byzantine=[0, 2])
    assert [distance_to_byzantine(t)[v] for v in range(3)] == [0, 1, 0]


def _all_pairs_diameter(t):
    # independent oracle: plain all-pairs BFS over the correct subgraph
    correct = sorted(t.correct)
    best = 0
    for src in correct:
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for v in frontier:
                for u in t.neighbor_order[v]:
                    if u in t.correct and u not in dist:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
            frontier = nxt
        if len(dist) != len(correct):
            return None
        best = max(best, max(dist.values()))
    return best


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 24), seed=st.integers(0, 10_000), extra=st.integers(0, 5))
def test_diameter_matches_all_pairs_bfs(n, seed, extra):
    t = build_topology(random_connected_graph_edges(n, extra, seed), neighbor_seed=seed)
    assert correct_metrics(t).d == _all_pairs_diameter(t)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 16), seed=st.integers(0, 10_000), byz_seed=st.integers(0, 5))
def test_kth_neighbor_bijection_and_byz_distance(n, seed, byz_seed):
    import random as _r

    edges = random_tree_edges(n, seed)
    byz = _r.Random(byz_seed).sample(range(n), min(byz_seed, n - 1))
    t = build_topology(edges, byzantine=byz, neighbor_seed=seed)
    for v in range(t.n):
        hits = {kth_neighbor(t, v, k) for k in range(1, t.degree(v) + 1)}
        assert hits == set(t.neighbor_order[v])
        assert len(hits) == t.degree(v)
    dist = distance_to_byzantine(t)
    for v in range(t.n):
        assert (dist[v] == 0) == (v in t.byzantine)


def test_topology_file_parsing(tmp_path):
    text = """
# a commented path
n 4
root 0
byz 3
edge 0 1
edge 1 2
edge 2 3
"""
    parsed = parse_topology_text(text)
    assert parsed == {"n": 4, "root": 0, "byzantine": [3], "edges": [(0, 1), (1, 2), (2, 3)]}
    p = tmp_path / "path4.topo"
    p.write_text(text)
    t = load_topology(str(p), neighbor_seed=5, mode="ss-st")
    assert t.n == 4 and t.root == 0 and t.byzantine == {3}

    with pytest.raises(TopologyError, match="missing 'n'"):
        parse_topology_text("edge 0 1")
    with pytest.raises(TopologyError, match="unknown directive"):
        parse_topology_text("n 2\nfoo 1")
    (tmp_path / "bad.topo").write_text("n 5\nedge 0 1\n")
    with pytest.raises(TopologyError, match="header says n=5"):
        load_topology(str(tmp_path / "bad.topo"))
