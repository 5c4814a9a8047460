from __future__ import annotations

import random

import pytest

from mgbundle.graphs import DottedPath, GraphError, MetricGraph

from oracles import distance_table


def random_connected_graph(rng: random.Random, n: int, extra: int) -> MetricGraph:
    # random spanning tree plus extra edges
    edges = set()
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        j = rng.randrange(i)
        a, b = order[i], order[j]
        edges.add((min(a, b), max(a, b)))
    while len(edges) < n - 1 + extra:
        a, b = rng.randrange(n), rng.randrange(n)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return MetricGraph(n, edges)


def test_distance_basics():
    p4 = MetricGraph.path(4)
    assert p4.distance(0, 3) == 3
    assert p4.distance(2, 2) == 0
    c4 = MetricGraph.cycle(4)
    assert c4.distance(0, 2) == 2


def test_distance_matches_plain_bfs_oracle():
    rng = random.Random(7)
    for _ in range(5):
        g = random_connected_graph(rng, 40, 30)
        D = distance_table(g.n, g.edges)
        for _ in range(200):
            u, v = rng.randrange(g.n), rng.randrange(g.n)
            assert g.distance(u, v) == D[u][v]


def test_metric_axioms_random():
    rng = random.Random(11)
    g = random_connected_graph(rng, 30, 25)
    for _ in range(500):
        u, v, w = (rng.randrange(g.n) for _ in range(3))
        assert g.distance(u, v) == g.distance(v, u)
        assert (g.distance(u, v) == 0) == (u == v)
        assert g.distance(u, w) <= g.distance(u, v) + g.distance(v, w)


def test_disconnected_rejected():
    with pytest.raises(GraphError):
        MetricGraph(4, [(0, 1), (2, 3)])


def test_self_loop_rejected():
    with pytest.raises(GraphError):
        MetricGraph(3, [(0, 0), (0, 1), (1, 2)])


def test_unknown_vertex_rejected():
    g = MetricGraph.path(3)
    with pytest.raises(GraphError):
        g.distance(0, 5)


def test_geodesic_path_and_tiebreak():
    p4 = MetricGraph.path(4)
    assert p4.geodesic(0, 3).vertices == (0, 1, 2, 3)
    c4 = MetricGraph.cycle(4)
    assert c4.geodesic(0, 2).vertices == (0, 1, 2)  # lex smaller than (0,3,2)


def test_geodesic_in_tree_unique():
    rng = random.Random(3)
    tree = random_connected_graph(rng, 25, 0)
    for _ in range(50):
        u, v = rng.randrange(25), rng.randrange(25)
        geo = tree.geodesic(u, v)
        assert geo.length == tree.distance(u, v)
        assert set(geo.vertices) == set(tree.interval(u, v))


def test_interval_contains_geodesic_and_endpoints():
    rng = random.Random(5)
    g = random_connected_graph(rng, 30, 20)
    for _ in range(100):
        u, v = rng.randrange(g.n), rng.randrange(g.n)
        iv = set(g.interval(u, v))
        assert u in iv and v in iv
        assert set(g.geodesic(u, v).vertices) <= iv


def test_interval_examples():
    assert MetricGraph.path(4).interval(0, 3) == (0, 1, 2, 3)
    assert MetricGraph.cycle(4).interval(0, 2) == (0, 1, 2, 3)


def test_dotted_path_validation():
    g = MetricGraph.path(4)
    p = DottedPath(g, (0, 1, 1, 2))
    assert p.length == 2
    with pytest.raises(GraphError):
        DottedPath(g, (0, 2))
    with pytest.raises(GraphError):
        DottedPath(g, ())


def test_dotted_path_concat():
    g = MetricGraph.path(5)
    a = DottedPath(g, (0, 1, 2))
    b = DottedPath(g, (2, 3, 4))
    assert a.concat(b).vertices == (0, 1, 2, 3, 4)
    with pytest.raises(GraphError):
        b.concat(a)


def test_rows_batch_matches_single():
    rng = random.Random(9)
    g = random_connected_graph(rng, 50, 40)
    batch = g.rows(list(range(0, 50, 7)))
    for i, s in enumerate(range(0, 50, 7)):
        assert (batch[i] == g.dist_row(s)).all()


def test_dist_to_set():
    g = MetricGraph.path(6)
    d = g.dist_to_set([0, 5])
    assert list(d) == [0, 1, 2, 2, 1, 0]


def test_spill_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("COARSE_CACHE_DIR", str(tmp_path))
    g = MetricGraph.path(10)
    row = g.dist_row(3).copy()
    g2 = MetricGraph.path(10)  # same content key, reads the spilled row
    assert (g2.dist_row(3) == row).all()
    assert any(tmp_path.iterdir())


def test_induced_subgraph():
    g = MetricGraph.grid(3, 3)
    sub, mapping = g.induced_subgraph([0, 1, 2, 5])
    assert sub.n == 4
    assert sub.distance(mapping[0], mapping[5]) == 3
