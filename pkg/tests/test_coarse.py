from __future__ import annotations

import random
from fractions import Fraction

import pytest

from mgbundle.coarse import (
    ApproximationResult,
    DeltaReport,
    QiCertificate,
    barycenter,
    certify_quasigeodesic,
    chained_projection_path,
    graph_approximation,
    gromov_delta,
    gromov_product,
    hausdorff_distance,
    project,
    quasiconvexity_constant,
    slim_triangle_defect,
    tightest_certificate,
)
from mgbundle.graphs import DottedPath, GraphError, MetricGraph

from oracles import delta_exhaustive, distance_table, gromov_product_table
from test_graphs import random_connected_graph


def tripod(arm: int) -> tuple[MetricGraph, list[int]]:
    # center 0, three arms of length `arm`; returns (graph, arm tips)
    edges = []
    v = 1
    tips = []
    for _ in range(3):
        prev = 0
        for _ in range(arm):
            edges.append((prev, v))
            prev = v
            v += 1
        tips.append(prev)
    return MetricGraph(v, edges), tips


# -- Gromov product ----------------------------------------------------------

def test_gromov_product_examples():
    p4 = MetricGraph.path(4)
    assert gromov_product(p4, 0, 0, 3) == 0
    assert gromov_product(p4, 1, 0, 3) == 0
    g, tips = tripod(2)
    assert gromov_product(g, tips[0], tips[1], tips[2]) == 2


def test_gromov_product_perturbation_inequalities():
    # parts (1)-(4) of the product arithmetic, on random quadruples
    rng = random.Random(21)
    for gi in range(3):
        g = random_connected_graph(rng, 35, 25)
        for _ in range(400):
            p, x, y, x2, y2, p2 = (rng.randrange(g.n) for _ in range(6))
            gp = gromov_product
            assert abs(gp(g, p, x, y) - gp(g, p, x, y2)) <= g.distance(y, y2)
            assert abs(gp(g, p, x, y) - gp(g, p, x2, y2)) \
                <= g.distance(x, x2) + g.distance(y, y2)
            assert abs(gp(g, p, x, y) - gp(g, p2, x, y)) <= g.distance(p, p2)
            assert abs(gp(g, p, x, y) - gp(g, p2, x2, y2)) \
                <= g.distance(x, x2) + g.distance(y, y2) + g.distance(p, p2)


def test_gromov_product_along_near_geodesic():
    # points in order on a (1,C)-quasigeodesic: (x.y)_p >= d(p,x) - 5C/2
    rng = random.Random(33)
    g = random_connected_graph(rng, 40, 30)
    for _ in range(100):
        u, v = rng.randrange(g.n), rng.randrange(g.n)
        geo = g.geodesic(u, v)
        cert = certify_quasigeodesic(geo)
        verts = geo.vertices
        for _ in range(10):
            i, j = sorted(rng.randrange(len(verts)) for _ in range(2))
            p, x, y = verts[0], verts[i], verts[j]
            assert gromov_product(g, p, x, y) \
                >= g.distance(p, x) - Fraction(5, 2) * cert.eps


# -- four-point delta ---------------------------------------------------------

def test_delta_tree_is_zero():
    rng = random.Random(2)
    tree = random_connected_graph(rng, 20, 0)
    rep = gromov_delta(tree)
    assert rep.delta == 0 and rep.exhaustive


def test_delta_c4_against_oracle():
    rep = gromov_delta(MetricGraph.cycle(4))
    assert rep.delta == delta_exhaustive(4, [(0, 1), (1, 2), (2, 3), (3, 0)]) == 1
    assert rep.check_witness(MetricGraph.cycle(4))


def test_delta_grid_against_oracle():
    g = MetricGraph.grid(8, 8)
    rep = gromov_delta(g)
    assert rep.delta == 7  # oracle value, >= 2
    assert rep.exhaustive and rep.check_witness(g)


def test_delta_random_graphs_match_oracle():
    rng = random.Random(14)
    for _ in range(4):
        g = random_connected_graph(rng, 12, 8)
        rep = gromov_delta(g)
        assert rep.delta == delta_exhaustive(g.n, g.edges)
        assert rep.check_witness(g)


def test_delta_sampled_mode_is_lower_bound():
    g = MetricGraph.grid(8, 8)
    full = gromov_delta(g)
    sampled = gromov_delta(g, exhaustive_cap=10, samples=4000, seed=5)
    assert not sampled.exhaustive
    assert sampled.delta <= full.delta
    assert sampled.check_witness(g)


def test_delta_cap_without_seed_errors():
    g = MetricGraph.grid(8, 8)
    with pytest.raises(GraphError):
        gromov_delta(g, exhaustive_cap=10)


# -- slim triangles -----------------------------------------------------------

def test_slim_triangle_examples():
    rng = random.Random(4)
    tree = random_connected_graph(rng, 15, 0)
    a, b, c = 0, 7, 13
    assert slim_triangle_defect(tree, a, b, c) == 0
    assert slim_triangle_defect(MetricGraph.cycle(4), 0, 1, 2) == 0
    assert slim_triangle_defect(MetricGraph.cycle(6), 0, 2, 4) == 1


def test_slim_vs_delta_envelope():
    # empirical cross-check only: both defects stay within an affine envelope
    rng = random.Random(8)
    for _ in range(5):
        g = random_connected_graph(rng, 25, 15)
        delta = gromov_delta(g).delta
        worst_slim = 0
        for _ in range(30):
            x, y, z = (rng.randrange(g.n) for _ in range(3))
            worst_slim = max(worst_slim, slim_triangle_defect(g, x, y, z))
        assert worst_slim <= 4 * delta + 1


# -- certificates -------------------------------------------------------------

def test_certificate_geodesic():
    g = MetricGraph.grid(5, 5)
    cert = certify_quasigeodesic(g.geodesic(0, 24))
    assert (cert.lam, cert.eps) == (1, 0)


def test_certificate_backtrack_and_constant():
    p4 = MetricGraph.path(4)
    back = certify_quasigeodesic(DottedPath(p4, (0, 1, 2, 1, 2, 3)))
    assert back.lam == 1 and back.eps == 2  # oracle: tight eps at lambda 1 is 2
    const = certify_quasigeodesic(DottedPath(p4, (1, 1, 1)))
    assert const.lam == 1 and const.eps == 2


def test_certificates_reverify_exhaustively():
    rng = random.Random(17)
    g = random_connected_graph(rng, 30, 20)
    D = distance_table(g.n, g.edges)
    for _ in range(20):
        # lazy random walk
        verts = [rng.randrange(g.n)]
        for _ in range(12):
            verts.append(rng.choice(((verts[-1],) + g.neighbors[verts[-1]])))
        path = DottedPath(g, tuple(verts))
        cert = certify_quasigeodesic(path)
        for i in range(len(verts)):
            for j in range(i + 1, len(verts)):
                assert cert.admits(j - i, D[verts[i]][verts[j]])


def test_tightest_certificate_map_pairs():
    pairs = [(1, 3), (2, 5), (4, 4)]
    cert = tightest_certificate(pairs)
    assert cert.lam == 1
    assert cert.eps == 3  # upper side: dist - sep peaks at (2,5)
    assert cert.check_pairs(pairs)


# -- Hausdorff / quasiconvexity / projection ----------------------------------

def test_hausdorff_examples():
    g = MetricGraph.path(4)
    assert hausdorff_distance(g, [0, 1], [0, 1]) == 0
    assert hausdorff_distance(g, [0], [3]) == 3
    grid = MetricGraph.grid(2, 5)
    assert hausdorff_distance(grid, range(0, 5), range(5, 10)) == 1
    with pytest.raises(GraphError):
        hausdorff_distance(g, [], [0])


def test_hausdorff_zero_iff_equal_and_symmetric():
    rng = random.Random(23)
    g = random_connected_graph(rng, 20, 10)
    for _ in range(40):
        A = {rng.randrange(g.n) for _ in range(rng.randrange(1, 6))}
        B = {rng.randrange(g.n) for _ in range(rng.randrange(1, 6))}
        hd = hausdorff_distance(g, A, B)
        assert hd == hausdorff_distance(g, B, A)
        assert (hd == 0) == (A == B)


def test_quasiconvexity_examples():
    g = MetricGraph.cycle(6)
    assert quasiconvexity_constant(g, range(6)) == 0
    assert quasiconvexity_constant(g, [0, 3]) == 1
    rng = random.Random(31)
    tree = random_connected_graph(rng, 18, 0)
    sub = set(tree.geodesic(0, 9).vertices) | set(tree.geodesic(0, 17).vertices)
    assert quasiconvexity_constant(tree, sub) == 0


def test_projection_examples_and_properties():
    p4 = MetricGraph.path(4)
    assert project(p4, [0, 1], 3) == 1
    assert project(p4, [0, 1], 0) == 0
    rng = random.Random(12)
    g = random_connected_graph(rng, 25, 15)
    for _ in range(100):
        A = sorted({rng.randrange(g.n) for _ in range(rng.randrange(1, 7))})
        x = rng.randrange(g.n)
        p = project(g, A, x)
        assert p in A
        assert g.distance(x, p) == min(g.distance(x, a) for a in A)
        assert project(g, A, p) == p  # idempotent


# -- chained projections -------------------------------------------------------

def test_chained_projection_single_block():
    g = MetricGraph.grid(4, 4)
    res = chained_projection_path(g, [list(range(16))], 0, 15)
    assert res.path.vertices == g.geodesic(0, 15).vertices


def test_chained_projection_tree_gates():
    rng = random.Random(6)
    tree = random_connected_graph(rng, 20, 0)
    y, y_end = 3, 17
    geo = tree.geodesic(y, y_end).vertices
    blocks = [[v] for v in geo]
    res = chained_projection_path(tree, blocks, y, y_end)
    assert res.path.vertices == geo


def test_chained_projection_grid_columns_certify():
    g = MetricGraph.grid(6, 6)
    col = lambda i: [i * 6 + j for j in range(6)]
    res = chained_projection_path(g, [col(0), col(5)], 0, 35)
    cert = certify_quasigeodesic(res.path)
    assert cert.lam == 1 and cert.eps <= 2
    assert res.projections[0] == 0


# -- barycenter ----------------------------------------------------------------

def test_barycenter_examples():
    g = MetricGraph.grid(3, 3)
    b = barycenter(g, 4, 4, 4)
    assert (b.vertex, b.radius) == (4, 0)
    t, tips = tripod(3)
    b = barycenter(t, *tips)
    assert (b.vertex, b.radius) == (0, 0)
    b = barycenter(MetricGraph.cycle(6), 0, 2, 4)
    assert b.radius == 1


# -- graph approximation ---------------------------------------------------------

def test_graph_approximation_unit_chain():
    res = graph_approximation([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert res.graph.edges == ((0, 1), (1, 2))
    assert res.graph.distance(0, 2) == 2
    assert res.lower_ok and res.upper_ok


def test_graph_approximation_single_point_and_triangle():
    assert graph_approximation([[0]]).graph.n == 1
    half = Fraction(1, 2)
    res = graph_approximation([[0, half, half], [half, 0, half], [half, half, 0]])
    assert len(res.graph.edges) == 3


def test_graph_approximation_disconnected_errors():
    with pytest.raises(GraphError):
        graph_approximation([[0, 3], [3, 0]])


def test_graph_approximation_audit_flags_non_length_input():
    # four points pairwise 1.5 apart except one pair at 3: no edges <= 1
    with pytest.raises(GraphError):
        graph_approximation([[0, Fraction(3, 2)], [Fraction(3, 2), 0]])
