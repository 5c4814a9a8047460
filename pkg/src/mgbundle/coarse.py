"""Coarse-geometry toolkit on finite metric graphs.

Gromov products, four-point hyperbolicity defect, slim triangles,
quasigeodesic certificates, Hausdorff distance, nearest-point projections,
quasiconvexity, chained projection paths, barycenters, and the canonical
metric-graph approximation of a finite metric table.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .graphs import DottedPath, GraphError, MetricGraph, concat_paths

DEFAULT_LAMBDA_GRID = tuple(Fraction(4 + k, 4) for k in range(13))  # 1, 1.25, ..., 4


def gromov_product(g: MetricGraph, p: int, x: int, y: int) -> Fraction:
    """(x.y)_p = (d(p,x) + d(p,y) - d(x,y)) / 2, exact."""
    return Fraction(g.distance(p, x) + g.distance(p, y) - g.distance(x, y), 2)


@dataclass(frozen=True)
class DeltaReport:
    """Worst four-point defect of the Gromov product inequality."""

    delta: Fraction
    witness: tuple[int, int, int, int]  # (p, x, y, z), tight at the witness
    exhaustive: bool
    quadruples_checked: int

    def check_witness(self, g: MetricGraph) -> bool:
        p, x, y, z = self.witness
        defect = min(gromov_product(g, p, x, z), gromov_product(g, p, y, z)) \
            - gromov_product(g, p, x, y)
        return defect == self.delta


def _quad_defect(D: np.ndarray, i: int, j: int, k: int, l: int) -> tuple[Fraction, tuple]:
    # largest pairing sum minus second largest, over the three pairings
    pairs = (
        (int(D[i, j]) + int(D[k, l]), (i, k, l, j)),
        (int(D[i, k]) + int(D[j, l]), (i, j, l, k)),
        (int(D[i, l]) + int(D[j, k]), (i, j, k, l)),
    )
    s = sorted(pairs, key=lambda t: t[0])
    # witness (p,x,y,z): p,z span the largest pairing, x,y the other one
    p, x, y, z = s[2][1]
    return Fraction(s[2][0] - s[1][0], 2), (p, x, y, z)


def gromov_delta(g: MetricGraph, exhaustive_cap: int = 400,
                 samples: int = 200_000, seed: int | None = None) -> DeltaReport:
    """Worst defect of (x.y)_p >= min{(x.z)_p,(y.z)_p} - delta over quadruples.

    Exhaustive up to ``exhaustive_cap`` vertices; above the cap a seeded
    uniform sample is scanned instead and the result is a lower bound only
    (``exhaustive=False``).  Raises on oversize graphs unless a seed is given.
    """
    n = g.n
    D = np.stack([g.dist_row(v) for v in range(n)]).astype(np.int64)
    if n <= exhaustive_cap:
        best = Fraction(0)
        best_quad = (0, 0, 0, min(1, n - 1))
        count = 0
        for i in range(n):
            Di = D[i]
            for j in range(i + 1, n):
                # pairing sums against all (k,l) at once
                A = D[i, j] + D
                B = np.add.outer(Di, D[j])
                C = B.T
                hi = np.maximum(A, np.maximum(B, C))
                lo = np.minimum(A, np.minimum(B, C))
                mid = A + B + C - hi - lo
                diff = hi - mid
                count += n * n
                m = int(diff.max())
                if Fraction(m, 2) > best:
                    k, l = np.unravel_index(int(diff.argmax()), diff.shape)
                    best, best_quad = _quad_defect(D, i, j, int(k), int(l))
        report = DeltaReport(best, best_quad, True, count)
    else:
        if seed is None:
            raise GraphError(
                f"{n} vertices exceed the exhaustive cap {exhaustive_cap}; "
                "pass a seed to use the sampled (lower-bound) scan")
        rng = random.Random(seed)
        best = Fraction(0)
        best_quad = (0, 0, 1, 2)
        for _ in range(samples):
            i, j, k, l = (rng.randrange(n) for _ in range(4))
            d, quad = _quad_defect(D, i, j, k, l)
            if d > best:
                best, best_quad = d, quad
        report = DeltaReport(best, best_quad, False, samples)
    assert report.check_witness(g)
    return report


def slim_triangle_defect(g: MetricGraph, x: int, y: int, z: int) -> int:
    """Max distance from a chosen geodesic side to the union of the others."""
    sides = [g.geodesic(x, y), g.geodesic(y, z), g.geodesic(x, z)]
    worst = 0
    for i, side in enumerate(sides):
        others = set()
        for j, o in enumerate(sides):
            if j != i:
                others.update(o.vertices)
        dist = g.dist_to_set(others)
        worst = max(worst, max(int(dist[v]) for v in side.vertices))
    return worst


@dataclass(frozen=True)
class QiCertificate:
    """Constants (lam, eps) with sep/lam - eps <= dist <= lam*sep + eps."""

    lam: Fraction
    eps: Fraction

    def admits(self, sep: int, dist: int) -> bool:
        return Fraction(sep, 1) / self.lam - self.eps <= dist <= self.lam * sep + self.eps

    def check_pairs(self, pairs: Iterable[tuple[int, int]]) -> bool:
        return all(self.admits(s, d) for s, d in pairs)


def tightest_certificate(pairs: Sequence[tuple[int, int]],
                         lambda_grid: Sequence[Fraction] = DEFAULT_LAMBDA_GRID) -> QiCertificate:
    """Smallest grid lambda admitting a finite eps, then the minimal eps.

    On finite data every grid lambda admits a finite eps, so the grid minimum
    wins; the grid stays a parameter so callers can evaluate eps at coarser
    multiplicative slack.
    """
    if not pairs:
        raise GraphError("no pairs to certify")
    if not lambda_grid:
        raise GraphError("empty lambda grid")
    # every grid value admits a finite eps on finite data, so the smallest wins
    lam = Fraction(min(lambda_grid))
    eps = Fraction(0)
    for sep, dist in pairs:
        need = max(Fraction(dist) - lam * sep, Fraction(sep) / lam - dist)
        if need > eps:
            eps = need
    return QiCertificate(lam, eps)


def path_index_pairs(path: DottedPath) -> list[tuple[int, int]]:
    """(index separation, graph distance) for all index pairs of the path."""
    verts = path.vertices
    n = len(verts)
    uniq = sorted(set(verts))
    rows = {v: path.host.dist_row(v) for v in uniq}
    out = []
    for i in range(n):
        ri = rows[verts[i]]
        for j in range(i + 1, n):
            out.append((j - i, int(ri[verts[j]])))
    return out


def certify_quasigeodesic(alpha: DottedPath,
                          lambda_grid: Sequence[Fraction] = DEFAULT_LAMBDA_GRID) -> QiCertificate:
    """Tightest certificate for a dotted path, exhaustive over index pairs."""
    if len(alpha.vertices) == 1:
        return QiCertificate(Fraction(lambda_grid[0]), Fraction(0))
    return tightest_certificate(path_index_pairs(alpha), lambda_grid)


def hausdorff_distance(g: MetricGraph, A: Iterable[int], B: Iterable[int]) -> int:
    A, B = list(A), list(B)
    if not A or not B:
        raise GraphError("Hausdorff distance of an empty set")
    da = g.dist_to_set(A)
    db = g.dist_to_set(B)
    return max(max(int(db[a]) for a in A), max(int(da[b]) for b in B))


def quasiconvexity_constant(g: MetricGraph, A: Iterable[int]) -> int:
    """Smallest K with every geodesic between points of A inside N_K(A)."""
    A = sorted(set(A))
    if not A:
        raise GraphError("empty set")
    dist_a = g.dist_to_set(A)
    rows = {a: g.dist_row(a) for a in A}
    worst = 0
    for i, u in enumerate(A):
        ru = rows[u]
        for v in A[i:]:
            mask = (ru + rows[v]) == ru[v]
            worst = max(worst, int(dist_a[mask].max()))
    return worst


def project(g: MetricGraph, A: Iterable[int], x: int) -> int:
    """Exact nearest point of A to x, smallest id on ties."""
    A = sorted(set(A))
    if not A:
        raise GraphError("projection on an empty set")
    row = g.dist_row(x)
    return min(A, key=lambda a: (int(row[a]), a))


@dataclass(frozen=True)
class ChainedPath:
    """Concatenated projection path with its per-hop projection points."""

    path: DottedPath
    projections: tuple[int, ...]


def chained_projection_path(g: MetricGraph, blocks: Sequence[Iterable[int]],
                            y: int, y_end: int) -> ChainedPath:
    """Project block to block from y, then concatenate geodesics to y_end."""
    blocks = [sorted(set(b)) for b in blocks]
    if not blocks or any(not b for b in blocks):
        raise GraphError("empty projection block")
    if y not in blocks[0]:
        raise GraphError("start vertex not in the first block")
    if y_end not in blocks[-1]:
        raise GraphError("end vertex not in the last block")
    hops = [y]
    for block in blocks[1:]:
        hops.append(project(g, block, hops[-1]))
    legs = [g.geodesic(a, b) for a, b in zip(hops, hops[1:])]
    legs.append(g.geodesic(hops[-1], y_end))
    return ChainedPath(concat_paths(legs), tuple(hops))


@dataclass(frozen=True)
class Barycenter:
    vertex: int
    radius: int


def barycenter(g: MetricGraph, x: int, y: int, z: int) -> Barycenter:
    """Vertex minimizing the max distance to the three pairwise intervals."""
    dists = [g.dist_to_set(g.interval(a, b))
             for a, b in ((x, y), (y, z), (x, z))]
    worst = np.maximum(dists[0], np.maximum(dists[1], dists[2]))
    v = int(worst.argmin())  # argmin takes the smallest index on ties
    return Barycenter(v, int(worst[v]))


@dataclass(frozen=True)
class ApproximationResult:
    """Metric-graph approximation of a finite metric table, with audit."""

    graph: MetricGraph
    lower_ok: bool          # d_input <= d_graph everywhere
    upper_ok: bool          # d_graph <= d_input + 1 everywhere
    worst_upper_defect: Fraction
    worst_pair: tuple[int, int] | None


def graph_approximation(table: Sequence[Sequence]) -> ApproximationResult:
    """One vertex per point, an edge iff the table distance is <= 1.

    The two-sided comparison d_input <= d_graph <= d_input + 1 is checked a
    posteriori and reported; the upper half can fail when the input is not a
    length-space sample.
    """
    n = len(table)
    vals = [[Fraction(table[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        if vals[i][i] != 0:
            raise GraphError("nonzero diagonal in metric table")
        for j in range(n):
            if vals[i][j] != vals[j][i]:
                raise GraphError(f"asymmetric entries at ({i},{j})")
            if i != j and vals[i][j] <= 0:
                raise GraphError(f"non-positive off-diagonal at ({i},{j})")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if vals[i][j] <= 1]
    try:
        g = MetricGraph(n, edges) if n > 1 else MetricGraph(1, [])
    except GraphError as exc:
        raise GraphError(f"approximation graph is disconnected: {exc}") from exc
    lower_ok, upper_ok = True, True
    worst: Fraction | None = None
    worst_pair = None
    for i in range(n):
        row = g.dist_row(i)
        for j in range(i + 1, n):
            dg = Fraction(int(row[j]))
            if dg < vals[i][j]:
                lower_ok = False
            defect = dg - vals[i][j]
            if worst is None or defect > worst:
                worst, worst_pair = defect, (i, j)
            if defect > 1:
                upper_ok = False
    return ApproximationResult(g, lower_ok, upper_ok,
                               worst if worst is not None else Fraction(0), worst_pair)
