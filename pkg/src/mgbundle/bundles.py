"""Metric graph bundles: validation, lifts, fibers, flaring, restriction, pullback.

A bundle is a surjective simplicial map pi: X -> B whose fibers are connected
induced subgraphs, with a cross-edge into each adjacent fiber from every fiber
vertex.  Generated bundles are truncations of infinite objects, so every base
vertex carries an ``interior_depth`` (distance to the truncation frontier);
flaring and lifting only trust windows that stay deep enough inside.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .coarse import QiCertificate, tightest_certificate
from .graphs import DottedPath, GraphError, MetricGraph, concat_paths

INTERIOR_INF = 10 ** 9


class BundleValidationError(ValueError):
    """A bundle axiom failed; carries a human-readable witness."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class FiberView:
    """One fiber as a standalone graph plus the local/global vertex maps."""

    base_vertex: int
    graph: MetricGraph
    global_ids: tuple[int, ...]
    local_of: dict[int, int]

    def distance(self, x: int, y: int) -> int:
        return self.graph.distance(self.local_of[x], self.local_of[y])

    def geodesic_global(self, x: int, y: int) -> tuple[int, ...]:
        path = self.graph.geodesic(self.local_of[x], self.local_of[y])
        return tuple(self.global_ids[v] for v in path.vertices)


StepRule = Callable[["GraphBundle", int, int], int]


def lex_step(bd: "GraphBundle", x: int, b_next: int) -> int:
    """Smallest-id cross-edge neighbor of x in the fiber over b_next."""
    cands = bd.cross_neighbors(x, b_next)
    if not cands:
        raise BundleValidationError(
            f"vertex {x} has no cross-edge into fiber {b_next}", witness=(x, b_next))
    return cands[0]


class GraphBundle:
    """A validated metric graph bundle.  Build via :func:`validate_bundle`."""

    def __init__(self, total: MetricGraph, base: MetricGraph,
                 projection: Sequence[int],
                 interior_depth: Sequence[int] | None = None,
                 canonical_step: StepRule | None = None,
                 name: str = "bundle"):
        self.total = total
        self.base = base
        self.projection = np.asarray(projection, dtype=np.int64)
        if interior_depth is None:
            interior_depth = [INTERIOR_INF] * base.n
        self.interior_depth = np.asarray(interior_depth, dtype=np.int64)
        self.canonical_step: StepRule = canonical_step or lex_step
        self.name = name
        idx: dict[int, list[int]] = {}
        for x in range(total.n):
            idx.setdefault(int(self.projection[x]), []).append(x)
        self.fiber_index: dict[int, tuple[int, ...]] = {b: tuple(v) for b, v in idx.items()}
        self._fibers: dict[int, FiberView] = {}
        self._eta: np.ndarray | None = None
        self.flaring_gate: "FlaringReport | None" = None
        # generated bundles override this to reject lifts whose steps cross
        # truncation artifacts (fiber-frontier clamps)
        self.lift_trust: Callable[["GraphBundle", tuple[int, ...]], bool] = \
            lambda bd, lift: True

    # -- structure accessors ---------------------------------------------------

    def fiber(self, b: int) -> FiberView:
        view = self._fibers.get(b)
        if view is None:
            globals_ = self.fiber_index[b]
            local_of = {g: i for i, g in enumerate(globals_)}
            keep = set(globals_)
            edges = [(local_of[u], local_of[v]) for u, v in self.total.edges
                     if u in keep and v in keep]
            try:
                graph = MetricGraph(len(globals_), edges)
            except GraphError as exc:
                raise BundleValidationError(
                    f"fiber over {b} is not connected: {exc}", witness=b) from exc
            view = FiberView(b, graph, globals_, local_of)
            self._fibers[b] = view
        return view

    def fiber_distance(self, x: int, y: int) -> int:
        bx, by = int(self.projection[x]), int(self.projection[y])
        if bx != by:
            raise GraphError(f"vertices {x},{y} lie in different fibers")
        return self.fiber(bx).distance(x, y)

    def cross_neighbors(self, x: int, b_next: int) -> list[int]:
        proj = self.projection
        return [w for w in self.total.neighbors[x] if proj[w] == b_next]

    def trusted_base(self, min_depth: int) -> list[int]:
        return [b for b in range(self.base.n) if self.interior_depth[b] >= min_depth]

    # -- eta: uniform properness of the fibers ----------------------------------

    def eta_table(self, m_max: int | None = None) -> np.ndarray:
        """eta[m] = max fiber distance among same-fiber pairs at d_X <= m.

        Computed once over all same-fiber pairs (same-fiber d_X never exceeds
        the fiber diameter, so the table is complete); monotone by running max.
        """
        if self._eta is None:
            worst: dict[int, int] = {}
            chunk = 256
            for b in sorted(self.fiber_index):
                view = self.fiber(b)
                k = len(view.global_ids)
                if k < 2:
                    continue
                dfib = view.graph.rows(list(range(k)))
                cols = np.asarray(view.global_ids)
                for lo in range(0, k, chunk):
                    srcs = list(view.global_ids[lo:lo + chunk])
                    dx = self.total.rows(srcs)[:, cols].astype(np.int64)
                    df = dfib[lo:lo + chunk].astype(np.int64)
                    for m, d in zip(dx.ravel(), df.ravel()):
                        m = int(m)
                        if d > worst.get(m, -1):
                            worst[m] = int(d)
            top = max(worst) if worst else 0
            table = np.zeros(top + 1, dtype=np.int64)
            for m, d in worst.items():
                table[m] = d
            self._eta = np.maximum.accumulate(table)
        if m_max is not None and m_max + 1 > len(self._eta):
            pad = np.full(m_max + 1 - len(self._eta), self._eta[-1] if len(self._eta) else 0,
                          dtype=np.int64)
            return np.concatenate([self._eta, pad])
        return self._eta

    def eta(self, m: int) -> int:
        table = self.eta_table()
        if m < 0:
            return 0
        return int(table[min(m, len(table) - 1)])

    def default_eta_mmax(self) -> int:
        return 2 * self.base.diameter() + 4

    def __repr__(self) -> str:
        return (f"GraphBundle({self.name}: |X|={self.total.n}, |B|={self.base.n}, "
                f"fibers={len(self.fiber_index)})")


def validate_bundle(total: MetricGraph, base: MetricGraph, projection: Sequence[int],
                    interior_depth: Sequence[int] | None = None,
                    canonical_step: StepRule | None = None,
                    name: str = "bundle") -> GraphBundle:
    """Check all bundle axioms and return the GraphBundle; raise with a witness."""
    proj = list(int(p) for p in projection)
    if len(proj) != total.n:
        raise BundleValidationError(
            f"projection covers {len(proj)} vertices, total graph has {total.n}")
    for x, b in enumerate(proj):
        if not 0 <= b < base.n:
            raise BundleValidationError(f"projection of {x} is {b}, not a base vertex",
                                        witness=x)
    hit = set(proj)
    for b in range(base.n):
        if b not in hit:
            raise BundleValidationError(f"projection misses base vertex {b}", witness=b)
    base_edges = set(base.edges)
    for u, v in total.edges:
        bu, bv = proj[u], proj[v]
        if bu != bv and (min(bu, bv), max(bu, bv)) not in base_edges:
            raise BundleValidationError(
                f"edge ({u},{v}) maps to non-edge ({bu},{bv}): projection not simplicial",
                witness=(u, v))
    bundle = GraphBundle(total, base, proj, interior_depth, canonical_step, name)
    for b in range(base.n):
        bundle.fiber(b)  # raises if disconnected
    # condition 2: every fiber vertex has a cross-edge into each adjacent fiber
    for b1, b2 in base.edges:
        for src, dst in ((b1, b2), (b2, b1)):
            for x in bundle.fiber_index[src]:
                if not bundle.cross_neighbors(x, dst):
                    raise BundleValidationError(
                        f"vertex {x} in fiber {src} has no edge into adjacent fiber {dst}",
                        witness=(x, src, dst))
    return bundle


# -- lifting -------------------------------------------------------------------


def lift_geodesic(bd: GraphBundle, gamma: DottedPath, x: int,
                  step: StepRule | None = None) -> DottedPath:
    """Lift a base geodesic to an equal-length geodesic of X starting at x."""
    if gamma.host is not bd.base:
        raise GraphError("gamma is not a path in the base graph")
    if not gamma.is_geodesic():
        raise GraphError("gamma is not a geodesic in the base")
    if int(bd.projection[x]) != gamma.start:
        raise GraphError(f"{x} does not lie over the start of gamma")
    step = step or lex_step
    verts = [x]
    for b_next in gamma.vertices[1:]:
        verts.append(step(bd, verts[-1], b_next))
    lift = DottedPath(bd.total, tuple(verts))
    assert lift.length == gamma.length
    assert bd.total.distance(lift.start, lift.end) == gamma.length, \
        "lift of a base geodesic must be geodesic in the total graph"
    return lift


def lift_quasigeodesic(bd: GraphBundle, beta: DottedPath, x: int,
                       beta_certificate: QiCertificate | None = None,
                       step: StepRule | None = None) -> tuple[DottedPath, QiCertificate]:
    """Stepwise lift of a dotted base path; returns the lift and its certificate.

    The lift satisfies  -eps + |i-j|/k <= d_X(lift(i), lift(j)) <= (k+eps+1)|i-j|
    for the base path's constants (k, eps); asserted on all index pairs.
    """
    from .coarse import certify_quasigeodesic, path_index_pairs

    if beta.host is not bd.base:
        raise GraphError("beta is not a path in the base graph")
    if int(bd.projection[x]) != beta.start:
        raise GraphError(f"{x} does not lie over the start of beta")
    if beta_certificate is None:
        beta_certificate = certify_quasigeodesic(beta)
    step = step or lex_step
    verts = [x]
    for prev, b_next in zip(beta.vertices, beta.vertices[1:]):
        verts.append(verts[-1] if b_next == prev else step(bd, verts[-1], b_next))
    lift = DottedPath(bd.total, tuple(verts))
    cert = certify_quasigeodesic(lift)
    k, eps = beta_certificate.lam, beta_certificate.eps
    for sep, dist in path_index_pairs(lift):
        assert Fraction(sep) / k - eps <= dist <= (k + eps + 1) * sep
    return lift, cert


def section_assignment_through(bd: GraphBundle, x: int) -> dict[int, int]:
    """Total assignment b -> F_b through x, built stepwise along a base BFS tree.

    Uses the bundle's canonical cross-step rule, so generated bundles yield
    their natural sections (constant coordinate, doubling orbit, automorphism
    orbit); arbitrary bundles fall back to lexicographic steps.
    """
    from collections import deque

    b0 = int(bd.projection[x])
    parent: dict[int, int] = {b0: -1}
    order = [b0]
    q = deque([b0])
    while q:
        u = q.popleft()
        for w in bd.base.neighbors[u]:
            if w not in parent:
                parent[w] = u
                order.append(w)
                q.append(w)
    s = {b0: x}
    for b in order[1:]:
        s[b] = bd.canonical_step(bd, s[parent[b]], b)
    return s


@dataclass(frozen=True)
class FiberMap:
    """Fiber identification along a fixed base geodesic."""

    b_from: int
    b_to: int
    base_geodesic: tuple[int, ...]
    mapping: dict[int, int]
    displacement: int

    def __call__(self, x: int) -> int:
        return self.mapping[x]


def fiber_identification(bd: GraphBundle, b1: int, b2: int) -> FiberMap:
    """phi: F_b1 -> F_b2 by lifting one fixed geodesic from every fiber vertex.

    Every point moves exactly d_B(b1, b2) in X (graph-bundle case, exact).
    """
    gamma = bd.base.geodesic(b1, b2)
    d = gamma.length
    mapping = {}
    for x in bd.fiber_index[b1]:
        if d == 0:
            mapping[x] = x
            continue
        lift = lift_geodesic(bd, gamma, x)
        mapping[x] = lift.end
        assert bd.total.distance(x, lift.end) == d
    return FiberMap(b1, b2, gamma.vertices, mapping, d)


# -- flaring -------------------------------------------------------------------


@dataclass(frozen=True)
class LiftPairSample:
    window: tuple[int, ...]          # base geodesic, length 2n
    lift1: tuple[int, ...]
    lift2: tuple[int, ...]
    d_center: int
    d_forward: int
    d_backward: int
    kind: str                        # "section" or "random"


@dataclass(frozen=True)
class FlaringReport:
    """Outcome of the empirical flaring check at one (k, n, M)."""

    k: Fraction
    window: int
    threshold: int
    nu: Fraction | None
    samples: tuple[LiftPairSample, ...]
    qualifying: int
    seed: int
    direction_detail: dict

    @property
    def outcome(self) -> str:
        if self.qualifying == 0:
            return "inconclusive"
        return "flaring" if self.nu is not None else "failed"

    def reverify(self) -> bool:
        """Replaying the stored samples satisfies the reported inequality."""
        if self.nu is None:
            return True
        for s in self.samples:
            if s.d_center >= self.threshold:
                if self.nu * s.d_center > max(s.d_forward, s.d_backward):
                    return False
        return True


def _stepwise_lift(bd: GraphBundle, window: Sequence[int], x: int,
                   rule: StepRule) -> tuple[int, ...]:
    """Walk the window's base vertices from the center vertex x outward."""
    center = len(window) // 2
    assert int(bd.projection[x]) == window[center]
    right = [x]
    for b in window[center + 1:]:
        right.append(rule(bd, right[-1], b))
    left = [x]
    for b in reversed(window[:center]):
        left.append(rule(bd, left[-1], b))
    return tuple(reversed(left[1:])) + tuple(right)


def _random_step(rng: random.Random) -> StepRule:
    def rule(bd: GraphBundle, x: int, b_next: int) -> int:
        cands = bd.cross_neighbors(x, b_next)
        return cands[rng.randrange(len(cands))]
    return rule


def sample_windows(bd: GraphBundle, half: int, count: int,
                   rng: random.Random) -> list[tuple[int, ...]]:
    """Seeded base geodesics of length 2*half, fully inside trusted depth."""
    trusted = [b for b in bd.trusted_base(half)]
    out = []
    tries = 0
    while len(out) < count and tries < 200 * max(count, 1):
        tries += 1
        u = trusted[rng.randrange(len(trusted))]
        v = trusted[rng.randrange(len(trusted))]
        if bd.base.distance(u, v) != 2 * half:
            continue
        geo = bd.base.geodesic(u, v)
        if all(int(bd.interior_depth[b]) >= half for b in geo.vertices):
            out.append(geo.vertices)
    return out


def check_flaring(bd: GraphBundle, k: Fraction | int = 1, window: int = 2,
                  threshold: int = 2, samples: int = 60, seed: int = 0,
                  attach: bool = False) -> FlaringReport:
    """Largest nu > 1 with nu*d_0 <= max(d_{+n}, d_{-n}) on all sampled pairs.

    Lift pairs are drawn from (a) canonical sections restricted to the window
    and (b) random stepwise lifts, both seeded; all produced lifts move one
    edge per base step, hence are 1-qi (so k-qi for every k >= 1).
    """
    rng = random.Random(seed)
    windows = sample_windows(bd, window, max(1, samples // 4), rng)
    if not windows:
        report = FlaringReport(Fraction(k), window, threshold, None, (), 0, seed,
                               {"note": "no trusted window of required length"})
        if attach:
            bd.flaring_gate = report
        return report
    recorded: list[LiftPairSample] = []
    qualifying = 0
    untrusted = 0
    worst_ratio: Fraction | None = None
    fwd, bwd = [], []
    rand_rule = _random_step(rng)

    def trusted_lift(win, rule) -> tuple[int, ...] | None:
        nonlocal untrusted
        fiber = bd.fiber_index[win[len(win) // 2]]
        for _ in range(20):
            x = fiber[rng.randrange(len(fiber))]
            lift = _stepwise_lift(bd, win, x, rule)
            if bd.lift_trust(bd, lift):
                return lift
            untrusted += 1
        return None

    for i in range(samples):
        win = windows[rng.randrange(len(windows))]
        kind = "section" if rng.random() < 0.5 else "random"
        rule = bd.canonical_step if kind == "section" else rand_rule
        l1 = trusted_lift(win, rule)
        l2 = trusted_lift(win, rule)
        if l1 is None or l2 is None or l1 == l2:
            continue
        c = len(win) // 2
        d0 = bd.fiber_distance(l1[c], l2[c])
        dfw = bd.fiber_distance(l1[-1], l2[-1])
        dbw = bd.fiber_distance(l1[0], l2[0])
        recorded.append(LiftPairSample(win, l1, l2, d0, dfw, dbw, kind))
        if d0 >= threshold:
            qualifying += 1
            ratio = Fraction(max(dfw, dbw), d0)
            fwd.append(Fraction(dfw, d0))
            bwd.append(Fraction(dbw, d0))
            if worst_ratio is None or ratio < worst_ratio:
                worst_ratio = ratio
    nu = worst_ratio if (worst_ratio is not None and worst_ratio > 1) else None
    detail = {
        "forward_min": str(min(fwd)) if fwd else None,
        "forward_max": str(max(fwd)) if fwd else None,
        "backward_min": str(min(bwd)) if bwd else None,
        "backward_max": str(max(bwd)) if bwd else None,
        "untrusted_lift_pairs": untrusted,
    }
    report = FlaringReport(Fraction(k), window, threshold, nu, tuple(recorded),
                           qualifying, seed, detail)
    if attach:
        bd.flaring_gate = report
    return report


def bounded_flaring_profile(bd: GraphBundle, k: Fraction | int = 1, n_max: int = 4,
                            samples: int = 40, seed: int = 0) -> dict[int, Fraction | None]:
    """mu_k(N): max observed end/start fiber-distance ratio over length-N windows.

    Entries with no qualifying sample are None (flagged); present entries are
    monotone-completed with a running max.
    """
    rng = random.Random(seed)
    out: dict[int, Fraction | None] = {0: Fraction(1)}
    rand_rule = _random_step(rng)
    for n in range(1, n_max + 1):
        best: Fraction | None = None
        trusted = bd.trusted_base(n)
        pairs = [(u, v) for u in trusted for v in trusted if bd.base.distance(u, v) == n]
        if not pairs:
            out[n] = None
            continue
        for _ in range(samples):
            u, v = pairs[rng.randrange(len(pairs))]
            geo = bd.base.geodesic(u, v)
            fiber = bd.fiber_index[u]
            x1 = fiber[rng.randrange(len(fiber))]
            x2 = fiber[rng.randrange(len(fiber))]
            kind_rule = bd.canonical_step if rng.random() < 0.5 else rand_rule
            l1 = [x1]
            l2 = [x2]
            for b in geo.vertices[1:]:
                l1.append(kind_rule(bd, l1[-1], b))
                l2.append(kind_rule(bd, l2[-1], b))
            d_start = bd.fiber_distance(x1, x2)
            d_end = bd.fiber_distance(l1[-1], l2[-1])
            ratio = Fraction(d_end, max(d_start, 1))
            if best is None or ratio > best:
                best = ratio
        out[n] = best
    # monotone completion over present entries
    running = Fraction(1)
    for n in sorted(out):
        if out[n] is not None:
            running = max(running, out[n])
            out[n] = running
    return out


# -- morphisms, restriction, pullback -------------------------------------------


@dataclass
class BundleMorphism:
    """Pair (f, g) with pi2 . f = g . pi1 exactly on vertices."""

    source: GraphBundle
    target: GraphBundle
    vertex_map: tuple[int, ...]
    base_map: tuple[int, ...]

    def __post_init__(self):
        if len(self.vertex_map) != self.source.total.n:
            raise GraphError("vertex_map does not cover the source total graph")
        if len(self.base_map) != self.source.base.n:
            raise GraphError("base_map does not cover the source base graph")
        for x in range(self.source.total.n):
            lhs = int(self.target.projection[self.vertex_map[x]])
            rhs = self.base_map[int(self.source.projection[x])]
            if lhs != rhs:
                raise GraphError(f"morphism square does not commute at vertex {x}")

    def lipschitz_report(self) -> dict[str, int]:
        f_worst = 0
        for u, v in self.source.total.edges:
            f_worst = max(f_worst, self.target.total.distance(
                self.vertex_map[u], self.vertex_map[v]))
        g_worst = 0
        for u, v in self.source.base.edges:
            g_worst = max(g_worst, self.target.base.distance(
                self.base_map[u], self.base_map[v]))
        return {"vertex_map_edge_stretch": f_worst, "base_map_edge_stretch": g_worst}

    def fiber_map(self, b: int) -> dict[int, int]:
        return {x: self.vertex_map[x] for x in self.source.fiber_index[b]}


def identity_morphism(bd: GraphBundle) -> BundleMorphism:
    return BundleMorphism(bd, bd, tuple(range(bd.total.n)), tuple(range(bd.base.n)))


@dataclass(frozen=True)
class IsomorphismReport:
    base_certificate: QiCertificate
    base_surjectivity_defect: int
    fiber_certificates: dict[int, QiCertificate]
    fiber_surjectivity_defect: int
    isomorphism_by_criterion: bool

    @property
    def worst_fiber(self) -> QiCertificate:
        worst = max(self.fiber_certificates.values(),
                    key=lambda c: (c.lam, c.eps))
        return worst


def check_isomorphism(m: BundleMorphism, pair_cap: int = 4000, seed: int = 0,
                      base_eps_max: int | None = None,
                      fiber_eps_max: int | None = None) -> IsomorphismReport:
    """Measure base/fiber qi constants of a morphism; report-only.

    'isomorphism-by-criterion' means: the base map is a measured
    quasi-isometry and the fiber constants are uniformly bounded (when no
    explicit bounds are given, the measured maxima are used, so the flag
    reduces to base coarse surjectivity plus fiber coarse surjectivity).
    """
    rng = random.Random(seed)
    src, tgt = m.source, m.target

    def sample_pairs(k: int) -> list[tuple[int, int]]:
        if k * (k - 1) // 2 <= pair_cap:
            return [(i, j) for i in range(k) for j in range(i + 1, k)]
        return [(rng.randrange(k), rng.randrange(k)) for _ in range(pair_cap)]

    base_pairs = []
    for i, j in sample_pairs(src.base.n):
        if i != j:
            base_pairs.append((src.base.distance(i, j),
                               tgt.base.distance(m.base_map[i], m.base_map[j])))
    base_cert = tightest_certificate(base_pairs or [(0, 0)])
    base_surj = int(tgt.base.dist_to_set(set(m.base_map)).max())

    fiber_certs: dict[int, QiCertificate] = {}
    fiber_surj = 0
    for b in sorted(src.fiber_index):
        view_s = src.fiber(b)
        tb = m.base_map[b]
        view_t = tgt.fiber(tb)
        ids = view_s.global_ids
        pairs = []
        for i, j in sample_pairs(len(ids)):
            if i != j:
                pairs.append((view_s.graph.distance(i, j),
                              view_t.distance(m.vertex_map[ids[i]], m.vertex_map[ids[j]])))
        fiber_certs[b] = tightest_certificate(pairs or [(0, 0)])
        image = {view_t.local_of[m.vertex_map[x]] for x in ids}
        fiber_surj = max(fiber_surj, int(view_t.graph.dist_to_set(image).max()))

    base_bound = 2 if base_eps_max is None else base_eps_max
    fiber_bound = 2 if fiber_eps_max is None else fiber_eps_max
    ok = (base_cert.eps <= base_bound and base_surj <= base_bound
          and all(c.eps <= fiber_bound for c in fiber_certs.values())
          and fiber_surj <= fiber_bound)
    return IsomorphismReport(base_cert, base_surj, fiber_certs, fiber_surj, ok)


def restrict(bd: GraphBundle, base_subset: Iterable[int]) -> tuple[GraphBundle, BundleMorphism]:
    """Restriction bundle over a connected base subgraph, plus its inclusion."""
    A = sorted({int(b) for b in base_subset})
    if not A:
        raise GraphError("empty base subset")
    sub_base, base_old_to_new = bd.base.induced_subgraph(A)
    total_vertices = sorted(v for v in range(bd.total.n)
                            if int(bd.projection[v]) in set(A))
    sub_total, tot_old_to_new = bd.total.induced_subgraph(total_vertices)
    new_proj = [0] * sub_total.n
    for old, new in tot_old_to_new.items():
        new_proj[new] = base_old_to_new[int(bd.projection[old])]
    depth = [int(bd.interior_depth[a]) for a in A]
    new_to_old_total = {v: k for k, v in tot_old_to_new.items()}
    new_to_old_base = {v: k for k, v in base_old_to_new.items()}

    def restricted_step(sub: GraphBundle, x: int, b_next: int) -> int:
        # reuse the parent's canonical rule whenever its target stays inside
        old_x = new_to_old_total[x]
        old_b = new_to_old_base[b_next]
        old_target = bd.canonical_step(bd, old_x, old_b)
        new_target = tot_old_to_new.get(old_target)
        if new_target is not None:
            return new_target
        return lex_step(sub, x, b_next)

    sub = validate_bundle(sub_total, sub_base, new_proj, depth,
                          canonical_step=restricted_step, name=f"{bd.name}|A")
    inclusion = BundleMorphism(
        sub, bd,
        tuple(new_to_old_total[v] for v in range(sub_total.n)),
        tuple(new_to_old_base[b] for b in range(sub_base.n)))
    return sub, inclusion


@dataclass(frozen=True)
class PullbackResult:
    bundle: GraphBundle
    morphism: BundleMorphism
    # (b1, x_global_in_X) -> vertex of the pullback total graph
    vertex_of: dict[tuple[int, int], int]


def pullback(bd: GraphBundle, new_base: MetricGraph, base_map: Sequence[int],
             lipschitz_bound: int | None = None) -> PullbackResult:
    """Pullback bundle along g: new_base -> base.

    Vertices are copies of the fibers over g(b1).  Intra-fiber edges are
    copied; for each new-base edge a fixed lexicographic geodesic in the old
    base is chosen and two copies are joined iff some isometric lift of that
    geodesic connects them.  Every fiber map of the resulting morphism is a
    graph isomorphism onto its target fiber.
    """
    g = [int(b) for b in base_map]
    if len(g) != new_base.n:
        raise GraphError("base_map does not cover the new base")
    for b in g:
        if not 0 <= b < bd.base.n:
            raise GraphError(f"base_map value {b} is not a base vertex")
    if lipschitz_bound is not None:
        for u, v in new_base.edges:
            if bd.base.distance(g[u], g[v]) > lipschitz_bound:
                raise GraphError(
                    f"base_map stretches edge ({u},{v}) beyond {lipschitz_bound}")

    offsets: dict[int, int] = {}
    vertex_of: dict[tuple[int, int], int] = {}
    count = 0
    for b1 in range(new_base.n):
        offsets[b1] = count
        for x in bd.fiber_index[g[b1]]:
            vertex_of[(b1, x)] = count
            count += 1

    edges: list[tuple[int, int]] = []
    for b1 in range(new_base.n):
        for u, v in bd.fiber(g[b1]).graph.edges:
            gu = bd.fiber_index[g[b1]][u]
            gv = bd.fiber_index[g[b1]][v]
            edges.append((vertex_of[(b1, gu)], vertex_of[(b1, gv)]))
    proj_arr = bd.projection
    for s, t in new_base.edges:
        chain = bd.base.geodesic(g[s], g[t]).vertices
        # ends[x] = all endpoints of isometric lifts of `chain` starting at x
        fiber_s = bd.fiber_index[g[s]]
        reach: dict[int, set[int]] = {x: {x} for x in fiber_s}
        for b_next in chain[1:]:
            for x in fiber_s:
                nxt: set[int] = set()
                for z in reach[x]:
                    nxt.update(w for w in bd.total.neighbors[z] if proj_arr[w] == b_next)
                reach[x] = nxt
        for x in fiber_s:
            for y in reach[x]:
                edges.append((vertex_of[(s, x)], vertex_of[(t, y)]))

    total1 = MetricGraph(count, edges)
    proj1 = [0] * count
    for (b1, _x), v1 in vertex_of.items():
        proj1[v1] = b1
    depth1 = [int(bd.interior_depth[g[b1]]) for b1 in range(new_base.n)]
    vmap = [0] * count
    for (b1, x), v1 in vertex_of.items():
        vmap[v1] = x

    bundle1 = validate_bundle(total1, new_base, proj1, depth1, name=f"{bd.name}*")
    morphism = BundleMorphism(bundle1, bd, tuple(vmap), tuple(g))
    return PullbackResult(bundle1, morphism, vertex_of)
