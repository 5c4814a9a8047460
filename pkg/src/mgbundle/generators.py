"""Deterministic desk-scale example bundles and non-examples.

Three families:

* ``gen_product``      -- product bundles (non-flaring control),
* ``gen_dilation``     -- a one-sided doubling bundle (BS(1,2)-style),
* ``gen_extension``    -- fiberwise-truncated free-by-cyclic mapping-torus
                          models over a line segment of the cyclic direction.

The extension model keeps a full free-group ball as the fiber over every
level; the cyclic generator acts by the automorphism with word truncation
back into the ball.  Truncation only bites at the fiber frontier, so the
interior of the model agrees with the group and ``interior_depth`` marks how
far each base vertex sits from the truncated ends.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .bundles import GraphBundle, validate_bundle
from .graphs import GraphError, MetricGraph

Word = tuple[int, ...]  # reduced word in letters ±1..±rank


# -- free group words ------------------------------------------------------------


def reduce_word(letters: Iterable[int]) -> Word:
    out: list[int] = []
    for l in letters:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


def multiply(w1: Word, w2: Word) -> Word:
    return reduce_word(list(w1) + list(w2))


def invert(w: Word) -> Word:
    return tuple(-l for l in reversed(w))


def shortlex_key(w: Word) -> tuple:
    # letter order: 1 < -1 < 2 < -2 < ...
    return (len(w), tuple(2 * abs(l) - 2 + (0 if l > 0 else 1) for l in w))


def ball_words(rank: int, radius: int) -> list[Word]:
    """All reduced words of length <= radius, in shortlex order."""
    letters = [l for a in range(1, rank + 1) for l in (a, -a)]
    out: list[Word] = [()]
    frontier: list[Word] = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for l in letters:
                if not w or w[-1] != -l:
                    nxt.append(w + (l,))
        out.extend(nxt)
        frontier = nxt
    return sorted(out, key=shortlex_key)


class Automorphism:
    """Free-group automorphism given by generator images (inverse supplied)."""

    def __init__(self, rank: int, images: Sequence[Word], inverse_images: Sequence[Word]):
        if len(images) != rank or len(inverse_images) != rank:
            raise GraphError("need one image per generator")
        self.rank = rank
        self.images = {a + 1: reduce_word(images[a]) for a in range(rank)}
        self.inverse_images = {a + 1: reduce_word(inverse_images[a]) for a in range(rank)}
        for a in range(1, rank + 1):
            if self._apply(self.images, self._apply(self.inverse_images, (a,))) != (a,):
                raise GraphError(f"inverse images do not invert the automorphism at generator {a}")
            if self._apply(self.inverse_images, self._apply(self.images, (a,))) != (a,):
                raise GraphError(f"images do not invert the inverse at generator {a}")

    @staticmethod
    def _apply(table: dict[int, Word], w: Word) -> Word:
        out: list[int] = []
        for l in w:
            img = table[abs(l)]
            out.extend(img if l > 0 else invert(img))
        return reduce_word(out)

    def apply(self, w: Word) -> Word:
        return self._apply(self.images, w)

    def apply_inverse(self, w: Word) -> Word:
        return self._apply(self.inverse_images, w)


# -- bundle specs -----------------------------------------------------------------


@dataclass(frozen=True)
class FreeByCyclicSpec:
    """F_rank x| Z mapping-torus model, truncated to finite radii.

    ``automorphism``/``inverse`` are the generator images of the defining
    automorphism and of its inverse; fibers are free-group balls of radius
    ``fiber_radius`` over a cyclic segment of radius ``base_radius``.
    """

    rank: int
    automorphism: tuple[Word, ...]
    inverse: tuple[Word, ...]
    base_radius: int
    fiber_radius: int
    name: str = "extension"


def tribonacci_spec(base_radius: int = 6, fiber_radius: int = 4) -> FreeByCyclicSpec:
    """Rank-3 positive automorphism a->b, b->c, c->ab (atoroidal class)."""
    return FreeByCyclicSpec(
        rank=3,
        automorphism=((2,), (3,), (1, 2)),
        inverse=((3, -1), (1,), (2,)),
        base_radius=base_radius,
        fiber_radius=fiber_radius,
        name="trib3",
    )


def fibonacci_spec(base_radius: int = 6, fiber_radius: int = 6) -> FreeByCyclicSpec:
    """Rank-2 automorphism a->ab, b->a; keeps the commutator direction flat."""
    return FreeByCyclicSpec(
        rank=2,
        automorphism=((1, 2), (1,)),
        inverse=((2,), (-2, 1)),
        base_radius=base_radius,
        fiber_radius=fiber_radius,
        name="fib2",
    )


def identity_spec(rank: int = 2, base_radius: int = 4, fiber_radius: int = 3) -> FreeByCyclicSpec:
    gens = tuple((a + 1,) for a in range(rank))
    return FreeByCyclicSpec(rank, gens, gens, base_radius, fiber_radius, name="idext")


# -- generators -------------------------------------------------------------------


def gen_product(base: MetricGraph, fiber: MetricGraph, name: str = "product") -> GraphBundle:
    """Product bundle: coordinate edges, projection onto the first factor."""
    fn = fiber.n
    edges = []
    for b in range(base.n):
        for u, v in fiber.edges:
            edges.append((b * fn + u, b * fn + v))
    for b1, b2 in base.edges:
        for f in range(fn):
            edges.append((b1 * fn + f, b2 * fn + f))
    total = MetricGraph(base.n * fn, edges)
    proj = [x // fn for x in range(total.n)]

    def step(bd: GraphBundle, x: int, b_next: int) -> int:
        return b_next * fn + (x % fn)

    return validate_bundle(total, base, proj, canonical_step=step, name=name)


def gen_dilation(base_len: int, fiber_size: int, name: str = "dilation") -> GraphBundle:
    """Doubling bundle: base path [0..base_len], fibers paths [0..fiber_size].

    Crossing one step to the right doubles the fiber coordinate (clamped at
    the top); the backward edges halve it.  Fiber distances between constant
    lifts double per step until saturation, so flaring shows up forward.
    """
    if base_len < 1 or fiber_size < 1:
        raise GraphError("base_len and fiber_size must be positive")
    fn = fiber_size + 1
    edges = []
    for i in range(base_len + 1):
        for j in range(fiber_size):
            edges.append((i * fn + j, i * fn + j + 1))
    for i in range(base_len):
        for j in range(fn):
            edges.append((i * fn + j, (i + 1) * fn + min(2 * j, fiber_size)))
            edges.append((i * fn + (j + 1) // 2, (i + 1) * fn + j))
    total = MetricGraph((base_len + 1) * fn, edges)
    base = MetricGraph.path(base_len + 1)
    proj = [x // fn for x in range(total.n)]

    def step(bd: GraphBundle, x: int, b_next: int) -> int:
        i, j = divmod(x, fn)
        if b_next == i + 1:
            return b_next * fn + min(2 * j, fiber_size)
        if b_next == i - 1:
            return b_next * fn + (j + 1) // 2
        raise GraphError(f"base vertices {i} and {b_next} are not adjacent")

    bundle = validate_bundle(total, base, proj, canonical_step=step, name=name)

    def trust(bd: GraphBundle, lift: tuple[int, ...]) -> bool:
        # honest cross-edges double exactly (or double-minus-one); the
        # saturated top edges are truncation artifacts
        for x, y in zip(lift, lift[1:]):
            ix, jx = divmod(x, fn)
            iy, jy = divmod(y, fn)
            if ix == iy:
                continue
            if iy < ix:
                jx, jy = jy, jx
            if not (jy == 2 * jx - 1 or (jy == 2 * jx and 2 * jx <= fiber_size)):
                return False
        return True

    bundle.lift_trust = trust
    return bundle


def gen_extension(spec: FreeByCyclicSpec) -> GraphBundle:
    """Fiberwise-truncated mapping-torus bundle of a free-group automorphism.

    Vertices are (level, word) with word in the fiber ball; each level is a
    full copy of the ball with its tree edges.  Rightward cross-edges realize
    the inverse automorphism (words truncated back into the ball), leftward
    ones the automorphism, so the model is exact wherever no truncation bites.
    """
    phi = Automorphism(spec.rank, spec.automorphism, spec.inverse)
    words = ball_words(spec.rank, spec.fiber_radius)
    index = {w: i for i, w in enumerate(words)}
    nw = len(words)
    levels = 2 * spec.base_radius + 1

    def trunc(w: Word) -> Word:
        return w[:spec.fiber_radius]

    right_tbl = [index[trunc(phi.apply_inverse(w))] for w in words]
    left_tbl = [index[trunc(phi.apply(w))] for w in words]
    right_exact = [len(phi.apply_inverse(w)) <= spec.fiber_radius for w in words]
    left_exact = [len(phi.apply(w)) <= spec.fiber_radius for w in words]

    letters = [l for a in range(1, spec.rank + 1) for l in (a, -a)]
    edges = []
    for li in range(levels):
        off = li * nw
        for wi, w in enumerate(words):
            for l in letters:
                if not w or w[-1] != -l:
                    w2 = w + (l,)
                    j = index.get(w2)
                    if j is not None and wi < j:
                        edges.append((off + wi, off + j))
    for li in range(levels - 1):
        off, off2 = li * nw, (li + 1) * nw
        for wi in range(nw):
            edges.append((off + wi, off2 + right_tbl[wi]))
            edges.append((off + left_tbl[wi], off2 + wi))

    total = MetricGraph(levels * nw, edges)
    base = MetricGraph.path(levels)
    proj = [x // nw for x in range(total.n)]
    depth = [min(b, 2 * spec.base_radius - b) for b in range(levels)]

    def step(bd: GraphBundle, x: int, b_next: int) -> int:
        li, wi = divmod(x, nw)
        if b_next == li + 1:
            return b_next * nw + right_tbl[wi]
        if b_next == li - 1:
            return b_next * nw + left_tbl[wi]
        raise GraphError(f"base vertices {li} and {b_next} are not adjacent")

    bundle = validate_bundle(total, base, proj, depth, canonical_step=step, name=spec.name)

    def trust(bd: GraphBundle, lift: tuple[int, ...]) -> bool:
        # honest cross-edges realize the automorphism with no word truncation
        for x, y in zip(lift, lift[1:]):
            lx, wx = divmod(x, nw)
            ly, wy = divmod(y, nw)
            if lx == ly:
                continue
            if ly < lx:
                wx, wy = wy, wx
            if not right_exact[wx] or wy != right_tbl[wx]:
                return False
        return True

    bundle.lift_trust = trust
    bundle.words = words  # type: ignore[attr-defined]
    bundle.word_index = index  # type: ignore[attr-defined]
    return bundle
