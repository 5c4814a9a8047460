"""Finite unit-edge metric graphs with a cached hop-count distance oracle.

Vertices are integers ``0..n-1``.  All graphs are connected; every edge has
length 1 and the metric is the shortest-path hop count.  Distances are exact
integers throughout.
"""
from __future__ import annotations

import hashlib
import os
import threading
from collections import OrderedDict, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Batch BFS goes through scipy's C implementation when many rows are needed;
# single rows use a plain deque BFS which is faster to warm up.
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _sp_dijkstra


class GraphError(ValueError):
    """Invalid graph input (unknown vertex, disconnected data, bad edge)."""


def _canonical_edges(edges: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        out.add((u, v) if u < v else (v, u))
    return tuple(sorted(out))


class MetricGraph:
    """Connected graph with unit edges; distances cached per BFS source."""

    def __init__(self, vertex_count: int, edges: Iterable[tuple[int, int]],
                 cache_rows: int = 4096):
        n = int(vertex_count)
        if n <= 0:
            raise GraphError("vertex_count must be positive")
        self.n = n
        self.edges = _canonical_edges(edges)
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) out of range for {n} vertices")
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self.neighbors: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(a)) for a in nbrs)
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self._cache_rows = cache_rows
        self._lock = threading.Lock()
        self._csr = None
        self._key: str | None = None
        # any unreachable vertex shows up as -1 in the root row
        row0 = self._bfs(0)
        if int(row0.min()) < 0:
            bad = int(np.argmin(row0))
            raise GraphError(f"graph is not connected: vertex {bad} unreachable from 0")

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def path(n: int) -> "MetricGraph":
        return MetricGraph(n, [(i, i + 1) for i in range(n - 1)])

    @staticmethod
    def cycle(n: int) -> "MetricGraph":
        return MetricGraph(n, [(i, (i + 1) % n) for i in range(n)])

    @staticmethod
    def grid(w: int, h: int) -> "MetricGraph":
        edges = []
        for i in range(w):
            for j in range(h):
                v = i * h + j
                if j + 1 < h:
                    edges.append((v, v + 1))
                if i + 1 < w:
                    edges.append((v, v + h))
        return MetricGraph(w * h, edges)

    @staticmethod
    def complete(n: int) -> "MetricGraph":
        return MetricGraph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])

    # -- distance oracle ------------------------------------------------------

    def content_key(self) -> str:
        if self._key is None:
            h = hashlib.sha256()
            h.update(str(self.n).encode())
            h.update(np.asarray(self.edges, dtype=np.int64).tobytes())
            self._key = h.hexdigest()[:20]
        return self._key

    def _check_vertex(self, v: int) -> int:
        v = int(v)
        if not 0 <= v < self.n:
            raise GraphError(f"unknown vertex id {v}")
        return v

    def _bfs(self, source: int) -> np.ndarray:
        dist = np.full(self.n, -1, dtype=np.int32)
        dist[source] = 0
        q = deque([source])
        nbrs = self.neighbors
        while q:
            u = q.popleft()
            du = dist[u] + 1
            for w in nbrs[u]:
                if dist[w] < 0:
                    dist[w] = du
                    q.append(w)
        return dist

    def _spill_path(self, source: int) -> str | None:
        root = os.environ.get("COARSE_CACHE_DIR")
        if not root:
            return None
        d = os.path.join(root, self.content_key())
        os.makedirs(d, exist_ok=True)
        return os.path.join(d, f"{source}.npy")

    def dist_row(self, source: int) -> np.ndarray:
        """All distances from ``source``; cached (LRU) per source."""
        source = self._check_vertex(source)
        with self._lock:
            row = self._rows.get(source)
            if row is not None:
                self._rows.move_to_end(source)
                return row
        spill = self._spill_path(source)
        if spill and os.path.exists(spill):
            row = np.load(spill)
        else:
            row = self._bfs(source)
            if spill:
                np.save(spill, row)
        row.setflags(write=False)
        with self._lock:
            self._rows[source] = row
            while len(self._rows) > self._cache_rows:
                self._rows.popitem(last=False)
        return row

    def _as_csr(self):
        if self._csr is None:
            if self.edges:
                e = np.asarray(self.edges, dtype=np.int32)
                r = np.concatenate([e[:, 0], e[:, 1]])
                c = np.concatenate([e[:, 1], e[:, 0]])
            else:
                r = c = np.zeros(0, dtype=np.int32)
            data = np.ones(len(r), dtype=np.int8)
            self._csr = csr_matrix((data, (r, c)), shape=(self.n, self.n))
        return self._csr

    def rows(self, sources: Sequence[int], cache: bool = False) -> np.ndarray:
        """Distance rows for many sources at once (scipy batch BFS)."""
        sources = [self._check_vertex(s) for s in sources]
        if not sources:
            return np.zeros((0, self.n), dtype=np.int32)
        if cache or len(sources) <= 2:
            return np.stack([self.dist_row(s) for s in sources])
        d = _sp_dijkstra(self._as_csr(), unweighted=True, indices=sources)
        return d.astype(np.int32)

    def distance(self, u: int, v: int) -> int:
        u, v = self._check_vertex(u), self._check_vertex(v)
        if u == v:
            return 0
        with self._lock:
            for s, t in ((u, v), (v, u)):
                row = self._rows.get(s)
                if row is not None:
                    return int(row[t])
        return int(self.dist_row(u)[v])

    def dist_to_set(self, targets: Iterable[int]) -> np.ndarray:
        """Multi-source BFS: distance of every vertex to the target set."""
        dist = np.full(self.n, -1, dtype=np.int32)
        q = deque()
        for t in targets:
            t = self._check_vertex(t)
            if dist[t] != 0:
                dist[t] = 0
                q.append(t)
        if not q:
            raise GraphError("empty target set")
        while q:
            u = q.popleft()
            du = dist[u] + 1
            for w in self.neighbors[u]:
                if dist[w] < 0:
                    dist[w] = du
                    q.append(w)
        return dist

    def diameter(self) -> int:
        ecc = 0
        for v in range(self.n):
            ecc = max(ecc, int(self.dist_row(v).max()))
        return ecc

    # -- geodesics ------------------------------------------------------------

    def geodesic(self, u: int, v: int) -> "DottedPath":
        """The lexicographically smallest geodesic ``u -> v``."""
        u, v = self._check_vertex(u), self._check_vertex(v)
        row_v = self.dist_row(v)
        seq = [u]
        cur = u
        while cur != v:
            step = row_v[cur] - 1
            cur = min(w for w in self.neighbors[cur] if row_v[w] == step)
            seq.append(cur)
        return DottedPath(self, tuple(seq))

    def interval(self, u: int, v: int) -> tuple[int, ...]:
        """All vertices on some geodesic ``u -> v`` (two BFS passes)."""
        u, v = self._check_vertex(u), self._check_vertex(v)
        ru, rv = self.dist_row(u), self.dist_row(v)
        mask = (ru + rv) == ru[v]
        return tuple(int(w) for w in np.nonzero(mask)[0])

    def induced_subgraph(self, vertices: Iterable[int]) -> tuple["MetricGraph", dict[int, int]]:
        """Induced subgraph on ``vertices`` (must be connected).

        Returns the new graph plus the old->new vertex map; new ids follow
        the sorted order of the old ones.
        """
        verts = sorted({self._check_vertex(v) for v in vertices})
        old_to_new = {v: i for i, v in enumerate(verts)}
        keep = set(verts)
        edges = [(old_to_new[a], old_to_new[b]) for a, b in self.edges
                 if a in keep and b in keep]
        return MetricGraph(len(verts), edges), old_to_new

    def __repr__(self) -> str:
        return f"MetricGraph(n={self.n}, edges={len(self.edges)})"


@dataclass(frozen=True)
class DottedPath:
    """Vertex sequence whose consecutive entries are equal or adjacent."""

    host: MetricGraph
    vertices: tuple[int, ...]

    def __post_init__(self):
        if not self.vertices:
            raise GraphError("empty path")
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        nbrs = self.host.neighbors
        for a, b in zip(self.vertices, self.vertices[1:]):
            if a != b and b not in nbrs[a]:
                raise GraphError(f"step ({a},{b}) is neither lazy nor an edge")

    @property
    def length(self) -> int:
        return sum(1 for a, b in zip(self.vertices, self.vertices[1:]) if a != b)

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def reversed(self) -> "DottedPath":
        return DottedPath(self.host, tuple(reversed(self.vertices)))

    def concat(self, other: "DottedPath") -> "DottedPath":
        if other.host is not self.host:
            raise GraphError("concatenating paths from different graphs")
        if other.start != self.end:
            raise GraphError("paths do not share an endpoint")
        return DottedPath(self.host, self.vertices + other.vertices[1:])

    def is_geodesic(self) -> bool:
        return self.length == self.host.distance(self.start, self.end)

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)


def concat_paths(paths: Sequence[DottedPath]) -> DottedPath:
    if not paths:
        raise GraphError("nothing to concatenate")
    out = paths[0]
    for p in paths[1:]:
        out = out.concat(p)
    return out
