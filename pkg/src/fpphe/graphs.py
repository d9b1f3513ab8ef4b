"""Graph representation, deterministic generators, and basic metric utilities.

All graphs here are finite truncations of infinite graphs: a ball of some
combinatorial radius around a distinguished origin.  Vertices on the
truncation boundary are flagged as *frontier* vertices so that downstream
computations can detect when a result would be contaminated by the missing
part of the graph.
"""

from __future__ import annotations

import cmath
import json
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

SCHEMA_VERSION = 1

DEFAULT_VERTEX_BUDGET = 2_000_000

UNREACHABLE = -1


class ParameterError(ValueError):
    """Invalid generator or operation parameters."""


class SizeError(ValueError):
    """Requested object exceeds the vertex budget."""


class RangeError(ValueError):
    """Computation would extend past the truncation-safe radius."""


class FrontierError(RuntimeError):
    """A computation touched the truncation frontier and was refused."""


class SchemaVersionError(ValueError):
    """Persisted file has an incompatible schema version."""


class Graph:
    """Immutable undirected graph over integer vertex ids 0..n-1.

    adjacency[v] is a sorted int array of neighbors.  `frontier` holds the
    ids of truncation-boundary vertices.  `layout`, when present, is an
    (n, 2) float array of drawing coordinates (Poincare disk or planar).
    """

    def __init__(self, adjacency, family="custom", params=None, origin=0,
                 layout=None, frontier=()):
        self.adjacency = [np.asarray(sorted(set(nbrs)), dtype=np.int64)
                          for nbrs in adjacency]
        self.family = family
        self.params = dict(params or {})
        self.origin = int(origin)
        self.layout = None if layout is None else np.asarray(layout, dtype=float)
        self.frontier = frozenset(int(v) for v in frontier)
        self._edge_list = None
        self._edge_index = None
        self._frontier_dist = None
        self._validate()

    # -- construction -------------------------------------------------

    @classmethod
    def from_edges(cls, n, edges, family="custom", params=None, origin=0,
                   layout=None, frontier=()):
        adj = [[] for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ParameterError("self-loop %d" % u)
            if not (0 <= u < n and 0 <= v < n):
                raise ParameterError("edge (%d,%d) out of range" % (u, v))
            adj[u].append(v)
            adj[v].append(u)
        return cls(adj, family=family, params=params, origin=origin,
                   layout=layout, frontier=frontier)

    def _validate(self):
        n = self.vertex_count
        for v, nbrs in enumerate(self.adjacency):
            if len(nbrs) and (nbrs[0] < 0 or nbrs[-1] >= n):
                raise ParameterError("neighbor id out of range at vertex %d" % v)
            if np.any(nbrs == v):
                raise ParameterError("self-loop at vertex %d" % v)
        # symmetry
        for v, nbrs in enumerate(self.adjacency):
            for u in nbrs:
                if v not in self.adjacency[u]:
                    raise ParameterError("asymmetric edge (%d,%d)" % (v, u))
        if not (0 <= self.origin < max(n, 1)):
            raise ParameterError("origin out of range")
        for v in self.frontier:
            if not 0 <= v < n:
                raise ParameterError("frontier id out of range")

    # -- basic accessors ----------------------------------------------

    @property
    def vertex_count(self):
        return len(self.adjacency)

    def neighbors(self, v):
        return self.adjacency[v]

    def degree(self, v):
        return len(self.adjacency[v])

    @property
    def max_degree(self):
        return max((len(a) for a in self.adjacency), default=0)

    def edges(self):
        """Canonical edge list: sorted pairs (u, v) with u < v."""
        if self._edge_list is None:
            out = []
            for u, nbrs in enumerate(self.adjacency):
                for v in nbrs:
                    if u < v:
                        out.append((u, int(v)))
            out.sort()
            self._edge_list = out
        return self._edge_list

    def edge_index(self):
        """Map canonical edge (u, v), u < v, to its index in edges()."""
        if self._edge_index is None:
            self._edge_index = {e: i for i, e in enumerate(self.edges())}
        return self._edge_index

    def edge_id(self, u, v):
        return self.edge_index()[(u, v) if u < v else (v, u)]

    def frontier_distance(self):
        """Per-vertex hop distance to the nearest frontier vertex (inf if none)."""
        if self._frontier_dist is None:
            if self.frontier:
                d = bfs_distances(self, self.frontier)
                d = np.where(d == UNREACHABLE, np.iinfo(np.int64).max, d)
            else:
                d = np.full(self.vertex_count, np.iinfo(np.int64).max, dtype=np.int64)
            self._frontier_dist = d
        return self._frontier_dist

    def safe_radius(self, x):
        """Largest k such that |B(x, k)| is uncontaminated by truncation."""
        fd = self.frontier_distance()[x]
        return int(fd) if fd < np.iinfo(np.int64).max else self.vertex_count

    def key(self):
        """Identity of the graph for persistence consistency checks."""
        return (self.family, tuple(sorted(self.params.items())),
                self.vertex_count, len(self.edges()))

    # -- persistence ---------------------------------------------------

    def to_json(self):
        doc = {
            "schema": SCHEMA_VERSION,
            "family": self.family,
            "params": self.params,
            "vertex_count": self.vertex_count,
            "origin": self.origin,
            "edges": [list(e) for e in self.edges()],
            "frontier": sorted(self.frontier),
        }
        if self.layout is not None:
            doc["layout"] = [[float(x), float(y)] for x, y in self.layout]
        return doc

    @classmethod
    def from_json(cls, doc):
        if doc.get("schema") != SCHEMA_VERSION:
            raise SchemaVersionError("graph schema %r, expected %d"
                                     % (doc.get("schema"), SCHEMA_VERSION))
        return cls.from_edges(
            doc["vertex_count"], doc["edges"], family=doc["family"],
            params=doc["params"], origin=doc["origin"],
            layout=doc.get("layout"), frontier=doc.get("frontier", ()))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# metric / boundary utilities
# ---------------------------------------------------------------------------

def bfs_distances(g, sources):
    """Exact hop distances from a vertex set; UNREACHABLE marks unreached."""
    src = [sources] if isinstance(sources, (int, np.integer)) else list(sources)
    if not src:
        raise ValueError("empty source set")
    dist = np.full(g.vertex_count, UNREACHABLE, dtype=np.int64)
    queue = deque()
    for s in sorted(src):
        dist[s] = 0
        queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u]
        for v in g.adjacency[u]:
            if dist[v] == UNREACHABLE:
                dist[v] = du + 1
                queue.append(v)
    return dist


def ball(g, center, radius):
    """Vertex set of B_G(center, radius)."""
    dist = bfs_limited(g, [center], radius)
    return {v for v, d in dist.items()}


def bfs_limited(g, sources, radius):
    """Hop distances from sources, explored only out to `radius`.

    Returns a dict vertex -> distance, touching O(|B(sources, radius)|)
    vertices instead of the whole graph.
    """
    dist = {}
    queue = deque()
    for s in sorted(set(int(v) for v in sources)):
        dist[s] = 0
        queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if du >= radius:
            continue
        for v in g.adjacency[u]:
            v = int(v)
            if v not in dist:
                dist[v] = du + 1
                queue.append(v)
    return dist


def internal_boundary(g, s):
    """Vertices of `s` with a neighbor outside `s`.

    Frontier vertices inside `s` always count as boundary: in the infinite
    graph they have neighbors the truncation cannot see.
    """
    s = set(s)
    out = set()
    for v in s:
        if v in g.frontier or any(int(u) not in s for u in g.adjacency[v]):
            out.add(v)
    return out


@dataclass
class GrowthProfile:
    sizes: list
    rate: float


def growth_profile(g, x, n):
    """Ball sizes |B(x, k)| for k = 0..n plus a fitted exponential rate."""
    if n > g.safe_radius(x):
        raise RangeError("n=%d exceeds truncation-safe radius %d from vertex %d"
                         % (n, g.safe_radius(x), x))
    dist = bfs_distances(g, [x])
    reached = dist[dist != UNREACHABLE]
    sizes = [int(np.sum(reached <= k)) for k in range(n + 1)]
    rate = 1.0
    if n >= 2 and sizes[-1] > sizes[1]:
        ks = np.arange(1, n + 1)
        slope = np.polyfit(ks, np.log(np.asarray(sizes[1:], dtype=float)), 1)[0]
        rate = float(np.exp(slope))
    return GrowthProfile(sizes=sizes, rate=rate)


def cheeger_ratio_search(g, trials, rng_seed):
    """Randomized upper bound on the Cheeger constant of the truncated graph.

    Samples BFS-grown connected sets (plus the whole vertex set) and
    greedily refines each by absorbing neighbors whenever that lowers
    |boundary|/|S|.  Returns (best ratio as a Fraction, witness set).
    This is an upper bound with a witness, never an exact constant.
    """
    rng = np.random.default_rng(rng_seed)
    n = g.vertex_count

    def ratio(s):
        return Fraction(len(internal_boundary(g, s)), len(s))

    best_set = set(range(n))
    best = ratio(best_set)
    for _ in range(trials):
        start = int(rng.integers(n))
        target = int(np.exp(rng.uniform(np.log(2), np.log(max(n, 3)))))
        s = _grow_connected(g, start, target, rng)
        r = ratio(s)
        # local refinement: absorb outside neighbors while the ratio drops
        for _ in range(4):
            candidates = sorted({int(u) for v in internal_boundary(g, s)
                                 for u in g.adjacency[v] if int(u) not in s})
            improved = False
            for u in candidates:
                s2 = s | {u}
                r2 = ratio(s2)
                if r2 < r:
                    s, r = s2, r2
                    improved = True
            if not improved:
                break
        if r < best:
            best, best_set = r, s
    return best, frozenset(best_set)


def _grow_connected(g, start, target, rng):
    s = {start}
    fringe = [int(u) for u in g.adjacency[start]]
    while fringe and len(s) < target:
        i = int(rng.integers(len(fringe)))
        v = fringe.pop(i)
        if v in s:
            continue
        s.add(v)
        fringe.extend(int(u) for u in g.adjacency[v] if int(u) not in s)
    return s


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def generate_regular_tree(branching, depth, vertex_budget=DEFAULT_VERTEX_BUDGET):
    """Rooted b-ary tree: the root and every internal vertex have
    `branching` children.  BFS numbering from the root; the deepest layer
    is the truncation frontier.

    For the 3-regular tree (every vertex degree 3) use
    generate_free_product([2, 2, 2], radius) instead.
    """
    if branching < 2 or depth < 0:
        raise ParameterError("need branching >= 2 and depth >= 0")
    count = (branching ** (depth + 1) - 1) // (branching - 1)
    if count > vertex_budget:
        raise SizeError("b-ary tree with %d vertices exceeds budget" % count)
    adj = [[] for _ in range(count)]
    layer_start, layer_len = 0, 1
    next_id = 1
    for _ in range(depth):
        for u in range(layer_start, layer_start + layer_len):
            for _ in range(branching):
                adj[u].append(next_id)
                adj[next_id].append(u)
                next_id += 1
        layer_start += layer_len
        layer_len *= branching
    frontier = range(layer_start, count) if depth > 0 else range(1)
    return Graph(adj, family="tree",
                 params={"branching": branching, "depth": depth},
                 origin=0, frontier=frontier)


def generate_lattice(d, radius, vertex_budget=DEFAULT_VERTEX_BUDGET):
    """Box {-radius..radius}^d with nearest-neighbor edges, origin at the
    center, BFS vertex numbering.  Frontier: any coordinate at +-radius."""
    if d not in (1, 2, 3):
        raise ParameterError("d must be 1, 2 or 3")
    if radius < 0:
        raise ParameterError("radius must be >= 0")
    side = 2 * radius + 1
    count = side ** d
    if count > vertex_budget:
        raise SizeError("lattice with %d vertices exceeds budget" % count)

    steps = []
    for axis in range(d):
        e = [0] * d
        e[axis] = 1
        steps.append(tuple(e))
        e = [0] * d
        e[axis] = -1
        steps.append(tuple(e))

    origin_coord = (0,) * d
    ids = {origin_coord: 0}
    coords = [origin_coord]
    queue = deque([origin_coord])
    adj = [[]]
    while queue:
        c = queue.popleft()
        u = ids[c]
        for s in steps:
            nc = tuple(c[i] + s[i] for i in range(d))
            if any(abs(x) > radius for x in nc):
                continue
            if nc not in ids:
                ids[nc] = len(coords)
                coords.append(nc)
                adj.append([])
                queue.append(nc)
            v = ids[nc]
            if v not in adj[u]:
                adj[u].append(v)
                adj[v].append(u)
    frontier = [ids[c] for c in coords if any(abs(x) == radius for x in c)]
    layout = None
    if d == 1:
        layout = [(c[0], 0.0) for c in coords]
    elif d == 2:
        layout = [(c[0], c[1]) for c in coords]
    return Graph(adj, family="lattice", params={"d": d, "radius": radius},
                 origin=0, layout=layout, frontier=frontier)


def generate_free_product(factor_sizes, radius,
                          vertex_budget=DEFAULT_VERTEX_BUDGET):
    """Cayley ball of the free product of cyclic groups Z_n1 * Z_n2 * ...

    Generating set: every non-identity power of each factor generator, so
    each factor contributes a complete graph K_n on each of its cosets.
    Elements are alternating-syllable normal forms; BFS from the identity.
    """
    sizes = [int(s) for s in factor_sizes]
    if any(s < 2 for s in sizes) or len(sizes) < 2:
        raise ParameterError("need at least two cyclic factors of size >= 2")
    if radius < 0:
        raise ParameterError("radius must be >= 0")

    def neighbors_of(word):
        out = []
        for i, n_i in enumerate(sizes):
            for e in range(1, n_i):
                if word and word[-1][0] == i:
                    last_e = word[-1][1]
                    new_e = (last_e + e) % n_i
                    if new_e == 0:
                        out.append(word[:-1])
                    else:
                        out.append(word[:-1] + ((i, new_e),))
                else:
                    out.append(word + ((i, e),))
        return out

    identity = ()
    ids = {identity: 0}
    words = [identity]
    adj = [[]]
    layer = [identity]
    for _ in range(radius):
        nxt = []
        for w in layer:
            u = ids[w]
            for nw in neighbors_of(w):
                if nw not in ids:
                    ids[nw] = len(words)
                    words.append(nw)
                    adj.append([])
                    nxt.append(nw)
                    if len(words) > vertex_budget:
                        raise SizeError("free-product ball exceeds budget")
                v = ids[nw]
                if v not in adj[u]:
                    adj[u].append(v)
                    adj[v].append(u)
        layer = nxt
    # close edges among the outermost sphere
    for w in layer:
        u = ids[w]
        for nw in neighbors_of(w):
            if nw in ids:
                v = ids[nw]
                if v not in adj[u]:
                    adj[u].append(v)
                    adj[v].append(u)
    frontier = [ids[w] for w in layer] if radius > 0 else [0]
    return Graph(adj, family="free_product",
                 params={"factors": sizes, "radius": radius},
                 origin=0, frontier=frontier)


# ---------------------------------------------------------------------------
# hyperbolic tessellation {p, q}
# ---------------------------------------------------------------------------

_ROT_PI = np.array([[1j, 0], [0, -1j]], dtype=complex)

MAX_TESSELLATION_LAYERS = 14  # double-precision dedupe safety limit
_DEDUPE_TOL = 1e-9
_DEDUPE_CELL = 1e-7


def _rotation(theta):
    h = theta / 2.0
    return np.array([[cmath.exp(1j * h), 0], [0, cmath.exp(-1j * h)]],
                    dtype=complex)


def _translation(w):
    return np.array([[1, w], [np.conj(w), 1]], dtype=complex)


def _mobius_apply(m, z):
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def _normalize(m):
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return m / np.sqrt(det)


def generate_tessellation(p, q, layers, vertex_budget=DEFAULT_VERTEX_BUDGET):
    """Ball of combinatorial radius `layers` in the {p, q} tessellation.

    q regular p-gons meet at every vertex; hyperbolicity requires
    (p-2)(q-2) > 4.  Construction: BFS over the orientation-preserving
    symmetry group generated by the rotation of order q about the base
    vertex and the half-turn about an edge midpoint, with spatial-hash
    deduplication of vertex positions in the Poincare disk.  The disk
    coordinates become the layout.
    """
    if p < 3 or q < 3:
        raise ParameterError("need p, q >= 3")
    if (p - 2) * (q - 2) <= 4:
        raise ParameterError("{%d,%d} is not hyperbolic: (p-2)(q-2) must exceed 4"
                             % (p, q))
    if layers < 0:
        raise ParameterError("layers must be >= 0")
    if layers > MAX_TESSELLATION_LAYERS:
        raise ParameterError("layers > %d exceeds double-precision dedupe safety"
                             % MAX_TESSELLATION_LAYERS)
    if layers == 0:
        return Graph([[]], family="tessellation",
                     params={"p": p, "q": q, "layers": 0},
                     origin=0, layout=[(0.0, 0.0)], frontier=[0])

    # half edge length m: cosh(m) = cos(pi/p) / sin(pi/q)
    m = math.acosh(math.cos(math.pi / p) / math.sin(math.pi / q))
    w_mid = math.tanh(m / 2.0)
    flip = _translation(w_mid) @ _ROT_PI @ _translation(-w_mid)
    gens = [_normalize(_rotation(2 * math.pi * j / q) @ flip) for j in range(q)]

    transforms = [np.eye(2, dtype=complex)]
    positions = [0j]
    layer_of = [0]
    adj = [set()]
    grid = {}

    def cell_key(z):
        return (round(z.real / _DEDUPE_CELL), round(z.imag / _DEDUPE_CELL))

    def lookup(z):
        cx, cy = cell_key(z)
        best, best_d = None, math.inf
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in grid.get((cx + dx, cy + dy), ()):
                    d = abs(positions[idx] - z)
                    if d < best_d:
                        best, best_d = idx, d
        if best_d < _DEDUPE_TOL:
            return best
        if best_d < 100 * _DEDUPE_TOL:
            raise ParameterError(
                "tessellation dedupe ambiguity at layer depth: two vertices "
                "%.3g apart; reduce layers" % best_d)
        return None

    def register(idx, z):
        grid.setdefault(cell_key(z), []).append(idx)

    register(0, 0j)
    current = [0]
    for layer in range(1, layers + 1):
        batch = np.stack([transforms[u] for u in current])
        nxt = []
        for j, gen in enumerate(gens):
            prods = batch @ gen
            zs = prods[:, 0, 1] / prods[:, 1, 1]
            for k, u in enumerate(current):
                z = complex(zs[k])
                idx = lookup(z)
                if idx is None:
                    idx = len(positions)
                    transforms.append(_normalize(prods[k]))
                    positions.append(z)
                    layer_of.append(layer)
                    adj.append(set())
                    register(idx, z)
                    nxt.append(idx)
                    if len(positions) > vertex_budget:
                        raise SizeError("tessellation ball exceeds vertex budget")
                if idx != u:
                    adj[u].add(idx)
                    adj[idx].add(u)
        current = sorted(nxt)
    # induced edges among the outermost sphere
    if current:
        batch = np.stack([transforms[u] for u in current])
        for gen in gens:
            prods = batch @ gen
            zs = prods[:, 0, 1] / prods[:, 1, 1]
            for k, u in enumerate(current):
                idx = lookup(complex(zs[k]))
                if idx is not None and idx != u:
                    adj[u].add(idx)
                    adj[idx].add(u)

    g = Graph([sorted(s) for s in adj], family="tessellation",
              params={"p": p, "q": q, "layers": layers}, origin=0,
              layout=[(z.real, z.imag) for z in positions],
              frontier=current)
    for v in range(g.vertex_count):
        if v not in g.frontier and g.degree(v) != q:
            raise ParameterError(
                "tessellation construction failed: interior vertex %d has "
                "degree %d, expected %d (precision loss?)" % (v, g.degree(v), q))
    return g
