"""Geodesic machinery: shortest-path DAGs and geodesic enumeration, thin-
triangle (hyperbolicity) estimation, cylinders, detours around forbidden
sets, greedy bilipschitz embedding of the binary tree, and the far-point /
escape-ray construction used to flee a growing occupied region.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graphs import RangeError, bfs_distances, bfs_limited

INFINITE = math.inf


class NoPathError(ValueError):
    """Endpoints are disconnected."""


class EmbeddingError(RuntimeError):
    """Greedy tree embedding got stuck at a leaf."""

    def __init__(self, message, leaf=None):
        super().__init__(message)
        self.leaf = leaf


class GeometryError(RuntimeError):
    """A geometric assertion failed (e.g. delta was underestimated)."""


# ---------------------------------------------------------------------------
# geodesics
# ---------------------------------------------------------------------------

@dataclass
class GeodesicSet:
    x: int
    y: int
    length: int
    vertices: frozenset          # union of all geodesics' vertices (DAG nodes)
    children: dict               # DAG edges: u -> sorted next vertices toward y
    geodesics: list              # materialized vertex sequences, up to cap
    count: int                   # exact number of geodesics (DAG path count)
    count_is_exact: bool
    contaminated: bool           # a true-graph geodesic could leave the truncation


def enumerate_geodesics(g, x, y, cap=10_000):
    """All-shortest-path DAG between x and y plus up to `cap` materialized
    geodesics (canonical DFS order).  The total count is computed exactly
    by dynamic programming over the DAG."""
    x, y = int(x), int(y)
    dx = bfs_distances(g, [x])
    if dx[y] < 0:
        raise NoPathError("no path between %d and %d" % (x, y))
    dy = bfs_distances(g, [y])
    d = int(dx[y])
    on_geo = np.nonzero((dx >= 0) & (dy >= 0) & (dx + dy == d))[0]
    on_set = set(int(v) for v in on_geo)
    children = {}
    for u in on_set:
        nxt = [int(v) for v in g.adjacency[u]
               if int(v) in on_set and dx[v] == dx[u] + 1]
        if nxt:
            children[u] = sorted(nxt)

    # exact path count by DP from y backwards
    order = sorted(on_set, key=lambda v: -int(dx[v]))
    npaths = {y: 1}
    for u in order:
        if u != y:
            npaths[u] = sum(npaths[v] for v in children.get(u, ()))
    count = npaths.get(x, 0)

    geodesics = []
    stack = [(x, [x])]
    while stack and len(geodesics) < cap:
        u, path = stack.pop()
        if u == y:
            geodesics.append(path)
            continue
        for v in reversed(children.get(u, ())):
            stack.append((v, path + [v]))

    fd = g.frontier_distance()
    contaminated = bool(g.frontier) and d >= int(fd[x]) + int(fd[y])
    return GeodesicSet(x=x, y=y, length=d, vertices=frozenset(on_set),
                       children=children, geodesics=geodesics, count=count,
                       count_is_exact=True, contaminated=contaminated)


def canonical_geodesic(g, a, b, dist_from_a=None):
    """One deterministic geodesic: walk from b to a, always stepping to the
    lowest-id neighbor one unit closer to a."""
    a, b = int(a), int(b)
    da = bfs_distances(g, [a]) if dist_from_a is None else dist_from_a
    if da[b] < 0:
        raise NoPathError("no path between %d and %d" % (a, b))
    path = [b]
    cur = b
    while cur != a:
        cur = min(int(v) for v in g.adjacency[cur] if da[v] == da[cur] - 1)
        path.append(cur)
    return path[::-1]


# ---------------------------------------------------------------------------
# thin-triangle defect
# ---------------------------------------------------------------------------

def delta_thin_estimate(g, samples, rng_seed):
    """Sampled thin-triangle defect: for random triples and one canonical
    geodesic per side, the largest distance from a point on one side to the
    union of the other two sides.  A lower bound on the true thinness
    constant of the truncated graph.  Returns (delta_hat, worst_triple)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    n = g.vertex_count
    best = 0.0
    worst = None
    for _ in range(samples):
        xs = sorted(int(v) for v in rng.choice(n, size=3, replace=False))
        d = _triangle_defect(g, *xs)
        if d > best:
            best, worst = d, tuple(xs)
    if worst is None:
        worst = tuple(sorted(int(v) for v in
                             np.random.default_rng(rng_seed).choice(n, size=3,
                                                                    replace=False)))
    return float(best), worst


def _triangle_defect(g, x, y, z):
    dx = bfs_distances(g, [x])
    dy = bfs_distances(g, [y])
    if dx[y] < 0 or dx[z] < 0 or dy[z] < 0:
        return 0.0
    sides = {
        (x, y): canonical_geodesic(g, x, y, dx),
        (y, z): canonical_geodesic(g, y, z, dy),
        (z, x): canonical_geodesic(g, z, x),
    }
    defect = 0
    keys = list(sides)
    for i, k in enumerate(keys):
        others = set(sides[keys[(i + 1) % 3]]) | set(sides[keys[(i + 2) % 3]])
        dother = bfs_distances(g, others)
        defect = max(defect, max(int(dother[u]) for u in sides[k]))
    return float(defect)


def exhaustive_delta(g):
    """Exact maximal thin-triangle defect over every vertex triple, using
    the same canonical-geodesic convention.  Small graphs only."""
    n = g.vertex_count
    best = 0.0
    for x in range(n):
        for y in range(x + 1, n):
            for z in range(y + 1, n):
                best = max(best, _triangle_defect(g, x, y, z))
    return best


# ---------------------------------------------------------------------------
# cylinders and detours
# ---------------------------------------------------------------------------

@dataclass
class Cylinder:
    x: int
    y: int
    width: int
    members: frozenset
    contaminated: bool


def build_cylinder(g, x, y, L, cap=10_000):
    """Union of radius-L balls centered on every vertex lying on some x-y
    geodesic.  Membership depends only on the shortest-path DAG, never on
    the enumeration cap."""
    if L < 0:
        raise ValueError("width must be >= 0")
    gs = enumerate_geodesics(g, x, y, cap=cap)
    members = set()
    for w in gs.vertices:
        members.update(bfs_limited(g, [w], L))
    contaminated = gs.contaminated or any(v in g.frontier for v in members)
    return Cylinder(x=int(x), y=int(y), width=int(L),
                    members=frozenset(members), contaminated=contaminated)


def detour_length(g, a, b, forbidden):
    """Hop length of the shortest a-b path avoiding `forbidden`, or inf."""
    a, b = int(a), int(b)
    forb = set(int(v) for v in forbidden)
    if a in forb or b in forb:
        raise ValueError("endpoints must not be forbidden")
    dist = {a: 0}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b:
            return dist[u]
        for v in g.adjacency[u]:
            v = int(v)
            if v not in dist and v not in forb:
                dist[v] = dist[u] + 1
                queue.append(v)
    return INFINITE


# ---------------------------------------------------------------------------
# greedy binary-tree embedding
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    tree_id: int
    parent: int                  # tree id, -1 for root
    generation: int
    graph_vertex: int
    path_from_parent: list       # vertex sequence in G, empty for root


@dataclass
class EmbeddedTree:
    scale: int                   # edge length r
    depth: int
    nodes: list                  # TreeNode, id order = construction order
    alpha: float                 # measured bilipschitz constant
    alpha_pairs_sampled: int
    incomplete: bool             # truncation stopped some branch

    def tree_distance(self, i, j):
        gi, gj = self.nodes[i], self.nodes[j]
        ai, aj = i, j
        d = 0
        while self.nodes[ai].generation > self.nodes[aj].generation:
            ai = self.nodes[ai].parent
            d += 1
        while self.nodes[aj].generation > self.nodes[ai].generation:
            aj = self.nodes[aj].parent
            d += 1
        while ai != aj:
            ai = self.nodes[ai].parent
            aj = self.nodes[aj].parent
            d += 2
        return d

    def to_json(self):
        return {
            "schema": 1,
            "scale": self.scale,
            "depth": self.depth,
            "alpha": self.alpha,
            "alpha_pairs_sampled": self.alpha_pairs_sampled,
            "incomplete": self.incomplete,
            "nodes": [{"id": n.tree_id, "parent": n.parent,
                       "generation": n.generation, "vertex": n.graph_vertex,
                       "path": list(n.path_from_parent)} for n in self.nodes],
        }

    @classmethod
    def from_json(cls, doc):
        nodes = [TreeNode(n["id"], n["parent"], n["generation"], n["vertex"],
                          list(n["path"])) for n in doc["nodes"]]
        return cls(scale=doc["scale"], depth=doc["depth"], nodes=nodes,
                   alpha=doc["alpha"],
                   alpha_pairs_sampled=doc["alpha_pairs_sampled"],
                   incomplete=doc["incomplete"])


def embed_binary_tree(g, r, depth, alpha_target=2.0, candidate_cap=48,
                      alpha_pair_budget=400):
    """Greedy embedding of the depth-`depth` binary tree at edge scale r.

    From each leaf at graph vertex u, children are chosen among vertices w
    with d(u,w) in [r, alpha_target*r] that make radial progress
    (d(o,w) >= d(o,u) + r/alpha_target); an admissible child pair must be
    mutually separated (d(w,z) >= r) and genuinely diverge at u (Gromov
    product bound d(u,w)+d(u,z)-d(w,z) <= r-1, which rules out a line).
    Maximal separation preferred, lowest vertex ids break ties; graph
    vertices are never reused.  The realized distortion alpha is measured
    over sampled tree-vertex pairs.
    """
    if r < 2:
        raise ValueError("scale r must be >= 2")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    gp = _growth_ratio(g)
    if gp is not None and gp < 1.05:
        import warnings
        warnings.warn("graph does not look exponentially growing "
                      "(ball ratio %.3f); embedding may fail" % gp)
    o = g.origin
    dist_o = bfs_distances(g, [o])
    used = {o}
    nodes = [TreeNode(0, -1, 0, o, [])]
    leaves = [0]
    incomplete = False

    for gen in range(depth):
        next_leaves = []
        for leaf in leaves:
            u = nodes[leaf].graph_vertex
            du = bfs_limited(g, [u], int(math.ceil(alpha_target * r)))
            cands = sorted(
                v for v, dv in du.items()
                if r <= dv <= alpha_target * r
                and v not in used
                and dist_o[v] >= dist_o[u] + r / alpha_target)
            if len(cands) > candidate_cap:
                # deterministic thinning: prefer the radially deepest
                cands = sorted(sorted(cands, key=lambda v: (-int(dist_o[v]), v))
                               [:candidate_cap])
            pair = _best_child_pair(g, u, cands, r, du,
                                    int(math.ceil(alpha_target * r)))
            if pair is None:
                raise EmbeddingError(
                    "no admissible child pair at tree vertex %d "
                    "(graph vertex %d, generation %d)"
                    % (leaf, u, nodes[leaf].generation), leaf=leaf)
            for w in pair:
                path = canonical_geodesic(g, u, w)
                nid = len(nodes)
                nodes.append(TreeNode(nid, leaf, gen + 1, w, path))
                used.update(path)
                next_leaves.append(nid)
        leaves = next_leaves

    emb = EmbeddedTree(scale=r, depth=depth, nodes=nodes, alpha=1.0,
                       alpha_pairs_sampled=0, incomplete=incomplete)
    emb.alpha, emb.alpha_pairs_sampled = _measure_alpha(g, emb, alpha_pair_budget)
    return emb


def _growth_ratio(g):
    safe = g.safe_radius(g.origin)
    k = min(safe, 6)
    if k < 3:
        return None
    d = bfs_distances(g, [g.origin])
    sizes = [int(np.sum((d >= 0) & (d <= i))) for i in range(k + 1)]
    return sizes[k] / max(sizes[k - 2], 1)


def _best_child_pair(g, u, cands, r, du, dmax):
    """Admissible pair search, widening the distance band from [r, r]
    outward so children sit as close to scale r as the graph allows (this
    keeps the embedding isometric on trees); within a band, maximal mutual
    separation wins, lowest ids break ties."""
    # distances from each candidate, computed lazily and radius-limited
    cache = {}

    def dmap(w):
        if w not in cache:
            cache[w] = bfs_limited(g, [w], 4 * r + 4)
        return cache[w]

    for band in range(r, dmax + 1):
        best = None
        best_sep = -1
        inband = [v for v in cands if du[v] <= band]
        for i, w in enumerate(inband):
            dw = dmap(w)
            for z in inband[i + 1:]:
                sep = dw.get(z)
                if sep is None or sep < r:
                    continue
                if du[w] + du[z] - sep > r - 1:
                    continue  # the pair fails to diverge at u
                if sep > best_sep:
                    best_sep = sep
                    best = (w, z)
        if best is not None:
            return best
    return None


def _measure_alpha(g, emb, pair_budget):
    n = len(emb.nodes)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if len(pairs) > pair_budget:
        idx = np.linspace(0, len(pairs) - 1, pair_budget).astype(int)
        pairs = [pairs[i] for i in idx]
    alpha = 1.0
    by_src = {}
    for i, j in pairs:
        by_src.setdefault(emb.nodes[i].graph_vertex, []).append((i, j))
    for src, pl in by_src.items():
        d = bfs_distances(g, [src])
        for i, j in pl:
            dg = int(d[emb.nodes[j].graph_vertex])
            dt = emb.tree_distance(i, j)
            if dt == 0 or dg <= 0:
                continue
            alpha = max(alpha, dg / (emb.scale * dt), emb.scale * dt / dg)
    return float(alpha), len(pairs)


def measure_path_deviation(g, emb, pair_budget=60):
    """Max deviation between concatenated tree-edge paths and true
    geodesics, over sampled tree-vertex pairs: for each pair, the largest
    distance from a concatenated-path vertex to the canonical geodesic
    between the same endpoints."""
    n = len(emb.nodes)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if len(pairs) > pair_budget:
        idx = np.linspace(0, len(pairs) - 1, pair_budget).astype(int)
        pairs = [pairs[i] for i in idx]
    worst = 0
    for i, j in pairs:
        path = _tree_path_in_graph(emb, i, j)
        geo = set(canonical_geodesic(g, path[0], path[-1]))
        dgeo = bfs_distances(g, geo)
        worst = max(worst, max(int(dgeo[v]) for v in path))
    return worst


def _tree_path_in_graph(emb, i, j):
    up_i, up_j = [i], [j]
    a, b = i, j
    while emb.nodes[a].generation > emb.nodes[b].generation:
        a = emb.nodes[a].parent
        up_i.append(a)
    while emb.nodes[b].generation > emb.nodes[a].generation:
        b = emb.nodes[b].parent
        up_j.append(b)
    while a != b:
        a = emb.nodes[a].parent
        b = emb.nodes[b].parent
        up_i.append(a)
        up_j.append(b)
    verts = []
    for t in up_i[:-1]:
        verts.extend(reversed(emb.nodes[t].path_from_parent))
    verts.append(emb.nodes[a].graph_vertex)
    tail = []
    for t in up_j[:-1]:
        tail.extend(reversed(emb.nodes[t].path_from_parent))
    verts.extend(reversed(tail))
    # drop consecutive duplicates from path joints
    out = [verts[0]]
    for v in verts[1:]:
        if v != out[-1]:
            out.append(v)
    return out


# ---------------------------------------------------------------------------
# far points and escape rays
# ---------------------------------------------------------------------------

def far_point(g, occupied, s, delta):
    """A point s away from the farthest occupied-boundary vertex that makes
    near-maximal radial progress.

    With x the occupied-boundary vertex maximizing d(o, .), returns the
    vertex y on the sphere of radius s around x maximizing d(o, y), and
    asserts d(o,y) >= d(o,x) + s - 16*delta (failure signals a delta
    underestimate or truncation).
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    occ = set(int(v) for v in occupied)
    if g.origin not in occ:
        raise ValueError("occupied must contain the origin")
    from .graphs import internal_boundary
    dist_o = bfs_distances(g, [g.origin])
    boundary = internal_boundary(g, occ) or occ
    x = min(boundary, key=lambda v: (-int(dist_o[v]), v))
    if g.safe_radius(x) < s:
        raise RangeError("sphere of radius %d around %d leaves the truncation"
                         % (s, x))
    y = _far_from(g, x, s, dist_o)
    slack = int(math.ceil(16 * delta))
    if dist_o[y] < dist_o[x] + s - slack:
        raise GeometryError(
            "far point made only %d radial progress, expected >= %d - %d; "
            "delta=%g is an underestimate or the graph is too truncated"
            % (int(dist_o[y] - dist_o[x]), s, slack, delta))
    return int(y)


def _far_from(g, x, s, dist_o):
    sphere = [v for v, d in bfs_limited(g, [x], s).items() if d == s]
    if not sphere:
        raise RangeError("empty sphere of radius %d around %d" % (s, x))
    return min(sphere, key=lambda v: (-int(dist_o[v]), v))


@dataclass
class EscapeRay:
    base: int                    # x_t: farthest occupied-boundary vertex
    waypoints: list              # w^(1..steps)
    schedule: list               # per-step sphere radii S_k
    ray: list                    # concatenated geodesic vertex sequence
    delta: float
    steps_completed: int
    truncated: bool

    def to_json(self):
        return {"schema": 1, "base": self.base, "waypoints": self.waypoints,
                "schedule": self.schedule, "ray": self.ray,
                "delta": self.delta, "steps_completed": self.steps_completed,
                "truncated": self.truncated}


def build_escape_ray(g, occupied, R1, steps, delta):
    """Iterated far-point ray fleeing the occupied region.

    Step k jumps S_k = R1^(2k) + R1^(2k-1) + ceil(16*delta) hops from the
    previous waypoint, always to the radially deepest sphere vertex.  The
    resulting waypoint distances satisfy sum_{j<=2k} R1^j <= d(occupied,
    w^(k)) <= sum R1^j + k*(16*delta + 1) (validated; tight on trees).
    Truncation yields a partial ray with an explicit step count.
    """
    if R1 < 2:
        raise ValueError("R1 must be >= 2")
    occ = set(int(v) for v in occupied)
    if g.origin not in occ:
        raise ValueError("occupied must contain the origin")
    from .graphs import internal_boundary
    dist_o = bfs_distances(g, [g.origin])
    boundary = internal_boundary(g, occ) or occ
    base = min(boundary, key=lambda v: (-int(dist_o[v]), v))
    slack = int(math.ceil(16 * delta))

    waypoints = []
    schedule = []
    truncated = False
    cur = base
    for k in range(1, steps + 1):
        S_k = R1 ** (2 * k) + R1 ** (2 * k - 1) + slack
        if g.safe_radius(cur) < S_k:
            truncated = True
            break
        try:
            w = _far_from(g, cur, S_k, dist_o)
        except RangeError:
            truncated = True
            break
        waypoints.append(int(w))
        schedule.append(S_k)
        cur = w

    dist_occ = bfs_distances(g, occ)
    for i, w in enumerate(waypoints, start=1):
        lower = sum(R1 ** j for j in range(1, 2 * i + 1))
        upper = lower + i * (slack + 1)
        d = int(dist_occ[w])
        if not lower <= d <= upper:
            raise GeometryError(
                "waypoint %d at distance %d outside the expected window "
                "[%d, %d] (delta=%g)" % (i, d, lower, upper, delta))

    ray = canonical_geodesic(g, g.origin, base) if base != g.origin else [g.origin]
    prev = base
    for w in waypoints:
        ray.extend(canonical_geodesic(g, prev, w)[1:])
        prev = w
    return EscapeRay(base=int(base), waypoints=waypoints, schedule=schedule,
                     ray=ray, delta=float(delta),
                     steps_completed=len(waypoints), truncated=truncated)
