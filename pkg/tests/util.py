"""Shared test helpers and independent oracles."""

import heapq

import numpy as np

from fpphe.graphs import Graph


def random_connected_graph(rng, n, extra_edge_prob=0.3):
    """Random connected graph: random spanning tree + extra edges."""
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        u = order[i]
        v = order[rng.integers(i)]
        edges.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_edge_prob / n * 4:
                edges.add((u, v))
    return Graph.from_edges(n, sorted(edges), family="random", origin=0)


def dijkstra_times(g, sources, weight_fn):
    """Plain heapq Dijkstra with a closed set; weight_fn(u, v) -> float."""
    dist = {int(s): 0.0 for s in sources}
    heap = [(0.0, int(s)) for s in sources]
    heapq.heapify(heap)
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v in g.adjacency[u]:
            v = int(v)
            nd = d + weight_fn(u, v)
            if v not in done and nd < dist.get(v, np.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def unit_dijkstra_distances(g, source):
    dist = dijkstra_times(g, [source], lambda u, v: 1.0)
    out = np.full(g.vertex_count, -1, dtype=np.int64)
    for v, d in dist.items():
        out[v] = int(round(d))
    return out


def free_product_sphere_sizes(factor_sizes, radius):
    """Number of elements of each syllable length, by direct DP.

    An element of syllable length k corresponds to an alternating sequence
    of (factor, non-identity power) syllables; with all non-identity powers
    as generators, word length equals syllable count.
    """
    m = [s - 1 for s in factor_sizes]  # non-identity choices per factor
    # counts[i] = number of length-k words ending in factor i
    counts = {i: c for i, c in enumerate(m)}
    sizes = [1]
    for _ in range(radius):
        sizes.append(sum(counts.values()))
        counts = {i: m[i] * sum(c for j, c in counts.items() if j != i)
                  for i in range(len(m))}
    return sizes


# ---------------------------------------------------------------------------
# high-precision reflection-group oracle for {p, q} tessellation layer counts
# ---------------------------------------------------------------------------

def tessellation_layer_counts_oracle(p, q, layers):
    """Layer sizes of the {p,q} tessellation ball, by an independent route.

    Generates the orbit of the base vertex under the three reflections
    bounding a fundamental triangle (vertex / edge-midpoint / face-center),
    using 50-digit mpmath arithmetic and a dedupe tolerance of 1e-30, then
    builds adjacency by matching the exact hyperbolic edge length and takes
    BFS layer counts from the base vertex.
    """
    import mpmath as mp

    with mp.workdps(50):
        ell_half = mp.acosh(mp.cos(mp.pi / p) / mp.sin(mp.pi / q))
        ell = 2 * ell_half
        w_mid = mp.tanh(ell_half / 2)

        # mirror 1: real axis; mirror 2: line at angle pi/q through origin
        rot2 = mp.exp(2j * mp.pi / q)
        # mirror 3: perpendicular bisector of the edge from 0 to tanh(ell/2);
        # a circle orthogonal to the unit circle crossing the real axis at w_mid
        c3 = (w_mid + 1 / w_mid) / 2
        rho3_sq = ((1 / w_mid - w_mid) / 2) ** 2

        def refl1(z):
            return mp.conj(z)

        def refl2(z):
            return rot2 * mp.conj(z)

        def refl3(z):
            return c3 + rho3_sq / mp.conj(z - c3)

        def hyp_dist(z, w):
            return 2 * mp.atanh(abs(z - w) / abs(1 - mp.conj(z) * w))

        cap = mp.tanh((layers + 2) * ell / 2)  # euclidean radius cap
        tol = mp.mpf(10) ** -30
        cell = mp.mpf(10) ** -18

        points = [mp.mpc(0)]
        grid = {}

        def key(z):
            return (int(mp.floor(z.real / cell)), int(mp.floor(z.imag / cell)))

        def find(z):
            kx, ky = key(z)
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for idx in grid.get((kx + dx, ky + dy), ()):
                        if abs(points[idx] - z) < tol:
                            return idx
            return None

        grid.setdefault(key(points[0]), []).append(0)
        frontier = [0]
        while frontier:
            new = []
            for idx in frontier:
                z = points[idx]
                for refl in (refl1, refl2, refl3):
                    w = refl(z)
                    if abs(w) > cap:
                        continue
                    if find(w) is None:
                        points.append(w)
                        j = len(points) - 1
                        grid.setdefault(key(w), []).append(j)
                        new.append(j)
            frontier = new

        n = len(points)
        # float prefilter for candidate edges, mpmath confirmation after
        zf = np.array([complex(z) for z in points])
        du = np.abs(zf[:, None] - zf[None, :])
        dv = np.abs(1 - np.conj(zf)[:, None] * zf[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            hd = 2 * np.arctanh(np.clip(du / dv, 0, 1 - 1e-15))
        cand_i, cand_j = np.nonzero(np.abs(hd - float(ell)) < 1e-6)
        adj = [[] for _ in range(n)]
        for i, j in zip(cand_i, cand_j):
            i, j = int(i), int(j)
            if i < j and abs(hyp_dist(points[i], points[j]) - ell) < tol:
                adj[i].append(j)
                adj[j].append(i)

        dist = [-1] * n
        dist[0] = 0
        queue = [0]
        while queue:
            nxt = []
            for u in queue:
                for v in adj[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            queue = nxt
        return [sum(1 for d in dist if d == k) for k in range(layers + 1)]


def literal_cylinder_check(g, a, b, j, seed_set, pt, params):
    """Definition-literal good-cylinder oracle: explicit loops over every
    (center, time) pair, every vertex, and every self-avoiding path.
    Returns (sandwich_ok, path_ok, seed_free_ok)."""
    import math

    n = g.vertex_count
    r = params.scale
    rmin = min(1.0, params.rate)
    rmax = max(1.0, params.rate)
    da = unit_dijkstra_distances(g, a)
    db = unit_dijkstra_distances(g, b)
    d_ab = int(da[b])
    width = int(math.floor(params.width * j * r))
    cyl = set()
    for w in range(n):
        if da[w] >= 0 and db[w] >= 0 and da[w] + db[w] == d_ab:
            dw = unit_dijkstra_distances(g, w)
            cyl.update(v for v in range(n) if 0 <= dw[v] <= width)
    t_lo = max(1, int(math.ceil(math.sqrt(params.width) * j * r)))
    t_hi = int(math.floor(4 * (params.outer_speed / params.inner_speed ** 2)
                          * j * r))
    p_lo = max(1, int(math.ceil(math.sqrt(params.width) * params.outer_speed
                                * j * r)))
    p_hi = int(math.floor(4 * (params.outer_speed ** 2
                               / params.inner_speed ** 2) * j * r))

    sandwich_ok = True
    for w in sorted(cyl):
        tau = dijkstra_times(g, [w], lambda u, v: pt.edge_time(u, v))
        dw = unit_dijkstra_distances(g, w)
        for t in range(t_lo, t_hi + 1):
            for v in range(n):
                if dw[v] >= 0 and dw[v] <= rmin * params.inner_speed * t \
                        and tau.get(v, math.inf) > rmin * t:
                    sandwich_ok = False
                if tau.get(v, math.inf) <= rmax * t and \
                        (dw[v] < 0 or dw[v] > rmax * params.outer_speed * t):
                    sandwich_ok = False

    path_ok = True

    def walk(u, seen, length, tsum):
        nonlocal path_ok
        if p_lo <= length <= p_hi and tsum < length / params.outer_speed:
            path_ok = False
        if length >= p_hi:
            return
        for v in g.adjacency[u]:
            v = int(v)
            if v not in seen:
                walk(v, seen | {v}, length + 1, tsum + pt.edge_time(u, v))

    for w in sorted(cyl):
        walk(w, {w}, 0, 0.0)

    seed_free_ok = None
    if j == 1:
        wide = int(math.ceil((params.width + params.seed_free_factor) * r))
        wide_cyl = set()
        for w in range(n):
            if da[w] >= 0 and db[w] >= 0 and da[w] + db[w] == d_ab:
                dw = unit_dijkstra_distances(g, w)
                wide_cyl.update(v for v in range(n) if 0 <= dw[v] <= wide)
        seed_free_ok = not (wide_cyl & set(seed_set))
    return sandwich_ok, path_ok, seed_free_ok


def enumerate_tree_frontiers(max_size):
    """All frontier antichains of the infinite binary tree (as sets of
    binary strings) with at most max_size elements, by direct recursion:
    a frontier is either {node} or a frontier of each child, unioned."""
    def frontiers(prefix, budget):
        out = [frozenset([prefix])]
        if budget >= 2:
            for left in frontiers(prefix + "0", budget - 1):
                for right in frontiers(prefix + "1", budget - len(left)):
                    out.append(left | right)
        return out
    return frontiers("", max_size)
