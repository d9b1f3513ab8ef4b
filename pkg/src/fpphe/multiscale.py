"""Multi-scale good-cylinder machinery, tree pruning with Catalan cutset
accounting, and the ball-chain planner/checker along an escape ray.

A cylinder at scale j (tree endpoints j apart) is *good* when the one-type
growth inside it is typical: occupied sets are sandwiched between balls at
the configured inner/outer speeds over a whole window of times, and every
moderately long self-avoiding path is at least as slow as its length
divided by the outer speed.  Scale 1 additionally requires a widened
cylinder to be seed-free.  Bad cylinders poison whole subtrees of the
embedded tree; survival of a root-to-depth path after pruning is the
object of interest.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .engine import PassageTimeField, run_single_fpp
from .graphs import FrontierError, ParameterError, bfs_distances, bfs_limited


# ---------------------------------------------------------------------------
# derived scale parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaleParams:
    scale: int            # r: tree edge length
    width: float          # cylinder-width factor per scale unit
    inner_speed: float    # lower growth speed, in (0,1)
    outer_speed: float    # upper growth speed, > 1
    rate: float           # competing-process rate
    distortion: float     # measured tree-embedding bilipschitz constant
    seed_free_factor: float   # widening factor for the scale-1 seed-free check
    prune_factor: int         # generations climbed per unit scale when pruning
    speed_ok: bool        # outer_speed dominates distortion * max{rate, 1/rate}
    width_ok: bool        # width below its strict-mode admissibility bound


def derive_scale_params(r, width, inner_speed, outer_speed, rate, distortion):
    """Closed-form derived constants for the multi-scale analysis, plus
    strict-mode flags for the admissibility constraints (violations are
    flags, never errors)."""
    if r <= 0 or inner_speed <= 0 or outer_speed <= 0 or rate <= 0 \
            or distortion < 1 or width < 0:
        raise ValueError("all parameters must be positive, distortion >= 1")
    if not inner_speed < 1 < outer_speed:
        raise ValueError("need inner_speed < 1 < outer_speed")
    rmax = max(rate, 1.0 / rate)
    seed_free_factor = ((6 + width) * (1 + distortion) * distortion ** 2
                        * (outer_speed / inner_speed) * rmax)
    prune_factor = math.ceil(width + 4 * max(1.0, rate)
                             * outer_speed ** 2 / inner_speed ** 2 + 1)
    speed_ok = outer_speed > distortion * rmax
    width_bound = min(1.0 / distortion,
                      (2 * distortion * outer_speed * max(1.0, rate)) ** -2)
    width_ok = width < width_bound
    return ScaleParams(scale=int(r), width=float(width),
                       inner_speed=float(inner_speed),
                       outer_speed=float(outer_speed), rate=float(rate),
                       distortion=float(distortion),
                       seed_free_factor=float(seed_free_factor),
                       prune_factor=int(prune_factor),
                       speed_ok=bool(speed_ok), width_ok=bool(width_ok))


# ---------------------------------------------------------------------------
# good-cylinder verdicts
# ---------------------------------------------------------------------------

@dataclass
class CheckBudgets:
    sandwich_budget: int = 10_000   # max |cylinder| x |t-window| pairs
    path_budget: int = 10_000       # max enumerated self-avoiding paths
    sample_centers: int = 40        # sampled centers when over budget
    sample_paths: int = 200         # sampled walks per center when over budget
    rng_seed: int = 0


@dataclass
class CylinderVerdict:
    x: int                    # tree vertex ids
    y: int
    scale_j: int
    sandwich_ok: bool
    path_time_ok: bool
    seed_free_ok: bool        # None above scale 1
    good: bool
    mode: str                 # "exhaustive" or "sampled"
    coverage: dict
    diagnostics: dict


def _t_window(params, j):
    lo = int(math.ceil(math.sqrt(params.width) * j * params.scale))
    hi = int(math.floor(4 * (params.outer_speed / params.inner_speed ** 2)
                        * j * params.scale))
    return max(lo, 1), hi


def _path_window(params, j):
    lo = int(math.ceil(math.sqrt(params.width) * params.outer_speed
                       * j * params.scale))
    hi = int(math.floor(4 * (params.outer_speed ** 2 / params.inner_speed ** 2)
                        * j * params.scale))
    return max(lo, 1), hi


def cylinder_members(g, a, b, width):
    """Union of radius-`width` balls over all a-b geodesic vertices."""
    da = bfs_distances(g, [a])
    db = bfs_distances(g, [b])
    d = int(da[b])
    on_geo = np.nonzero((da >= 0) & (db >= 0) & (da + db == d))[0]
    members = set()
    for w in on_geo:
        members.update(bfs_limited(g, [int(w)], width))
    return members


def check_good_cylinder(g, emb, seeds, pt, x, y, params, budgets=None):
    """Goodness verdict for the cylinder between tree vertices x and y.

    Sandwich condition: for every integer t in the scale window and every
    cylinder vertex w, the rate-1 occupied sets at times min{1,rate}*t and
    max{1,rate}*t are squeezed between balls at the inner/outer speeds.
    Path condition: every self-avoiding path from a cylinder vertex with
    length in the path window has base passage time >= length/outer_speed.
    Scale 1 additionally requires the widened cylinder to be seed-free.
    Quantifiers are exhausted below the budgets, sampled (with recorded
    coverage) above them.
    """
    budgets = budgets or CheckBudgets()
    j = emb.tree_distance(x, y)
    if j < 1:
        raise ValueError("tree endpoints must be distinct")
    a = emb.nodes[x].graph_vertex
    b = emb.nodes[y].graph_vertex
    width = int(math.floor(params.width * j * params.scale))
    cyl = sorted(cylinder_members(g, a, b, width))
    t_lo, t_hi = _t_window(params, j)
    p_lo, p_hi = _path_window(params, j)
    rmin = min(1.0, params.rate)
    rmax = max(1.0, params.rate)

    # truncation guard: the largest ball the check touches must fit
    reach = int(math.ceil(rmax * params.outer_speed * t_hi))
    fd = g.frontier_distance()
    if g.frontier and any(fd[w] <= reach for w in cyl):
        raise FrontierError("cylinder check would touch the truncation "
                            "frontier (needs reach %d)" % reach)

    n_pairs = len(cyl) * max(0, t_hi - t_lo + 1)
    exhaustive_sandwich = n_pairs <= budgets.sandwich_budget
    rng = np.random.default_rng(budgets.rng_seed)
    if exhaustive_sandwich:
        centers = cyl
    else:
        idx = rng.choice(len(cyl), size=min(budgets.sample_centers, len(cyl)),
                         replace=False)
        centers = sorted(cyl[i] for i in idx)

    sandwich_ok = True
    diag = {}
    for w in centers:
        base = run_single_fpp(g, [w], 1.0, 0, pt_field=pt)
        dw = bfs_distances(g, [w])
        ok, bad_t, bad_v = _sandwich_violation(base, dw, t_lo, t_hi, params,
                                               rmin, rmax)
        if not ok:
            sandwich_ok = False
            diag["sandwich_violation"] = {"center": int(w), "t": bad_t,
                                          "vertex": bad_v}
            break

    path_ok, path_mode, path_cov, path_diag = _check_paths(
        g, pt, centers, p_lo, p_hi, params.outer_speed, budgets, rng)
    if path_diag:
        diag["path_violation"] = path_diag

    seed_free_ok = None
    if j == 1:
        wide = int(math.ceil((params.width + params.seed_free_factor)
                             * params.scale))
        wide_cyl = cylinder_members(g, a, b, wide)
        planted = sorted(wide_cyl & set(seeds.seed_set()))
        seed_free_ok = not planted
        if planted:
            diag["seeds_in_widened_cylinder"] = planted

    good = sandwich_ok and path_ok and (seed_free_ok is not False)
    mode = "exhaustive" if (exhaustive_sandwich and path_mode == "exhaustive") \
        else "sampled"
    coverage = {"cylinder_size": len(cyl), "centers_checked": len(centers),
                "t_window": [t_lo, t_hi], "path_window": [p_lo, p_hi],
                "sandwich_mode": "exhaustive" if exhaustive_sandwich else "sampled",
                "path_mode": path_mode, **path_cov}
    return CylinderVerdict(x=int(x), y=int(y), scale_j=int(j),
                           sandwich_ok=sandwich_ok, path_time_ok=path_ok,
                           seed_free_ok=seed_free_ok, good=good, mode=mode,
                           coverage=coverage, diagnostics=diag)


def _sandwich_violation(base, dw, t_lo, t_hi, params, rmin, rmax):
    """Vectorized search for an integer t in [t_lo, t_hi] violating the
    ball sandwich at some vertex; per-vertex violating-t intervals instead
    of a loop over t."""
    finite = np.isfinite(base)
    d = dw.astype(float)
    # inner violation at v for t in [d/(rmin*c_in), tau/rmin)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo_in = d / (rmin * params.inner_speed)
        hi_in = np.where(finite, base / rmin, np.inf)
        t = np.maximum(np.ceil(lo_in), t_lo)
        viol_in = (dw >= 0) & (t <= t_hi) & (t < hi_in)
        # outer violation at v for t in [tau/rmax, d/(rmax*c_out))
        lo_out = np.where(finite, base / rmax, np.inf)
        hi_out = np.where(dw >= 0, d / (rmax * params.outer_speed), np.inf)
        t2 = np.maximum(np.ceil(lo_out), t_lo)
        viol_out = finite & (t2 <= t_hi) & (t2 < hi_out)
    if np.any(viol_in):
        v = int(np.nonzero(viol_in)[0][0])
        return False, int(t[v]), v
    if np.any(viol_out):
        v = int(np.nonzero(viol_out)[0][0])
        return False, int(t2[v]), v
    return True, None, None


def _check_paths(g, pt, centers, p_lo, p_hi, outer_speed, budgets, rng):
    """Path-time condition over self-avoiding paths started at the centers.

    Tries exact enumeration under the budget (counting first); otherwise
    samples uniformly random self-avoiding walks and checks every prefix
    with length in the window."""
    edge_times = pt.values()
    eindex = g.edge_index()

    total = 0
    for w in centers:
        c = _count_paths(g, w, p_hi, budgets.path_budget - total + 1)
        total += c
        if total > budgets.path_budget:
            break
    if total <= budgets.path_budget:
        for w in centers:
            bad = _enumerate_and_check(g, w, p_lo, p_hi, outer_speed,
                                       edge_times, eindex)
            if bad is not None:
                return False, "exhaustive", {"paths_total": total}, bad
        return True, "exhaustive", {"paths_total": total}, None

    checked = 0
    for w in centers:
        for _ in range(budgets.sample_paths):
            path = [int(w)]
            seen = {int(w)}
            tsum = 0.0
            while len(path) - 1 < p_hi:
                u = path[-1]
                nxt = [int(v) for v in g.adjacency[u] if int(v) not in seen]
                if not nxt:
                    break
                v = nxt[int(rng.integers(len(nxt)))]
                tsum += edge_times[eindex[(u, v) if u < v else (v, u)]]
                path.append(v)
                seen.add(v)
                plen = len(path) - 1
                if p_lo <= plen <= p_hi and tsum < plen / outer_speed:
                    return False, "sampled", {"paths_sampled": checked + 1}, \
                        {"center": int(w), "path_len": plen, "time": tsum}
            checked += 1
    return True, "sampled", {"paths_sampled": checked}, None


def _count_paths(g, w, max_len, cap):
    count = 0
    stack = [(int(w), frozenset([int(w)]), 0)]
    while stack and count <= cap:
        u, seen, length = stack.pop()
        if length >= 1:
            count += 1
        if length == max_len:
            continue
        for v in g.adjacency[u]:
            v = int(v)
            if v not in seen:
                stack.append((v, seen | {v}, length + 1))
    return count


def _enumerate_and_check(g, w, p_lo, p_hi, outer_speed, edge_times, eindex):
    stack = [(int(w), {int(w)}, 0, 0.0)]
    while stack:
        u, seen, length, tsum = stack.pop()
        if p_lo <= length <= p_hi and tsum < length / outer_speed:
            return {"center": int(w), "path_len": length, "time": tsum}
        if length == p_hi:
            continue
        for v in g.adjacency[u]:
            v = int(v)
            if v not in seen:
                e = eindex[(u, v) if u < v else (v, u)]
                stack.append((v, seen | {v}, length + 1,
                              tsum + edge_times[e]))
    return None


# ---------------------------------------------------------------------------
# pruning and good paths
# ---------------------------------------------------------------------------

def prune_bad_subtrees(emb, bad, params):
    """Remove, for each bad cylinder record (x, y, j), the subtree rooted
    at the ancestor of the shallower endpoint `prune climb` generations up
    (climb = ceil(3 * distortion^2 * prune_factor * j), clamped at the
    root, whose removal removes everything).  Returns the removed set."""
    removed = set()
    children = _children_map(emb)
    for x, y, j in bad:
        if emb.nodes[x].generation > emb.nodes[y].generation:
            x, y = y, x
        climb = math.ceil(3 * params.distortion ** 2 * params.prune_factor * j)
        gen = emb.nodes[x].generation
        target_gen = max(0, gen - climb)
        u = x
        while emb.nodes[u].generation > target_gen:
            u = emb.nodes[u].parent
        stack = [u]
        while stack:
            v = stack.pop()
            if v in removed:
                continue
            removed.add(v)
            stack.extend(children.get(v, ()))
    return removed


def _children_map(emb):
    children = {}
    for n in emb.nodes:
        if n.parent >= 0:
            children.setdefault(n.parent, []).append(n.tree_id)
    return children


@dataclass
class GoodPathResult:
    path: list          # tree ids root..depth, or None
    cutset: list        # minimal antichain of removed vertices, or None
    depth: int
    removed: frozenset


def find_good_path(emb, removed, depth):
    """Leftmost root-to-generation-`depth` tree path avoiding `removed`;
    if none exists, the minimal antichain of removed vertices cutting the
    root from generation `depth` (the shallowest removed vertex on each
    blocked path, deduplicated)."""
    removed = frozenset(removed)
    children = _children_map(emb)

    if 0 not in removed:
        stack = [[0]]
        while stack:
            path = stack.pop()
            u = path[-1]
            if emb.nodes[u].generation == depth:
                return GoodPathResult(path=path, cutset=None, depth=depth,
                                      removed=removed)
            for c in sorted(children.get(u, ()), reverse=True):
                if c not in removed:
                    stack.append(path + [c])

    cutset = set()
    stack = [0]
    while stack:
        u = stack.pop()
        if u in removed:
            cutset.add(u)
            continue
        for c in sorted(children.get(u, ())):
            if emb.nodes[c].generation <= depth:
                stack.append(c)
    return GoodPathResult(path=None, cutset=sorted(cutset), depth=depth,
                          removed=removed)


def count_minimal_cutsets(k):
    """Number of inclusion-minimal antichains with k elements cutting the
    root of the infinite binary tree from infinity: the (k-1)-st Catalan
    number.  Exact integers; k <= 30."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    if k > 30:
        raise ParameterError("k > 30 not supported")
    c = math.comb(2 * (k - 1), k - 1) // k
    if k >= 2:
        assert c < 4 ** (k - 1)
    return c


# ---------------------------------------------------------------------------
# ball chains
# ---------------------------------------------------------------------------

@dataclass
class BallChainPlan:
    graph: object
    R1: int
    base: int                # ray base: the occupied-boundary start vertex
    ray_vertices: list       # base-to-last-waypoint vertex chain
    waypoints: list          # w^(1..K)
    radii: list              # R_k per waypoint
    time_budgets: list       # per-step time budgets
    outer_speed: float
    balls: list              # materialized vertex sets, or None
    targets: list            # P^(k) for k = 1..K-1, or None
    enlargements: list       # EP^(k) in the ball-deleted graph, or None
    boundaries: list         # inner boundary of EP^(k) in the deleted graph
    measured_detours: list   # deleted-graph distance from occupied to EP^(k)
    truncated_at: int        # K actually materialized (== K when complete)
    materialized: bool

    def to_json(self):
        return {
            "schema": 1, "R1": self.R1, "base": self.base,
            "ray_vertices": self.ray_vertices, "waypoints": self.waypoints,
            "radii": self.radii, "time_budgets": self.time_budgets,
            "outer_speed": self.outer_speed,
            "balls": None if not self.materialized else
                [sorted(b) for b in self.balls],
            "targets": None if not self.materialized else
                [sorted(p) for p in self.targets],
            "enlargements": None if not self.materialized else
                [sorted(e) for e in self.enlargements],
            "truncated_at": self.truncated_at,
            "materialized": self.materialized,
        }


def chain_radius(R1, k):
    """R_1 is the base radius itself; higher steps square up geometrically."""
    return R1 if k == 1 else R1 ** (2 * (k - 1))


def chain_time_budget(R1, j):
    return R1 ** (2 * j + 4)


def plan_ball_chain(g, ray, R1, K, outer_speed, occupied=None,
                    materialize=True):
    """Plan of balls B^(k) along the escape ray with targets P^(k) and
    enlargements EP^(k).

    Radii and time budgets follow the closed forms exactly.  Target
    P^(k) = B^(k+1) plus the ray segment from w^(k) to w^(k+1) outside
    B^(k); its enlargement is the ball-deleted-graph neighborhood of
    radius outer_speed * sum of budgets, with boundaries taken in the
    deleted graph.  With materialize=False only the closed-form schedule
    is produced (usable at sizes where the sets would not fit).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(ray.waypoints) < K:
        raise ValueError("ray has %d waypoints, need %d"
                         % (len(ray.waypoints), K))
    waypoints = [int(w) for w in ray.waypoints[:K]]
    radii = [chain_radius(R1, k) for k in range(1, K + 1)]
    budgets = [chain_time_budget(R1, j) for j in range(1, max(K, 2))]

    last = waypoints[-1]
    chain_end = ray.ray.index(last) if last in ray.ray else len(ray.ray) - 1
    base_idx = ray.ray.index(ray.base) if ray.base in ray.ray else 0
    plan = BallChainPlan(graph=g, R1=int(R1), base=int(ray.base),
                         ray_vertices=[int(v) for v in
                                       ray.ray[base_idx:chain_end + 1]],
                         waypoints=waypoints,
                         radii=radii, time_budgets=budgets,
                         outer_speed=float(outer_speed), balls=None,
                         targets=None, enlargements=None, boundaries=None,
                         measured_detours=None, truncated_at=K,
                         materialized=False)
    if not materialize:
        return plan

    balls = [set(bfs_limited(g, [w], r)) for w, r in zip(waypoints, radii)]
    ray_pos = {v: i for i, v in enumerate(ray.ray)}
    targets = []
    enlargements = []
    boundaries = []
    detours = []
    truncated_at = K
    occ = set(int(v) for v in occupied) if occupied is not None else None
    for k in range(1, K):
        seg = _ray_segment(ray, waypoints[k - 1], waypoints[k])
        P = balls[k] | (set(seg) - balls[k - 1])
        radius = int(math.ceil(outer_speed * sum(budgets[:k])))
        deleted = balls[k - 1]
        dmap = _deleted_bfs(g, P - deleted, deleted, radius)
        EP = set(dmap)
        if g.frontier and EP & g.frontier:
            truncated_at = k
            break
        boundary = {v for v in EP
                    if any(int(u) not in EP and int(u) not in deleted
                           for u in g.adjacency[v])}
        targets.append(P)
        enlargements.append(EP)
        boundaries.append(boundary)
        if occ is not None:
            occ_out = occ - deleted
            dto = _deleted_bfs(g, occ_out, deleted, g.vertex_count)
            sep = min((d for v, d in dto.items() if v in EP),
                      default=math.inf)
            if sep == 0:
                raise ValueError("occupied set already intersects the "
                                 "enlargement at step %d" % k)
            detours.append(sep)
    plan.balls = balls
    plan.targets = targets
    plan.enlargements = enlargements
    plan.boundaries = boundaries
    plan.measured_detours = detours if occ is not None else None
    plan.truncated_at = truncated_at
    plan.materialized = True
    return plan


def _ray_segment(ray, a, b):
    ia = ray.ray.index(a)
    ib = ray.ray.index(b)
    if ia > ib:
        ia, ib = ib, ia
    return ray.ray[ia:ib + 1]


def _deleted_bfs(g, sources, deleted, radius):
    """Hop distances in the graph with `deleted` removed, out to radius."""
    dist = {}
    queue = []
    for s in sorted(set(int(v) for v in sources)):
        if s not in deleted:
            dist[s] = 0
            queue.append(s)
    while queue:
        nxt = []
        for u in queue:
            if dist[u] >= radius:
                continue
            for v in g.adjacency[u]:
                v = int(v)
                if v not in dist and v not in deleted:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        queue = nxt
    return dist


# ---------------------------------------------------------------------------
# ball-chain event checker
# ---------------------------------------------------------------------------

def check_ball_chain_events(trace, plan, lam, pt_field=None):
    """Per-step crossing/containment events on the realized field.

    Step k >= 2 holds when (fast-crossing) the fixed-ray passage sums from
    the previous waypoint region into ball k fit inside the time budget,
    and (containment) the ball-avoiding passage time from the target to
    the boundary of its enlargement exceeds the cumulative budgets.
    Returns per-k records, the first failing k, and the conjunction.
    """
    g = plan.graph
    if not plan.materialized:
        raise ValueError("plan must be materialized to check events")
    if list(map(str, trace.graph.key())) != list(map(str, g.key())):
        raise ValueError("trace and plan use different graphs")
    pt = pt_field if pt_field is not None else PassageTimeField(g, trace.pt_seed)
    if pt.graph is not g and list(map(str, pt.graph.key())) != \
            list(map(str, g.key())):
        raise ValueError("passage-time field belongs to a different graph")
    edge_times = pt.values()
    eindex = g.edge_index()

    ray = plan.ray_vertices
    K = len(plan.waypoints)
    lam = float(lam)
    inv = 1.0 / lam
    records = []
    first_fail = None
    for k in range(2, plan.truncated_at + 1):
        f1 = _f1_event(g, plan, ray, k, lam, inv, edge_times, eindex)
        f2 = _f2_event(g, plan, k, edge_times, eindex)
        ok = f1 and f2
        records.append({"k": k, "fast_crossing": f1, "containment": f2,
                        "holds": ok})
        if not ok and first_fail is None:
            first_fail = k
    return {"records": records, "first_failing_k": first_fail,
            "all_hold": first_fail is None and plan.truncated_at == K}


def _ray_passage(ray, i, j, g, edge_times, eindex):
    if i > j:
        i, j = j, i
    total = 0.0
    for u, v in zip(ray[i:j], ray[i + 1:j + 1]):
        total += edge_times[eindex[(u, v) if u < v else (v, u)]]
    return total


def _last_in_ball(ray, ball):
    last = None
    for i, v in enumerate(ray):
        if v in ball:
            last = i
    return last


def _max_ball_passage(g, w, ball, edge_times, eindex):
    dist = {int(w): 0.0}
    heap = [(0.0, int(w))]
    done = set()
    while heap:
        t, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v in g.adjacency[u]:
            v = int(v)
            if v not in ball or v in done:
                continue
            e = eindex[(u, v) if u < v else (v, u)]
            nt = t + edge_times[e]
            if nt < dist.get(v, math.inf):
                dist[v] = nt
                heapq.heappush(heap, (nt, v))
    return max(dist.values())


def _f1_event(g, plan, ray, k, lam, inv, edge_times, eindex):
    budget = plan.time_budgets[k - 2]
    bar_prev = _last_in_ball(ray, plan.balls[k - 2])
    bar_k = _last_in_ball(ray, plan.balls[k - 1])
    wk_idx = ray.index(plan.waypoints[k - 1])
    total = 0.0
    if k == 2:
        # base-to-first-ball leg may be crossed by either process
        total += max(1.0, inv) * _ray_passage(ray, 0, bar_prev, g,
                                              edge_times, eindex)
        total += inv * _ray_passage(ray, bar_prev, wk_idx, g, edge_times, eindex)
        total += inv * _max_ball_passage(g, plan.waypoints[0],
                                         plan.balls[0], edge_times, eindex)
        total += inv * _max_ball_passage(g, plan.waypoints[1],
                                         plan.balls[1], edge_times, eindex)
    else:
        total += inv * _ray_passage(ray, bar_prev, bar_k, g, edge_times, eindex)
        total += inv * _max_ball_passage(g, plan.waypoints[k - 1],
                                         plan.balls[k - 1], edge_times, eindex)
    return total <= budget


def _f2_event(g, plan, k, edge_times, eindex):
    deleted = plan.balls[k - 2]
    P = plan.targets[k - 2] - deleted
    EP = plan.enlargements[k - 2]
    boundary = plan.boundaries[k - 2]
    limit = sum(plan.time_budgets[: k - 1])
    if not boundary:
        return True  # the enlargement is a whole deleted-graph component
    dist = {}
    heap = []
    for s in sorted(P):
        dist[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    done = set()
    while heap:
        t, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u in boundary:
            return t > limit
        for v in g.adjacency[u]:
            v = int(v)
            if v in deleted or v not in EP or v in done:
                continue
            e = eindex[(u, v) if u < v else (v, u)]
            nt = t + edge_times[e]
            if nt < dist.get(v, math.inf):
                dist[v] = nt
                heapq.heappush(heap, (nt, v))
    return True
