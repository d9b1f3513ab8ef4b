"""Event-driven dynamics: two-type competing first passage percolation with
a hostile environment of dormant seeds, the two-type Richardson variant,
single-type FPP, and exact passage-time tail calculators.

The process-1 cluster grows from the origin at rate 1.  Dormant seeds sit on
Bernoulli(mu) vertices; the first occupation attempt that reaches a dormant
seed fails and wakes it, after which the seed's cluster spreads with the
same edge times divided by lam.  Occupied vertices never change hands.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .graphs import FrontierError, bfs_distances

# vertex states
UNREACHED = 0
DORMANT = 1
OCC1 = 2  # occupied by the origin process (rate 1)
OCCL = 3  # occupied by a seed process (rate lam)

PROC1 = 1
PROCL = 2

TRACE_SCHEMA = 1


# ---------------------------------------------------------------------------
# counter-based randomness: pure function of (seed, index)
# ---------------------------------------------------------------------------

def _splitmix64(x):
    """Vectorized splitmix64 finalizer over uint64 arrays (wraparound is
    the point, so overflow warnings are suppressed)."""
    with np.errstate(over="ignore"):
        x = np.asarray(x, dtype=np.uint64)
        x = (x + np.uint64(0x9E3779B97F4A7C15))
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def _counter_uniform(seed, indices):
    """Uniform(0,1) values keyed by (seed, index); same key -> same value."""
    s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    h = _splitmix64(_splitmix64(np.asarray(indices, dtype=np.uint64)) ^ _splitmix64(s))
    return (h.astype(np.float64) + 0.5) / 2.0 ** 64


class PassageTimeField:
    """Mean-1 exponential edge times, a pure function of (seed, edge id).

    `override` (array or dict keyed by edge id) replaces generated values;
    used by test hooks for forced deterministic configurations.
    """

    def __init__(self, graph, seed, override=None):
        self.graph = graph
        self.seed = int(seed)
        self.override = override
        self._values = None

    def values(self):
        if self._values is None:
            n = len(self.graph.edges())
            vals = -np.log(_counter_uniform(self.seed, np.arange(n)))
            if self.override is not None:
                if isinstance(self.override, dict):
                    for eid, t in self.override.items():
                        vals[eid] = t
                else:
                    vals = np.asarray(self.override, dtype=float).copy()
                    if len(vals) != n:
                        raise ValueError("override length != edge count")
            if np.any(vals < 0):
                raise ValueError("edge times must be non-negative")
            self._values = vals
        return self._values

    def edge_time(self, u, v):
        return float(self.values()[self.graph.edge_id(u, v)])


class SeedField:
    """Bernoulli(mu) dormant-seed indicators on vertices other than the origin.

    `override` forces an exact seed set (test hook / planted configurations).
    """

    def __init__(self, graph, seed, mu, override=None):
        if not 0 <= mu < 1:
            raise ValueError("mu must be in [0,1)")
        self.graph = graph
        self.seed = int(seed)
        self.mu = float(mu)
        self.override = None if override is None else frozenset(int(v) for v in override)
        self._seeds = None

    def seed_set(self):
        if self._seeds is None:
            if self.override is not None:
                if self.graph.origin in self.override:
                    raise ValueError("the origin can never be a seed")
                self._seeds = self.override
            else:
                u = _counter_uniform(~self.seed & 0xFFFFFFFFFFFFFFFF,
                                     np.arange(self.graph.vertex_count))
                seeds = set(np.nonzero(u < self.mu)[0].tolist())
                seeds.discard(self.graph.origin)
                self._seeds = frozenset(int(v) for v in seeds)
        return self._seeds

    def is_seed(self, v):
        return v in self.seed_set()


# ---------------------------------------------------------------------------
# stop rules and traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StopRule:
    """When to stop a run: "time" horizon, occupied-vertex "count" cap, or
    "radius" R — vertices at hop distance >= R from the origin become
    absorbing (occupied but never spreading), so the queue drains and the
    trace holds complete information inside the radius-R ball."""
    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("time", "count", "radius"):
            raise ValueError("unknown stop rule kind %r" % self.kind)

    @classmethod
    def parse(cls, text):
        kind, _, value = text.partition(":")
        return cls(kind, float(value))


@dataclass
class Trace:
    graph: object
    lam: float
    mu: float
    pt_seed: int
    seed_seed: int
    stop: StopRule
    state: np.ndarray          # per-vertex UNREACHED/DORMANT/OCC1/OCCL
    time: np.ndarray           # occupation time, inf if never occupied
    pred: np.ndarray           # occupying edge: predecessor vertex, -1 if none
    activation: np.ndarray     # seed activation time, nan if not a seed/never woken
    seeds: frozenset
    frontier_touched: bool
    stop_met: str
    events: list               # ordered (time, process, vertex, source)
    kind: str = "fpphe"        # fpphe | richardson

    def occupied(self, proc=None):
        if proc == PROC1:
            return np.nonzero(self.state == OCC1)[0]
        if proc == PROCL:
            return np.nonzero(self.state == OCCL)[0]
        return np.nonzero((self.state == OCC1) | (self.state == OCCL))[0]

    def to_json(self, include_events=False):
        doc = {
            "schema": TRACE_SCHEMA,
            "kind": self.kind,
            "graph_key": list(map(str, self.graph.key())),
            "params": {"lambda": self.lam, "mu": self.mu,
                       "pt_seed": self.pt_seed, "seed_seed": self.seed_seed,
                       "stop": [self.stop.kind, self.stop.value]},
            "state": self.state.tolist(),
            "time": [None if math.isinf(t) else t for t in self.time.tolist()],
            "pred": self.pred.tolist(),
            "activation": [None if math.isnan(t) else t
                           for t in self.activation.tolist()],
            "seeds": sorted(self.seeds),
            "frontier_touched": self.frontier_touched,
            "stop_met": self.stop_met,
        }
        if include_events:
            doc["events"] = [[t, p, v, s] for t, p, v, s in self.events]
        return doc

    @classmethod
    def from_json(cls, doc, graph):
        if doc.get("schema") != TRACE_SCHEMA:
            raise ValueError("trace schema %r, expected %d"
                             % (doc.get("schema"), TRACE_SCHEMA))
        if list(map(str, graph.key())) != doc["graph_key"]:
            raise ValueError("trace was recorded on a different graph")
        p = doc["params"]
        return cls(
            graph=graph, lam=p["lambda"], mu=p["mu"], pt_seed=p["pt_seed"],
            seed_seed=p["seed_seed"], stop=StopRule(*p["stop"]),
            state=np.asarray(doc["state"], dtype=np.int8),
            time=np.asarray([math.inf if t is None else t for t in doc["time"]]),
            pred=np.asarray(doc["pred"], dtype=np.int64),
            activation=np.asarray([math.nan if t is None else t
                                   for t in doc["activation"]]),
            seeds=frozenset(doc["seeds"]),
            frontier_touched=doc["frontier_touched"],
            stop_met=doc["stop_met"],
            events=[tuple(e) for e in doc.get("events", [])],
            kind=doc.get("kind", "fpphe"),
        )

    def save(self, path, include_events=False):
        with open(path, "w") as fh:
            json.dump(self.to_json(include_events), fh, sort_keys=True,
                      separators=(",", ":"))

    @classmethod
    def load(cls, path, graph):
        with open(path) as fh:
            return cls.from_json(json.load(fh), graph)


# ---------------------------------------------------------------------------
# the event loop
# ---------------------------------------------------------------------------

def _run(g, lam, seeds, pt, stop, initial, kind):
    """Shared event loop.

    `initial`: list of (vertex, process) occupied at time 0.  Attempts are
    heap entries (time, process, target, source); ties resolve by process
    id then lower target then lower source, which fixes the a.s.-unique
    event order deterministically under floating point.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    n = g.vertex_count
    state = np.full(n, UNREACHED, dtype=np.int8)
    time = np.full(n, math.inf)
    pred = np.full(n, -1, dtype=np.int64)
    activation = np.full(n, math.nan)
    for v in seeds:
        state[v] = DORMANT

    dist_o = None
    if stop.kind == "radius":
        dist_o = bfs_distances(g, [g.origin])

    rate = {PROC1: 1.0, PROCL: float(lam)}
    edge_times = pt.values()
    eindex = g.edge_index()
    adj = g.adjacency

    heap = []
    events = []
    occupied_count = 0
    frontier_touched = False
    stop_met = "exhausted"

    def occupy(v, proc, t, src):
        nonlocal occupied_count, frontier_touched
        state[v] = OCC1 if proc == PROC1 else OCCL
        time[v] = t
        pred[v] = src
        events.append((t, proc, int(v), int(src)))
        occupied_count += 1
        if v in g.frontier:
            frontier_touched = True

    def schedule_from(v, proc, t):
        if dist_o is not None and dist_o[v] >= stop.value:
            return  # absorbing shell: complete in-ball information, queue drains
        r = rate[proc]
        for w in adj[v]:
            w = int(w)
            if state[w] in (UNREACHED, DORMANT):
                e = eindex[(v, w) if v < w else (w, v)]
                heapq.heappush(heap, (t + edge_times[e] / r, proc, w, int(v)))

    for v, proc in initial:
        occupy(v, proc, 0.0, -1)
    for v, proc in initial:
        schedule_from(v, proc, 0.0)

    while heap:
        t, proc, v, src = heapq.heappop(heap)
        if state[v] in (OCC1, OCCL):
            continue  # stale attempt
        if stop.kind == "time" and t > stop.value:
            stop_met = "time"
            break
        if state[v] == DORMANT:
            # the attempt fails and wakes the seed, which spreads at rate lam
            activation[v] = t
            occupy(v, PROCL, t, src)
            schedule_from(v, PROCL, t)
        else:
            occupy(v, proc, t, src)
            schedule_from(v, proc, t)
        if stop.kind == "count" and occupied_count >= stop.value:
            stop_met = "count"
            break
    else:
        if stop.kind == "radius":
            stop_met = "radius"

    return Trace(graph=g, lam=float(lam), mu=math.nan, pt_seed=pt.seed,
                 seed_seed=0, stop=stop, state=state, time=time, pred=pred,
                 activation=activation, seeds=frozenset(int(v) for v in seeds),
                 frontier_touched=frontier_touched, stop_met=stop_met,
                 events=events, kind=kind)


def run_fpphe(g, lam, mu, pt_seed, seed_seed, stop, pt_field=None,
              seed_field=None):
    """One run of the two-type competition with dormant seeds.

    The origin is process-1 occupied at time 0.  Deterministic given
    (g, lam, mu, pt_seed, seed_seed, stop); test hooks may inject prebuilt
    fields to force edge times or seed placements.
    """
    pt = pt_field if pt_field is not None else PassageTimeField(g, pt_seed)
    sf = seed_field if seed_field is not None else SeedField(g, seed_seed, mu)
    trace = _run(g, lam, sf.seed_set(), pt, stop, [(g.origin, PROC1)], "fpphe")
    trace.mu = float(sf.mu if seed_field is not None else mu)
    trace.seed_seed = sf.seed
    return trace


def run_richardson(g, lam, seed_vertex, pt_seed, stop, pt_field=None):
    """Two-type Richardson competition: both clusters spread from time 0,
    process 1 from the origin and the lam-rate process from `seed_vertex`."""
    if seed_vertex == g.origin:
        raise ValueError("seed_vertex must differ from the origin")
    pt = pt_field if pt_field is not None else PassageTimeField(g, pt_seed)
    trace = _run(g, lam, set(), pt, stop,
                 [(g.origin, PROC1), (int(seed_vertex), PROCL)], "richardson")
    trace.mu = 0.0
    return trace


def run_single_fpp(g, sources, rate, pt_seed, horizon=math.inf, pt_field=None):
    """Occupation times of one process: multi-source shortest-path times
    under weights t_e / rate, cut off at `horizon` (inf beyond it)."""
    if not len(sources):
        raise ValueError("empty source set")
    if rate <= 0:
        raise ValueError("rate must be positive")
    pt = pt_field if pt_field is not None else PassageTimeField(g, pt_seed)
    edge_times = pt.values()
    eindex = g.edge_index()
    times = np.full(g.vertex_count, math.inf)
    heap = []
    for s in sorted(set(int(v) for v in sources)):
        times[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    done = np.zeros(g.vertex_count, dtype=bool)
    while heap:
        t, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if t > horizon:
            times[u] = math.inf
            continue
        for w in g.adjacency[u]:
            w = int(w)
            e = eindex[(u, w) if u < w else (w, u)]
            nt = t + edge_times[e] / rate
            if not done[w] and nt < times[w]:
                times[w] = nt
                heapq.heappush(heap, (nt, w))
    times[times > horizon] = math.inf
    return times


# ---------------------------------------------------------------------------
# analytics: path passage-time tails
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailBounds:
    exact_low: float    # P[sum of l Exp(1) <= S] = P[Poisson(S) >= l]
    bound_low: float    # closed-form upper bound, valid when l >= 2S
    exact_high: float   # P[sum of l Exp(1) >= S] computed as P[Poisson(S) <= l]
    bound_high: float   # closed-form upper bound, valid when l <= S, S >= 1


def passage_tail_bounds(l, S):
    """Tail probabilities of the total passage time of a fixed length-l path.

    The sum of l i.i.d. mean-1 exponentials is Gamma(l, 1), whose CDF at S
    equals P[Poisson(S) >= l]; both tails are computed exactly that way and
    paired with closed-form bounds 2 e^{-S} S^l / l!  (lower tail) and
    l (S e / l)^l e^{-S} (upper tail), each valid in its stated range
    (returned as nan outside it).  Asserts exact <= bound where valid.
    """
    if l < 1 or S <= 0:
        raise ValueError("need l >= 1 and S > 0")
    exact_low = float(stats.poisson.sf(l - 1, S))
    exact_high = float(stats.poisson.cdf(l, S))
    bound_low = math.nan
    if l >= 2 * S:
        bound_low = 2.0 * math.exp(-S) * S ** l / math.factorial(l)
        assert exact_low <= bound_low + 1e-12
    bound_high = math.nan
    if l <= S and S >= 1:
        bound_high = l * (S * math.e / l) ** l * math.exp(-S)
        assert exact_high <= bound_high + 1e-12
    return TailBounds(exact_low, bound_low, exact_high, bound_high)


def linear_spread_check(g, x, rate, T_values, trials, pt_seed_base,
                        c_in=0.2, c_out=4.0, allow_truncation=False):
    """Monte Carlo check that one-type growth is linear in time.

    For each horizon T estimates the frequencies of the two containments
    {A_T subset B(x, c_out*rate*T)} and {B(x, c_in*rate*T) subset A_T},
    where A_T is the time-T occupied set.  Returns per-T records with
    Wilson 95% CIs and a flag where the outer-containment failure rate is
    inconsistent (3 sigma) with the best exponential form 1 - e^{-cT}.
    """
    x = int(x)
    results = []
    dist_x = bfs_distances(g, [x])
    safe = g.safe_radius(x)
    for T in T_values:
        r_out = c_out * rate * T
        if r_out > safe and not allow_truncation:
            raise FrontierError(
                "outer radius %.1f exceeds truncation-safe radius %d" % (r_out, safe))
        out_ok = 0
        in_ok = 0
        for k in range(trials):
            times = run_single_fpp(g, [x], rate, pt_seed_base + k, horizon=T)
            occ = np.isfinite(times)
            if not np.any(occ & (dist_x > r_out)):
                out_ok += 1
            r_in = c_in * rate * T
            if np.all(occ[dist_x <= r_in]):
                in_ok += 1
        results.append({
            "T": T, "trials": trials,
            "outer_freq": out_ok / trials, "inner_freq": in_ok / trials,
            "outer_ci": wilson_interval(out_ok, trials),
            "inner_ci": wilson_interval(in_ok, trials),
        })
    # best-fit failure exponent for the outer containment
    Ts = np.asarray([r["T"] for r in results], dtype=float)
    fails = np.asarray([1.0 - r["outer_freq"] for r in results])
    with np.errstate(divide="ignore"):
        cs = -np.log(np.maximum(fails, 1e-12)) / Ts
    c_fit = float(np.median(cs))
    for r in results:
        expect_fail = math.exp(-c_fit * r["T"])
        sigma = math.sqrt(max(expect_fail * (1 - expect_fail), 1e-12) / r["trials"])
        r["outer_flag"] = abs((1 - r["outer_freq"]) - expect_fail) > 3 * sigma
    return {"c_fit": c_fit, "per_T": results}


def wilson_interval(successes, trials, z=1.959963984540054):
    """Wilson 95% score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials ** 2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


# ---------------------------------------------------------------------------
# outcome classification
# ---------------------------------------------------------------------------

@dataclass
class OutcomeProxies:
    R_survive: int
    fpp1_survives: bool
    fppl_survives: bool
    extinction: bool
    seed_cluster_sizes: dict  # activated-seed root -> cluster size
    fppl_max_diameter: int


def seed_cluster_roots(trace):
    """Per-vertex activated-seed cluster root for lam-occupied vertices.

    Each lam-occupied vertex belongs to the cluster of the nearest
    activated-seed ancestor along its predecessor chain (a seed woken by
    another seed's cluster starts a cluster of its own)."""
    n = trace.graph.vertex_count
    root = np.full(n, -1, dtype=np.int64)
    activated = ~np.isnan(trace.activation)
    for v in np.nonzero(trace.state == OCCL)[0]:
        chain = []
        u = int(v)
        while root[u] < 0:
            if activated[u]:
                root[u] = u
                break
            chain.append(u)
            u = int(trace.pred[u])
        r = root[u]
        for w in chain:
            root[w] = r
    return root


def _cluster_diameter_lb(g, members):
    """Double BFS sweep inside the induced subgraph: a diameter lower bound."""
    mset = set(int(v) for v in members)
    if not mset:
        return 0

    def far(src):
        dist = {src: 0}
        queue = [src]
        best, bd = src, 0
        while queue:
            nxt = []
            for u in queue:
                for w in g.adjacency[u]:
                    w = int(w)
                    if w in mset and w not in dist:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
                        if dist[w] > bd:
                            best, bd = w, dist[w]
            queue = nxt
        return best, bd

    a, _ = far(min(mset))
    _, d = far(a)
    return d


def classify_outcome(trace, R_survive):
    """Finite-size survival verdicts from a completed trace.

    Process 1 survives if its cluster reaches hop distance >= R_survive
    from the origin; the seed side survives if a single activated-seed
    cluster attains diameter >= R_survive; extinction means the process-1
    cluster is enclosed (every outside neighbor is a seed-side vertex)
    without having survived.
    """
    if trace.frontier_touched:
        raise FrontierError(
            "trace touched the truncation frontier; verdicts within "
            "R_survive=%d would be contaminated" % R_survive)
    g = trace.graph
    dist_o = bfs_distances(g, [g.origin])
    occ1 = trace.state == OCC1
    fpp1_survives = bool(np.any(occ1 & (dist_o >= R_survive)))

    root = seed_cluster_roots(trace)
    sizes = {}
    for v in np.nonzero(trace.state == OCCL)[0]:
        sizes[int(root[v])] = sizes.get(int(root[v]), 0) + 1
    max_diam = 0
    fppl_survives = False
    for r in sorted(sizes):
        if sizes[r] <= max_diam:
            continue
        members = np.nonzero((trace.state == OCCL) & (root == r))[0]
        d = _cluster_diameter_lb(g, members)
        max_diam = max(max_diam, d)
        if d >= R_survive:
            fppl_survives = True
    enclosed = True
    for v in np.nonzero(occ1)[0]:
        for w in g.adjacency[int(v)]:
            w = int(w)
            if trace.state[w] in (UNREACHED,) and not occ1[w]:
                enclosed = False
                break
        if not enclosed:
            break
    extinction = enclosed and not fpp1_survives
    return OutcomeProxies(R_survive=int(R_survive),
                          fpp1_survives=fpp1_survives,
                          fppl_survives=fppl_survives,
                          extinction=extinction,
                          seed_cluster_sizes=sizes,
                          fppl_max_diameter=int(max_diam))
