"""Continuous-time multi-particle diffusion limited aggregation on lattice
boxes: exclusion-process particles with rate-1 jump clocks freezing onto a
growing aggregate rooted at the origin.

RNG contract (so a naive reference simulator can reproduce trajectories
exactly): events execute in (time, particle id) order; each ring draws one
uniform neighbor index and then, if the particle is still mobile, one
exponential delay for its next ring, from a single generator stream.
Initial particle placement is a counter-based Bernoulli(rho) field; initial
ring times are drawn in site order.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import _counter_uniform

EMPTY = 0
PARTICLE = 1
AGGREGATE = 2

_PLACEMENT_SALT = 0x6D646C61  # distinct stream from the clock draws


@dataclass
class MdlaState:
    graph: object
    rho: float
    seed: int
    content: np.ndarray          # per-site EMPTY / PARTICLE / AGGREGATE
    time: float
    mobile_count: int
    frozen_count: int
    frontier_flagged: bool
    growth: list                 # (time, aggregate size, aggregate radius)
    stop_met: str
    trajectory: list = None      # optional per-event content snapshots

    def aggregate(self):
        return np.nonzero(self.content == AGGREGATE)[0]

    def to_json(self):
        return {
            "schema": 1,
            "rho": self.rho,
            "seed": self.seed,
            "graph_key": list(map(str, self.graph.key())),
            "content": self.content.tolist(),
            "time": self.time,
            "mobile_count": self.mobile_count,
            "frozen_count": self.frozen_count,
            "frontier_flagged": self.frontier_flagged,
            "growth": [[t, s, r] for t, s, r in self.growth],
            "stop_met": self.stop_met,
        }


def initial_particles(lattice, rho, seed):
    """Deterministic Bernoulli(rho) particle placement, origin excluded."""
    u = _counter_uniform(seed ^ _PLACEMENT_SALT, np.arange(lattice.vertex_count))
    sites = set(np.nonzero(u < rho)[0].tolist())
    sites.discard(lattice.origin)
    return sorted(sites)


def run_mdla(lattice, rho, rng_seed, horizon=None, aggregate_cap=None,
             particles=None, record_trajectory=False):
    """One MDLA run.  The origin starts as aggregate; every other site
    carries a particle independently with probability rho.  A ring makes
    the particle pick a uniform neighbor: empty -> move, particle ->
    suppressed (exclusion; the ring is consumed), aggregate -> the jumper's
    own site joins the aggregate and the particle freezes.

    `particles` overrides the initial placement (test hook).  Runs until
    `horizon` time or `aggregate_cap` aggregate size, whichever first.
    """
    if not 0 <= rho < 1:
        raise ValueError("rho must be in [0,1)")
    if lattice.family != "lattice":
        raise ValueError("run_mdla expects a lattice graph")
    if horizon is None and aggregate_cap is None:
        raise ValueError("need a horizon or an aggregate cap")

    g = lattice
    n = g.vertex_count
    content = np.full(n, EMPTY, dtype=np.int8)
    content[g.origin] = AGGREGATE
    init = initial_particles(g, rho, rng_seed) if particles is None \
        else sorted(set(int(v) for v in particles) - {g.origin})
    for v in init:
        content[v] = PARTICLE

    rng = np.random.default_rng(rng_seed)
    # position per particle id; ids are stable, sites change
    pos = {pid: v for pid, v in enumerate(init)}
    heap = [(float(rng.exponential()), pid) for pid in range(len(init))]
    heapq.heapify(heap)

    from .graphs import bfs_distances
    dist_o = bfs_distances(g, [g.origin])

    t = 0.0
    agg_size = 1
    agg_radius = 0
    frozen = 0
    growth = [(0.0, 1, 0)]
    frontier_flagged = g.origin in g.frontier
    stop_met = "exhausted"
    trajectory = [tuple(int(c) for c in content)] if record_trajectory else None

    while heap:
        t, pid = heapq.heappop(heap)
        if pid not in pos:
            continue
        if horizon is not None and t > horizon:
            t = horizon
            stop_met = "horizon"
            break
        x = pos[pid]
        nbrs = g.adjacency[x]
        y = int(nbrs[int(rng.integers(len(nbrs)))])
        if x in g.frontier or y in g.frontier:
            frontier_flagged = True
        if content[y] == AGGREGATE:
            content[x] = AGGREGATE
            del pos[pid]
            frozen += 1
            agg_size += 1
            agg_radius = max(agg_radius, int(dist_o[x]))
            growth.append((t, agg_size, agg_radius))
            if record_trajectory:
                trajectory.append(tuple(int(c) for c in content))
            if aggregate_cap is not None and agg_size >= aggregate_cap:
                stop_met = "cap"
                break
            continue
        if content[y] == EMPTY:
            content[x] = EMPTY
            content[y] = PARTICLE
            pos[pid] = y
        # else: suppressed jump onto a particle; the ring is consumed
        if record_trajectory:
            trajectory.append(tuple(int(c) for c in content))
        heapq.heappush(heap, (t + float(rng.exponential()), pid))

    return MdlaState(graph=g, rho=float(rho), seed=int(rng_seed),
                     content=content, time=float(t), mobile_count=len(pos),
                     frozen_count=frozen, frontier_flagged=frontier_flagged,
                     growth=growth, stop_met=stop_met, trajectory=trajectory)
