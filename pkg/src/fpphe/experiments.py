"""Batch orchestration: (lambda, mu) survival sweeps with derived per-run
seeds, SVG rendering of traces and aggregation snapshots, and canonical
persistence for sweep results.

Determinism contract: a sweep is a pure function of its spec.  Per-run
seeds are derived by folding the cell parameters and run index into the
base seeds (cells are keyed by their parameter values, not their position,
so permuting the grids never changes any cell's result), and both the CSV
and the JSON outputs are canonically formatted, hence byte-identical
across reruns.
"""

from __future__ import annotations

import io
import json
import math
import os
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import (OCC1, OCCL, DORMANT, PROC1, PROCL, StopRule,
                     _splitmix64, classify_outcome, run_fpphe,
                     wilson_interval)
from .graphs import FrontierError, SchemaVersionError
from .mdla import AGGREGATE, PARTICLE

SWEEP_SCHEMA = 1

CSV_HEADER = ("lambda,mu,runs,fpp1,fppl,coexist,extinct,contaminated,"
              "ci_low,ci_high")


def _fold_seed(base, lam, mu, run, salt):
    """Derived seed: base seed xored/folded with the cell parameters (by
    their IEEE-754 bits) and the run index through the splitmix finalizer."""
    h = np.uint64(base & 0xFFFFFFFFFFFFFFFF) ^ np.uint64(salt)
    for part in (np.float64(lam).view(np.uint64),
                 np.float64(mu).view(np.uint64),
                 np.uint64(run)):
        h = _splitmix64(h ^ part)
    return int(h)


def default_threads():
    return max(1, int(os.environ.get("FPPHE_THREADS", "1")))


@dataclass(frozen=True)
class SweepSpec:
    graph: object
    lam_grid: tuple
    mu_grid: tuple
    runs: int
    r_survive: int
    stop: StopRule
    pt_seed_base: int = 0
    seed_seed_base: int = 0
    threads: int = None

    def __post_init__(self):
        if not self.lam_grid or not self.mu_grid:
            raise ValueError("parameter grids must be non-empty")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.r_survive < 1:
            raise ValueError("r_survive must be >= 1")

    @classmethod
    def from_json(cls, doc, graph):
        return cls(graph=graph,
                   lam_grid=tuple(float(x) for x in doc["lambda_grid"]),
                   mu_grid=tuple(float(x) for x in doc["mu_grid"]),
                   runs=int(doc["runs"]), r_survive=int(doc["r_survive"]),
                   stop=StopRule.parse(doc["stop"]),
                   pt_seed_base=int(doc.get("pt_seed", 0)),
                   seed_seed_base=int(doc.get("seed_seed", 0)),
                   threads=doc.get("threads"))


@dataclass(frozen=True)
class CellResult:
    lam: float
    mu: float
    runs: int
    fpp1: int          # process 1 survives alone
    fppl: int          # seed side survives, process 1 dead but not enclosed
    coexist: int       # both survive
    extinct: int       # process 1 enclosed or plain die-out
    contaminated: int  # frontier-touched, excluded from rates
    ci_low: float      # Wilson 95% interval of the coexistence rate
    ci_high: float
    unusable: bool     # every run contaminated

    @property
    def usable_runs(self):
        return self.runs - self.contaminated

    def rate(self, which):
        n = self.usable_runs
        if n == 0:
            return math.nan
        return getattr(self, which) / n


@dataclass
class SweepResult:
    lam_grid: tuple
    mu_grid: tuple
    runs: int
    r_survive: int
    stop: str
    pt_seed_base: int
    seed_seed_base: int
    cells: list                     # CellResult, sorted by (lam, mu)
    wall_seconds: float = field(default=0.0, compare=False)

    def cell(self, lam, mu):
        for c in self.cells:
            if c.lam == lam and c.mu == mu:
                return c
        raise KeyError((lam, mu))

    def to_csv(self):
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for c in self.cells:
            out.write("%s,%s,%d,%d,%d,%d,%d,%d,%.6f,%.6f\n"
                      % (repr(c.lam), repr(c.mu), c.runs, c.fpp1, c.fppl,
                         c.coexist, c.extinct, c.contaminated,
                         c.ci_low, c.ci_high))
        return out.getvalue()

    def to_json(self):
        return {
            "schema": SWEEP_SCHEMA,
            "lambda_grid": list(self.lam_grid),
            "mu_grid": list(self.mu_grid),
            "runs": self.runs,
            "r_survive": self.r_survive,
            "stop": self.stop,
            "pt_seed": self.pt_seed_base,
            "seed_seed": self.seed_seed_base,
            "cells": [{
                "lambda": c.lam, "mu": c.mu, "runs": c.runs,
                "fpp1": c.fpp1, "fppl": c.fppl, "coexist": c.coexist,
                "extinct": c.extinct, "contaminated": c.contaminated,
                "ci_low": c.ci_low, "ci_high": c.ci_high,
                "unusable": c.unusable,
            } for c in self.cells],
        }

    @classmethod
    def from_json(cls, doc):
        if doc.get("schema") != SWEEP_SCHEMA:
            raise SchemaVersionError("sweep schema %r, expected %d"
                                     % (doc.get("schema"), SWEEP_SCHEMA))
        cells = [CellResult(lam=c["lambda"], mu=c["mu"], runs=c["runs"],
                            fpp1=c["fpp1"], fppl=c["fppl"],
                            coexist=c["coexist"], extinct=c["extinct"],
                            contaminated=c["contaminated"],
                            ci_low=c["ci_low"], ci_high=c["ci_high"],
                            unusable=c["unusable"])
                 for c in doc["cells"]]
        return cls(lam_grid=tuple(doc["lambda_grid"]),
                   mu_grid=tuple(doc["mu_grid"]), runs=doc["runs"],
                   r_survive=doc["r_survive"], stop=doc["stop"],
                   pt_seed_base=doc["pt_seed"],
                   seed_seed_base=doc["seed_seed"], cells=cells)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True,
                      separators=(",", ":"))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError("unparseable sweep file %s: %s"
                                 % (path, exc)) from exc
        return cls.from_json(doc)


def _run_cell(spec, lam, mu):
    fpp1 = fppl = coexist = extinct = contaminated = 0
    for run in range(spec.runs):
        pt_seed = _fold_seed(spec.pt_seed_base, lam, mu, run, 0x70617373)
        seed_seed = _fold_seed(spec.seed_seed_base, lam, mu, run, 0x73656564)
        trace = run_fpphe(spec.graph, lam, mu, pt_seed, seed_seed, spec.stop)
        try:
            out = classify_outcome(trace, spec.r_survive)
        except FrontierError:
            contaminated += 1
            continue
        # disjoint precedence: coexistence, then lone process-1 survival,
        # then enclosure of process 1 (the extinction regime), then lone
        # seed-side survival, then undecided die-out
        if out.fpp1_survives and out.fppl_survives:
            coexist += 1
        elif out.fpp1_survives:
            fpp1 += 1
        elif out.extinction:
            extinct += 1
        elif out.fppl_survives:
            fppl += 1
        else:
            extinct += 1
    usable = spec.runs - contaminated
    ci_low, ci_high = wilson_interval(coexist, usable) if usable else (0.0, 1.0)
    return CellResult(lam=float(lam), mu=float(mu), runs=spec.runs,
                      fpp1=fpp1, fppl=fppl, coexist=coexist, extinct=extinct,
                      contaminated=contaminated, ci_low=ci_low,
                      ci_high=ci_high, unusable=usable == 0)


def sweep(spec):
    """Run every (lambda, mu) cell of a SweepSpec.  Cells execute concurrently
    up to the configured width; the merged table is sorted by (lambda, mu)
    regardless of execution or grid order."""
    t0 = _time.perf_counter()
    cells = [(float(lam), float(mu))
             for lam in spec.lam_grid for mu in spec.mu_grid]
    width = spec.threads or default_threads()
    if width > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(lambda c: _run_cell(spec, *c), cells))
    else:
        results = [_run_cell(spec, lam, mu) for lam, mu in cells]
    results.sort(key=lambda c: (c.lam, c.mu))
    return SweepResult(lam_grid=tuple(sorted(set(spec.lam_grid))),
                       mu_grid=tuple(sorted(set(spec.mu_grid))),
                       runs=spec.runs, r_survive=spec.r_survive,
                       stop="%s:%s" % (spec.stop.kind, spec.stop.value),
                       pt_seed_base=spec.pt_seed_base,
                       seed_seed_base=spec.seed_seed_base, cells=results,
                       wall_seconds=_time.perf_counter() - t0)


def write_sweep(result, out_dir):
    """Emit sweep.csv and sweep.json under out_dir; returns the two paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    json_path = os.path.join(out_dir, "sweep.json")
    with open(csv_path, "w") as fh:
        fh.write(result.to_csv())
    result.save(json_path)
    return csv_path, json_path


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

EPOCH_PALETTE = ["#08306b", "#08519c", "#2171b5", "#4292c6", "#6baed6",
                 "#9ecae1", "#c6dbef", "#fdae6b", "#f16913", "#d94801"]

DEFAULT_STYLE = {
    "size": 720.0,            # canvas edge, px
    "background": "#ffffff",
    "epoch_palette": EPOCH_PALETTE,
    "fppl": "#00a651",
    "dormant": "#000000",
    "unreached": "#eeeeee",
    "vertex_scale": 0.9,      # dot radius as a fraction of the grid pitch
}


def _layout_or_refuse(g):
    if g.layout is None:
        raise ValueError(
            "graph has no layout coordinates; rendering needs a planar "
            "placement (use a lattice box or a hyperbolic tessellation)")
    return np.asarray(g.layout, dtype=float)


def _svg_canvas(coords, style):
    size = style["size"]
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = max(float((hi - lo).max()), 1e-9)
    pitch = size / (span + 1.0)

    def place(xy):
        return ((xy[0] - lo[0] + 0.5) * pitch,
                size - (xy[1] - lo[1] + 0.5) * pitch)

    return place, pitch


def epoch_bands(trace, n_bands=10):
    """Process-1 vertices split into equal occupied-count bands by
    occupation order: per-vertex band index, -1 off the process-1 cluster."""
    occ1 = np.nonzero(trace.state == OCC1)[0]
    band = np.full(trace.graph.vertex_count, -1, dtype=np.int64)
    if len(occ1) == 0:
        return band
    order = occ1[np.lexsort((occ1, trace.time[occ1]))]
    for i, v in enumerate(order):
        band[v] = min(n_bands - 1, i * n_bands // len(order))
    return band


def render_trace(trace, style=None):
    """Deterministic SVG of a trace: process-1 vertices colored by
    occupation-epoch band, seed-side vertices, dormant seeds, and
    unreached vertices each in their own color."""
    st = dict(DEFAULT_STYLE, **(style or {}))
    g = trace.graph
    coords = _layout_or_refuse(g)
    place, pitch = _svg_canvas(coords, st)
    band = epoch_bands(trace, len(st["epoch_palette"]))

    parts = [_svg_header(st)]
    for v in range(g.vertex_count):
        s = int(trace.state[v])
        if s == OCC1:
            color = st["epoch_palette"][band[v]]
            r = st["vertex_scale"] * pitch / 2
        elif s == OCCL:
            color = st["fppl"]
            r = st["vertex_scale"] * pitch / 2
        elif s == DORMANT:
            color = st["dormant"]
            r = st["vertex_scale"] * pitch / 3
        else:
            color = st["unreached"]
            r = st["vertex_scale"] * pitch / 4
        x, y = place(coords[v])
        parts.append('<circle cx="%.3f" cy="%.3f" r="%.3f" fill="%s"/>'
                     % (x, y, r, color))
    parts.append("</svg>")
    return "\n".join(parts)


MDLA_STYLE = {
    "size": 720.0,
    "background": "#ffffff",
    "aggregate": "#1a1a2e",
    "particle": "#74add1",
    "empty": "#f7f7f7",
    "vertex_scale": 0.9,
}


def render_mdla(state, style=None):
    """Deterministic SVG of an aggregation snapshot: aggregate, mobile
    particles, and empty sites in distinct colors."""
    st = dict(MDLA_STYLE, **(style or {}))
    g = state.graph
    coords = _layout_or_refuse(g)
    place, pitch = _svg_canvas(coords, st)
    parts = [_svg_header(st)]
    for v in range(g.vertex_count):
        c = int(state.content[v])
        if c == AGGREGATE:
            color, r = st["aggregate"], st["vertex_scale"] * pitch / 2
        elif c == PARTICLE:
            color, r = st["particle"], st["vertex_scale"] * pitch / 2.5
        else:
            color, r = st["empty"], st["vertex_scale"] * pitch / 5
        x, y = place(coords[v])
        parts.append('<circle cx="%.3f" cy="%.3f" r="%.3f" fill="%s"/>'
                     % (x, y, r, color))
    parts.append("</svg>")
    return "\n".join(parts)


def _svg_header(st):
    size = st["size"]
    return ('<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
            'viewBox="0 0 %d %d">\n<rect width="%d" height="%d" fill="%s"/>'
            % (size, size, size, size, size, size, st["background"]))


def fppl_area_fraction(trace):
    """Share of occupied vertices held by the seed side."""
    occl = int(np.count_nonzero(trace.state == OCCL))
    occ1 = int(np.count_nonzero(trace.state == OCC1))
    if occl + occ1 == 0:
        return 0.0
    return occl / (occl + occ1)


def growth_figure_recipe():
    """Documented configuration for the qualitative two-type growth
    renders: 2D lattice box of radius 300, stop at radius 280, epoch bands
    of equal occupied-count deciles, lambda 0.7, mu in the critical-looking
    window.  Box size and stop radius are choices, not ground truth."""
    return {
        "family": "lattice", "d": 2, "radius": 300,
        "stop": "radius:280",
        "lam": 0.7, "mus": [0.027, 0.029, 0.030],
        "pt_seed": 1, "seed_seed": 2,
        "epoch_bands": 10,
    }


def aggregation_figure_recipe():
    return {
        "family": "lattice", "d": 2, "radius": 200,
        "aggregate_cap": 20_000,
        "rhos": [0.1, 0.2, 0.3],
        "seed": 1,
    }
