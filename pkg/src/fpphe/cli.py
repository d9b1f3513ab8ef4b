"""Command-line front end: graph generation, single runs, geometry probes,
multi-scale analysis, sweeps, rendering, and aggregation snapshots."""

import argparse
import json
import os
import sys

from . import graphs
from .engine import PassageTimeField, SeedField, StopRule, run_fpphe
from .experiments import (SweepSpec, render_mdla, render_trace, sweep,
                          write_sweep)
from .graphs import Graph
from .mdla import run_mdla


def _write_or_print(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(doc, out):
    _write_or_print(json.dumps(doc, sort_keys=True, separators=(",", ":"))
                    + "\n", out)


def cmd_graph(args):
    if args.family in ("tree",):
        g = graphs.generate_regular_tree(args.b, args.radius)
    elif args.family == "lattice":
        g = graphs.generate_lattice(args.d, args.radius)
    elif args.family in ("free-product", "free_product"):
        factors = [int(x) for x in args.factors.split(",")]
        g = graphs.generate_free_product(factors, args.radius)
    elif args.family == "tess":
        g = graphs.generate_tessellation(args.p, args.q, args.layers)
    else:
        raise SystemExit("unknown family %r" % args.family)
    if args.out:
        g.save(args.out)
        print("wrote %s (%d vertices, %d edges)"
              % (args.out, g.vertex_count, len(g.edges())))
    else:
        _emit_json(g.to_json(), None)
    return 0


def cmd_run(args):
    g = Graph.load(args.graph)
    stop = StopRule.parse(args.stop)
    trace = run_fpphe(g, args.lam, args.mu, args.pt_seed, args.seed_seed, stop)
    if args.out:
        trace.save(args.out, include_events=args.events)
        print("wrote %s (stop: %s, occupied: %d)"
              % (args.out, trace.stop_met, len(trace.occupied())))
    else:
        _emit_json(trace.to_json(include_events=args.events), None)
    return 0


def cmd_geom(args):
    from . import geometry
    g = Graph.load(args.graph)
    if args.probe == "delta":
        delta, triple = geometry.delta_thin_estimate(g, args.samples,
                                                     args.seed)
        _emit_json({"delta": delta, "worst_triple": list(triple)}, args.out)
    elif args.probe == "detour":
        forbidden = graphs.bfs_limited(g, [args.center], args.r)
        d = geometry.detour_length(g, args.a, args.b, set(forbidden))
        _emit_json({"detour": None if d == float("inf") else int(d),
                    "infinite": d == float("inf")}, args.out)
    elif args.probe == "cylinder":
        cyl = geometry.build_cylinder(g, args.a, args.b, args.width)
        _emit_json({"a": args.a, "b": args.b, "width": args.width,
                    "vertices": sorted(int(v) for v in cyl.members),
                    "contaminated": cyl.contaminated}, args.out)
    elif args.probe == "embed":
        emb = geometry.embed_binary_tree(g, args.r, args.depth)
        _emit_json(emb.to_json(), args.out)
    elif args.probe == "ray":
        occ = graphs.bfs_limited(g, [g.origin], args.occupied_radius)
        ray = geometry.build_escape_ray(g, occ, args.r1, args.steps,
                                        args.delta)
        _emit_json(ray.to_json(), args.out)
    else:
        raise SystemExit("unknown geometry probe %r" % args.probe)
    return 0


def cmd_analyze(args):
    from . import geometry, multiscale
    g = Graph.load(args.graph)
    params = multiscale.derive_scale_params(
        args.scale, args.width, args.c_in, args.c_out, args.lam, args.alpha)
    if args.what == "cylinders":
        with open(args.emb) as fh:
            emb = geometry.EmbeddedTree.from_json(json.load(fh))
        pt = PassageTimeField(g, args.pt_seed)
        seeds = SeedField(g, args.seed_seed, args.mu)
        verdicts = []
        for node in emb.nodes:
            if node.parent < 0:
                continue
            v = multiscale.check_good_cylinder(g, emb, seeds, pt,
                                               node.parent, node.tree_id,
                                               params)
            verdicts.append({"x": v.x, "y": v.y, "scale_j": v.scale_j,
                             "good": v.good, "mode": v.mode})
        _emit_json({"params": {"seed_free_factor": params.seed_free_factor,
                               "prune_factor": params.prune_factor},
                    "verdicts": verdicts}, args.out)
    elif args.what == "goodpath":
        with open(args.emb) as fh:
            emb = geometry.EmbeddedTree.from_json(json.load(fh))
        bad = json.loads(args.bad) if args.bad else []
        removed = multiscale.prune_bad_subtrees(
            emb, [tuple(b) for b in bad], params)
        res = multiscale.find_good_path(emb, removed, args.depth)
        _emit_json({"path": res.path, "cutset": res.cutset,
                    "removed": sorted(res.removed)}, args.out)
    elif args.what == "ballchain":
        occ = graphs.bfs_limited(g, [g.origin], args.occupied_radius)
        ray = geometry.build_escape_ray(g, occ, args.r1, args.steps,
                                        args.delta)
        plan = multiscale.plan_ball_chain(g, ray, args.r1, args.steps,
                                          args.c_out, occupied=occ)
        _emit_json(plan.to_json(), args.out)
    else:
        raise SystemExit("unknown analysis %r" % args.what)
    return 0


def cmd_sweep(args):
    with open(args.spec) as fh:
        doc = json.load(fh)
    graph_path = doc["graph"]
    if not os.path.isabs(graph_path):
        graph_path = os.path.join(os.path.dirname(os.path.abspath(args.spec)),
                                  graph_path)
    g = Graph.load(graph_path)
    if args.seed is not None:
        doc["pt_seed"] = args.seed
        doc["seed_seed"] = args.seed + 1
    spec = SweepSpec.from_json(doc, g)
    result = sweep(spec)
    csv_path, json_path = write_sweep(result, args.out)
    print("wrote %s and %s (%d cells, %.1fs)"
          % (csv_path, json_path, len(result.cells), result.wall_seconds))
    return 0


def cmd_render(args):
    if args.mdla:
        with open(args.mdla) as fh:
            doc = json.load(fh)
        raise SystemExit("rendering a saved aggregation snapshot needs the "
                         "generating graph; use `fpphe mdla --render`")
    g = Graph.load(args.graph)
    from .engine import Trace
    trace = Trace.load(args.trace, g)
    svg = render_trace(trace)
    _write_or_print(svg, args.out)
    if args.out:
        print("wrote %s" % args.out)
    return 0


def cmd_mdla(args):
    g = graphs.generate_lattice(2, args.radius)
    st = run_mdla(g, args.rho, args.seed, aggregate_cap=args.cap,
                  horizon=args.horizon)
    if args.render:
        _write_or_print(render_mdla(st), args.render)
        print("wrote %s" % args.render)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(st.to_json(), fh, sort_keys=True, separators=(",", ":"))
        print("wrote %s (aggregate %d, stop: %s)"
              % (args.out, st.frozen_count + 1, st.stop_met))
    if not args.out and not args.render:
        _emit_json(st.to_json(), None)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="fpphe",
        description="Two-type first-passage competition with dormant seeds: "
                    "graphs, runs, geometry probes, multi-scale analysis, "
                    "sweeps, renders, and aggregation snapshots.")
    sub = p.add_subparsers(dest="command", required=True)

    gp = sub.add_parser("graph", help="generate a graph and save it as JSON")
    gp.add_argument("--family", required=True,
                    choices=["tree", "lattice", "free-product", "tess"])
    gp.add_argument("--b", type=int, default=2)
    gp.add_argument("--d", type=int, default=2)
    gp.add_argument("--radius", type=int, default=10)
    gp.add_argument("--factors", default="2,2")
    gp.add_argument("--p", type=int, default=3)
    gp.add_argument("--q", type=int, default=7)
    gp.add_argument("--layers", type=int, default=6)
    gp.add_argument("--out")
    gp.set_defaults(func=cmd_graph)

    rp = sub.add_parser("run", help="one two-type competition run")
    rp.add_argument("--graph", required=True)
    rp.add_argument("--lambda", dest="lam", type=float, required=True)
    rp.add_argument("--mu", type=float, required=True)
    rp.add_argument("--pt-seed", type=int, default=0)
    rp.add_argument("--seed-seed", type=int, default=0)
    rp.add_argument("--stop", required=True,
                    help="time:T | count:N | radius:R")
    rp.add_argument("--events", action="store_true")
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_run)

    yp = sub.add_parser("geom", help="geometry probes")
    yp.add_argument("probe",
                    choices=["delta", "cylinder", "detour", "embed", "ray"])
    yp.add_argument("--graph", required=True)
    yp.add_argument("--samples", type=int, default=2000)
    yp.add_argument("--seed", type=int, default=0)
    yp.add_argument("--a", type=int, default=0)
    yp.add_argument("--b", type=int, default=1)
    yp.add_argument("--width", type=int, default=0)
    yp.add_argument("--center", type=int, default=0)
    yp.add_argument("--r", type=int, default=2)
    yp.add_argument("--depth", type=int, default=2)
    yp.add_argument("--r1", type=int, default=2)
    yp.add_argument("--steps", type=int, default=1)
    yp.add_argument("--delta", type=float, default=0.0)
    yp.add_argument("--occupied-radius", type=int, default=2)
    yp.add_argument("--out")
    yp.set_defaults(func=cmd_geom)

    ap = sub.add_parser("analyze", help="multi-scale analysis")
    ap.add_argument("what", choices=["cylinders", "goodpath", "ballchain"])
    ap.add_argument("--graph", required=True)
    ap.add_argument("--emb")
    ap.add_argument("--bad", help="JSON list of [x, y, j] bad-cylinder records")
    ap.add_argument("--depth", type=int, default=2)
    ap.add_argument("--scale", type=int, default=2)
    ap.add_argument("--width", type=float, default=0.09)
    ap.add_argument("--c-in", type=float, default=0.9)
    ap.add_argument("--c-out", type=float, default=1.1)
    ap.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--mu", type=float, default=0.0)
    ap.add_argument("--pt-seed", type=int, default=0)
    ap.add_argument("--seed-seed", type=int, default=0)
    ap.add_argument("--r1", type=int, default=2)
    ap.add_argument("--steps", type=int, default=2)
    ap.add_argument("--delta", type=float, default=0.0)
    ap.add_argument("--occupied-radius", type=int, default=3)
    ap.add_argument("--out")
    ap.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("sweep", help="(lambda, mu) survival sweep")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, help="override base seeds")
    sp.set_defaults(func=cmd_sweep)

    np_ = sub.add_parser("render", help="render a saved trace to SVG")
    np_.add_argument("--trace")
    np_.add_argument("--graph")
    np_.add_argument("--mdla")
    np_.add_argument("--out")
    np_.set_defaults(func=cmd_render)

    mp = sub.add_parser("mdla", help="aggregation snapshot on a 2D box")
    mp.add_argument("--rho", type=float, required=True)
    mp.add_argument("--radius", type=int, required=True)
    mp.add_argument("--cap", type=int)
    mp.add_argument("--horizon", type=float)
    mp.add_argument("--seed", type=int, default=0)
    mp.add_argument("--render", help="write an SVG here")
    mp.add_argument("--out")
    mp.set_defaults(func=cmd_mdla)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
