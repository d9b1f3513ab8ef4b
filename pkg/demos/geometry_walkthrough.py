"""Tour of the geometric machinery on a tree versus a hyperbolic
tessellation versus a flat lattice.

Three probes, same code on each host:
  1. thin-triangle constant estimates (0 on trees, growing with radius on
     the lattice, small and stable on the tessellation);
  2. detour lengths around a forbidden ball on a geodesic (infinite on a
     tree, exponential-looking in the ball radius on the tessellation);
  3. an embedded binary tree with good-cylinder verdicts along its edges,
     then a ball-chain escape plan around an occupied blob.

Run:  python3 demos/geometry_walkthrough.py
"""

import numpy as np

from fpphe import (build_escape_ray, canonical_geodesic, check_good_cylinder,
                   delta_thin_estimate, derive_scale_params, detour_length,
                   embed_binary_tree, generate_free_product, generate_lattice,
                   generate_regular_tree, generate_tessellation,
                   plan_ball_chain, PassageTimeField, SeedField)
from fpphe.graphs import FrontierError, bfs_distances, bfs_limited


def main():
    tree = generate_regular_tree(2, 9)
    tess = generate_tessellation(3, 7, 9)
    lat = generate_lattice(2, 12)

    print("== thin-triangle constants ==")
    for name, g in (("T3", tree), ("{3,7}", tess), ("Z^2 box", lat)):
        delta, _ = delta_thin_estimate(g, 60, rng_seed=1)
        print("  %-8s delta_hat = %.1f  (%d vertices)"
              % (name, delta, g.vertex_count))

    print("== detours around a forbidden ball ==")
    d0 = bfs_distances(tess, [0])
    b = int(np.nonzero(d0 == 8)[0][0])
    mid = canonical_geodesic(tess, 0, b)[4]
    for r in (1, 2, 3):
        forb = set(bfs_limited(tess, [mid], r))
        L = detour_length(tess, 0, b, forb)
        print("  {3,7}: ball radius %d -> detour length %s" % (r, L))
    tmid = canonical_geodesic(tree, 0, tree.vertex_count - 1)
    forb = set(bfs_limited(tree, [tmid[len(tmid) // 2]], 1))
    print("  T3:    ball radius 1 -> detour length %s"
          % detour_length(tree, 0, tree.vertex_count - 1, forb))

    print("== embedded binary tree + cylinder verdicts on T3 ==")
    host = generate_regular_tree(2, 13)
    emb = embed_binary_tree(host, 2, 2)
    print("  %d nodes, measured distortion alpha = %.2f (isometric)"
          % (len(emb.nodes), emb.alpha))
    params = derive_scale_params(2, 0.04, 0.98, 1.01, 1.0, emb.alpha)
    pt = PassageTimeField(host, 5)
    seeds = SeedField(host, 6, 0.05)
    good = bad = skipped = 0
    for node in emb.nodes:
        if node.parent < 0:
            continue
        try:
            v = check_good_cylinder(host, emb, seeds, pt, node.parent,
                                    node.tree_id, params)
        except FrontierError:
            # deeper edges sit too close to the truncation boundary of the
            # finite ball for an honest verdict
            skipped += 1
            continue
        good += v.good
        bad += not v.good
    print("  verdicts on a realized Exp(1) field: %d good, %d bad, %d too "
          "close to the truncation frontier" % (good, bad, skipped))
    print("  (single-scale goodness under tight speed constants is a "
          "positive-probability event, not a likely one)")
    unit = PassageTimeField(host, 0,
                            override=np.ones(len(host.edges())))
    calm = SeedField(host, 0, 0.0)
    v = check_good_cylinder(host, emb, calm, unit, 0, 1, params)
    print("  same cylinder on a unit-time, seed-free field: good = %s"
          % v.good)

    print("== ball-chain escape plan on the infinite-dihedral line ==")
    line = generate_free_product([2, 2], 150)
    occ = bfs_limited(line, [line.origin], 3)
    ray = build_escape_ray(line, occ, 2, 2, 0.0)
    plan = plan_ball_chain(line, ray, 2, 2, 1.5, occupied=occ)
    print("  radii %s, time budgets %s, boundary sizes %s"
          % (plan.radii, plan.time_budgets,
             [len(b) for b in plan.boundaries]))


if __name__ == "__main__":
    main()
