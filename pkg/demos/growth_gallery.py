"""Render the two picture galleries: competing growth on a lattice box at
three seed densities, and multi-particle aggregation at three particle
densities.

The growth renders share one seed stream, so raising mu only adds seeds;
the seed-type (orange) share of the disk grows visibly from one panel to
the next while the epoch-banded interior stays comparable.  SVGs land in
demos/out/.

Run:  python3 demos/growth_gallery.py            (radius-60 panels, ~1 min)
      python3 demos/growth_gallery.py --full     (radius-300 panels, slow)
"""

import os
import sys

from fpphe import (StopRule, fppl_area_fraction, generate_lattice,
                   render_mdla, render_trace, run_fpphe, run_mdla)
from fpphe.experiments import aggregation_figure_recipe, growth_figure_recipe


def main():
    full = "--full" in sys.argv[1:]
    recipe = growth_figure_recipe()
    radius = recipe["radius"] if full else 60
    stop = StopRule.parse("radius:%d" % (int(recipe["stop"].split(":")[1]) if full
                                         else 56))
    out_dir = os.path.join(os.path.dirname(__file__), "out")
    os.makedirs(out_dir, exist_ok=True)

    g = generate_lattice(2, radius)
    for mu in recipe["mus"]:
        trace = run_fpphe(g, recipe["lam"], mu, recipe["pt_seed"],
                          recipe["seed_seed"], stop)
        path = os.path.join(out_dir, "growth_mu%.3f.svg" % mu)
        with open(path, "w") as fh:
            fh.write(render_trace(trace))
        print("%s  seed-type area fraction %.4f"
              % (path, fppl_area_fraction(trace)))

    agg = aggregation_figure_recipe()
    box = generate_lattice(2, agg["radius"] if full else 40)
    cap = agg["aggregate_cap"] if full else 1500
    for rho in agg["rhos"]:
        state = run_mdla(box, rho, agg["seed"], aggregate_cap=cap)
        path = os.path.join(out_dir, "aggregate_rho%.1f.svg" % rho)
        with open(path, "w") as fh:
            fh.write(render_mdla(state))
        print("%s  aggregate size %d" % (path, state.frozen_count + 1))


if __name__ == "__main__":
    main()
