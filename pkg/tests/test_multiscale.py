import math

import numpy as np
import pytest

from fpphe.engine import PassageTimeField, SeedField, StopRule, run_fpphe
from fpphe.geometry import EmbeddedTree, TreeNode, build_escape_ray, embed_binary_tree
from fpphe.graphs import (FrontierError, Graph, ParameterError, bfs_distances,
                          bfs_limited, generate_lattice, generate_regular_tree)
from fpphe.multiscale import (BallChainPlan, CheckBudgets, chain_radius,
                              chain_time_budget, check_ball_chain_events,
                              check_good_cylinder, count_minimal_cutsets,
                              cylinder_members, derive_scale_params,
                              find_good_path, plan_ball_chain,
                              prune_bad_subtrees)
from util import (enumerate_tree_frontiers, literal_cylinder_check,
                  random_connected_graph)


def cycle_graph(n):
    edges = [(i, (i + 1) % n) for i in range(n)]
    edges = [(min(u, v), max(u, v)) for u, v in edges]
    return Graph.from_edges(n, sorted(set(edges)), family="custom", origin=0)


def line_graph(halfwidth):
    n = 2 * halfwidth + 1
    edges = [(i, i + 1) for i in range(n - 1)]
    return Graph.from_edges(n, edges, family="custom", origin=halfwidth,
                            frontier=(0, n - 1))


def two_node_tree(r, a, b):
    """Minimal embedded tree: root at graph vertex a, one child at b."""
    nodes = [TreeNode(0, -1, 0, int(a), []),
             TreeNode(1, 0, 1, int(b), [])]
    return EmbeddedTree(scale=r, depth=1, nodes=nodes, alpha=1.0,
                        alpha_pairs_sampled=0, incomplete=False)


class TestScaleParams:
    def test_closed_forms(self):
        p = derive_scale_params(3, 0.25, 0.5, 2.0, 1.0, 1.0)
        assert p.seed_free_factor == pytest.approx(6.25 * 2 * 1 * 4 * 1)
        assert p.prune_factor == math.ceil(0.25 + 4 * 16 + 1)
        p2 = derive_scale_params(3, 0.25, 0.5, 2.0, 2.0, 1.0)
        assert p2.seed_free_factor == pytest.approx(p.seed_free_factor * 2)

    def test_rate_symmetry(self):
        # the factor uses max{rate, 1/rate}, so rate and 1/rate agree
        a = derive_scale_params(2, 0.1, 0.5, 2.0, 0.25, 1.5)
        b = derive_scale_params(2, 0.1, 0.5, 2.0, 4.0, 1.5)
        assert a.seed_free_factor == pytest.approx(b.seed_free_factor)

    def test_bitwise_reproducible(self):
        a = derive_scale_params(5, 0.031, 0.71, 1.93, 0.63, 1.21)
        b = derive_scale_params(5, 0.031, 0.71, 1.93, 0.63, 1.21)
        assert (a.seed_free_factor, a.prune_factor) == \
            (b.seed_free_factor, b.prune_factor)

    def test_strict_mode_flags_not_errors(self):
        p = derive_scale_params(2, 0.25, 0.9, 1.1, 1.0, 1.0)
        assert p.speed_ok          # 1.1 > 1
        assert not p.width_ok      # 0.25 >= (2*1.1)^-2
        q = derive_scale_params(2, 0.01, 0.9, 1.1, 2.0, 1.0)
        assert not q.speed_ok      # 1.1 < 2
        assert q.width_ok

    def test_validation(self):
        with pytest.raises(ValueError):
            derive_scale_params(2, 0.1, 1.2, 2.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            derive_scale_params(2, 0.1, 0.5, 0.9, 1.0, 1.0)
        with pytest.raises(ValueError):
            derive_scale_params(0, 0.1, 0.5, 2.0, 1.0, 1.0)


class TestMinimalCutsets:
    def test_small_values(self):
        assert [count_minimal_cutsets(k) for k in range(1, 9)] == \
            [1, 1, 2, 5, 14, 42, 132, 429]

    def test_matches_frontier_enumeration(self):
        fronts = enumerate_tree_frontiers(8)
        by_size = {}
        for f in fronts:
            by_size[len(f)] = by_size.get(len(f), 0) + 1
        for k in range(1, 9):
            assert by_size[k] == count_minimal_cutsets(k)

    def test_enumerated_sets_are_cutsets(self):
        # every depth-6 binary string has exactly one prefix in the set
        for f in enumerate_tree_frontiers(4):
            for leaf in range(64):
                s = format(leaf, "06b")
                hits = [p for p in f if s.startswith(p)]
                assert len(hits) == 1

    def test_ratio_recurrence_exact(self):
        for k in range(2, 31):
            assert count_minimal_cutsets(k) * k == \
                count_minimal_cutsets(k - 1) * (4 * k - 6)

    def test_exponential_bound(self):
        for k in range(2, 31):
            assert count_minimal_cutsets(k) < 4 ** (k - 1)

    def test_range_errors(self):
        with pytest.raises(ParameterError):
            count_minimal_cutsets(0)
        with pytest.raises(ParameterError):
            count_minimal_cutsets(31)


def flat_params(**kw):
    base = dict(scale=2, width=0.09, inner_speed=0.9, outer_speed=1.1,
                rate=1.0, distortion=1.0)
    base.update(kw)
    return derive_scale_params(base["scale"], base["width"],
                               base["inner_speed"], base["outer_speed"],
                               base["rate"], base["distortion"])


class TestGoodCylinder:
    def test_unit_times_no_seeds_good(self):
        g = cycle_graph(30)
        pt = PassageTimeField(g, 0, override=np.ones(len(g.edges())))
        seeds = SeedField(g, 0, 0.0)
        emb = two_node_tree(2, 0, 2)
        v = check_good_cylinder(g, emb, seeds, pt, 0, 1, flat_params())
        assert v.good and v.sandwich_ok and v.path_time_ok and v.seed_free_ok
        assert v.mode == "exhaustive"
        assert v.scale_j == 1

    def test_slow_edge_breaks_sandwich_only(self):
        g = cycle_graph(30)
        times = np.ones(len(g.edges()))
        times[g.edge_id(5, 6)] = 1e6
        pt = PassageTimeField(g, 0, override=times)
        seeds = SeedField(g, 0, 0.0)
        emb = two_node_tree(2, 0, 2)
        v = check_good_cylinder(g, emb, seeds, pt, 0, 1, flat_params())
        assert not v.sandwich_ok
        assert v.path_time_ok
        assert not v.good
        assert "sandwich_violation" in v.diagnostics

    def test_fast_edges_break_path_condition(self):
        g = cycle_graph(30)
        pt = PassageTimeField(g, 0, override=np.full(len(g.edges()), 0.01))
        seeds = SeedField(g, 0, 0.0)
        emb = two_node_tree(2, 0, 2)
        v = check_good_cylinder(g, emb, seeds, pt, 0, 1, flat_params())
        assert not v.path_time_ok
        assert not v.good
        assert "path_violation" in v.diagnostics

    def test_planted_seed_in_widened_cylinder_bad(self):
        g = cycle_graph(30)
        pt = PassageTimeField(g, 0, override=np.ones(len(g.edges())))
        seeds = SeedField(g, 0, 0.0, override={15})
        emb = two_node_tree(2, 0, 2)
        v = check_good_cylinder(g, emb, seeds, pt, 0, 1, flat_params())
        assert v.seed_free_ok is False
        assert v.sandwich_ok and v.path_time_ok
        assert not v.good
        assert v.diagnostics["seeds_in_widened_cylinder"] == [15]

    def test_truncation_refused(self):
        g = generate_lattice(1, 11)
        pt = PassageTimeField(g, 0, override=np.ones(len(g.edges())))
        seeds = SeedField(g, 0, 0.0)
        nb = int(g.adjacency[g.origin][0])
        b = int(g.adjacency[nb][0 if int(g.adjacency[nb][0]) != g.origin else 1])
        emb = two_node_tree(2, g.origin, b)
        with pytest.raises(FrontierError):
            check_good_cylinder(g, emb, seeds, pt, 0, 1, flat_params())

    def test_sampled_mode_over_budget(self):
        g = cycle_graph(80)
        pt = PassageTimeField(g, 0, override=np.ones(len(g.edges())))
        seeds = SeedField(g, 0, 0.0)
        emb = two_node_tree(2, 0, 2)
        budgets = CheckBudgets(sandwich_budget=4, path_budget=4,
                               sample_centers=2, sample_paths=10, rng_seed=3)
        v = check_good_cylinder(g, emb, seeds, pt, 0, 1, flat_params(),
                                budgets=budgets)
        assert v.mode == "sampled"
        assert v.good
        assert v.coverage["centers_checked"] == 2
        assert "paths_sampled" in v.coverage

    def test_sampled_mode_deterministic(self):
        g = cycle_graph(80)
        pt = PassageTimeField(g, 11, override=None)
        seeds = SeedField(g, 0, 0.0)
        emb = two_node_tree(2, 0, 2)
        budgets = CheckBudgets(sandwich_budget=4, path_budget=4,
                               sample_centers=2, sample_paths=10, rng_seed=3)
        a = check_good_cylinder(g, emb, seeds, pt, 0, 1, flat_params(),
                                budgets=budgets)
        b = check_good_cylinder(g, emb, seeds, pt, 0, 1, flat_params(),
                                budgets=budgets)
        assert (a.good, a.coverage) == (b.good, b.coverage)

    @pytest.mark.parametrize("case", range(20))
    def test_matches_literal_oracle_on_tiny_instances(self, case):
        rng = np.random.default_rng(1000 + case)
        g = random_connected_graph(rng, int(rng.integers(5, 9)),
                                   extra_edge_prob=0.4)
        params = derive_scale_params(
            1, float(rng.uniform(0.02, 0.3)), float(rng.uniform(0.6, 0.95)),
            float(rng.uniform(1.05, 1.5)), float(rng.choice([0.5, 1.0, 2.0])),
            1.0)
        b = int(rng.integers(1, g.vertex_count))
        emb = two_node_tree(params.scale, 0, b)
        pt = PassageTimeField(g, case)
        mu = 0.0 if case % 2 else 0.3
        seeds = SeedField(g, case, mu)
        v = check_good_cylinder(g, emb, seeds, pt, 0, 1, params)
        assert v.mode == "exhaustive"
        sandwich, path, seed_free = literal_cylinder_check(
            g, 0, b, 1, seeds.seed_set(), pt, params)
        assert v.sandwich_ok == sandwich
        assert v.path_time_ok == path
        assert v.seed_free_ok == seed_free
        assert v.good == (sandwich and path and seed_free)

    def test_cylinder_members_width_zero_is_geodesic_union(self):
        g = cycle_graph(12)
        # antipodal pair: both arcs are geodesics, so everything is in
        assert cylinder_members(g, 0, 6, 0) == set(range(12))
        assert cylinder_members(g, 0, 2, 0) == {0, 1, 2}


def binary_embedding(depth):
    g = generate_regular_tree(2, 2 * depth + 2)
    return g, embed_binary_tree(g, 2, depth)


class TestPruning:
    def test_removed_is_ancestor_subtree(self):
        g, emb = binary_embedding(5)
        params = flat_params(distortion=1.0)
        # prune_factor is large; use a single scale-1 bad pair from a leaf
        leaf = max(range(len(emb.nodes)), key=lambda i: emb.nodes[i].generation)
        parent = emb.nodes[leaf].parent
        climb = math.ceil(3 * params.prune_factor)
        removed = prune_bad_subtrees(emb, [(leaf, parent, 1)], params)
        # oracle: walk up from the *shallower* endpoint, then take descendants
        u = parent
        for _ in range(min(climb, emb.nodes[parent].generation)):
            u = emb.nodes[u].parent
        expected = set()
        stack = [u]
        while stack:
            w = stack.pop()
            expected.add(w)
            stack.extend(n.tree_id for n in emb.nodes if n.parent == w)
        assert removed == expected

    def test_endpoint_order_irrelevant(self):
        g, emb = binary_embedding(4)
        params = flat_params()
        leaf = max(range(len(emb.nodes)), key=lambda i: emb.nodes[i].generation)
        a = prune_bad_subtrees(emb, [(leaf, emb.nodes[leaf].parent, 1)], params)
        b = prune_bad_subtrees(emb, [(emb.nodes[leaf].parent, leaf, 1)], params)
        assert a == b

    def test_climb_clamped_at_root(self):
        g, emb = binary_embedding(3)
        params = flat_params()
        leaf = max(range(len(emb.nodes)), key=lambda i: emb.nodes[i].generation)
        removed = prune_bad_subtrees(emb, [(leaf, emb.nodes[leaf].parent, 2)],
                                     params)
        assert removed == set(range(len(emb.nodes)))

    def test_union_over_records(self):
        g, emb = binary_embedding(5)
        params = flat_params()
        leaves = [i for i in range(len(emb.nodes))
                  if emb.nodes[i].generation == 5]
        both = prune_bad_subtrees(
            emb, [(leaves[0], emb.nodes[leaves[0]].parent, 1),
                  (leaves[-1], emb.nodes[leaves[-1]].parent, 1)], params)
        first = prune_bad_subtrees(
            emb, [(leaves[0], emb.nodes[leaves[0]].parent, 1)], params)
        second = prune_bad_subtrees(
            emb, [(leaves[-1], emb.nodes[leaves[-1]].parent, 1)], params)
        assert both == first | second


class TestGoodPath:
    def _all_paths(self, emb, depth):
        children = {}
        for n in emb.nodes:
            if n.parent >= 0:
                children.setdefault(n.parent, []).append(n.tree_id)
        paths = []
        stack = [[0]]
        while stack:
            p = stack.pop()
            if emb.nodes[p[-1]].generation == depth:
                paths.append(p)
                continue
            for c in children.get(p[-1], ()):
                stack.append(p + [c])
        return paths

    def test_empty_removed_gives_leftmost(self):
        g, emb = binary_embedding(4)
        res = find_good_path(emb, set(), 4)
        expected = [0]
        children = {}
        for n in emb.nodes:
            if n.parent >= 0:
                children.setdefault(n.parent, []).append(n.tree_id)
        while emb.nodes[expected[-1]].generation < 4:
            expected.append(min(children[expected[-1]]))
        assert res.path == expected
        assert res.cutset is None

    def test_blocked_root_children(self):
        g, emb = binary_embedding(3)
        kids = [n.tree_id for n in emb.nodes if n.parent == 0]
        res = find_good_path(emb, set(kids), 3)
        assert res.path is None
        assert res.cutset == sorted(kids)

    def test_one_branch_open(self):
        g, emb = binary_embedding(3)
        kids = sorted(n.tree_id for n in emb.nodes if n.parent == 0)
        res = find_good_path(emb, {kids[0]}, 3)
        assert res.path is not None
        assert kids[1] in res.path

    @pytest.mark.parametrize("case", range(20))
    def test_dichotomy_matches_enumeration(self, case):
        g, emb = binary_embedding(5)
        rng = np.random.default_rng(case)
        removed = {i for i in range(len(emb.nodes)) if rng.random() < 0.25}
        res = find_good_path(emb, removed, 5)
        paths = self._all_paths(emb, 5)
        open_paths = [p for p in paths if not (set(p) & removed)]
        if res.path is not None:
            assert res.path in paths
            assert not (set(res.path) & removed)
        else:
            assert not open_paths
            cut = set(res.cutset)
            assert cut <= removed
            for p in paths:
                assert set(p) & cut
            # antichain: no cut element has a removed strict ancestor,
            # and no cut element is an ancestor of another
            for c in cut:
                u = emb.nodes[c].parent
                while u >= 0:
                    assert u not in removed
                    u = emb.nodes[u].parent


class TestBallChainPlan:
    def fake_ray(self, k):
        from fpphe.geometry import EscapeRay
        return EscapeRay(base=0, waypoints=list(range(1, k + 1)),
                         schedule=[], ray=list(range(k + 1)), delta=0.0,
                         steps_completed=k, truncated=False)

    @pytest.mark.parametrize("R1", [2, 3])
    @pytest.mark.parametrize("K", [1, 2, 3, 4])
    def test_closed_form_schedule(self, R1, K):
        g = generate_lattice(1, 3)
        plan = plan_ball_chain(g, self.fake_ray(K), R1, K, 1.5,
                               materialize=False)
        assert plan.radii == [R1 if k == 1 else R1 ** (2 * (k - 1))
                              for k in range(1, K + 1)]
        if K == 1:
            assert plan.time_budgets == [R1 ** 6]
        else:
            assert plan.time_budgets == [R1 ** (2 * j + 4)
                                         for j in range(1, K)]
        assert not plan.materialized

    def test_chain_helpers(self):
        assert chain_radius(2, 1) == 2
        assert chain_radius(2, 4) == 64
        assert chain_time_budget(3, 1) == 729
        assert chain_time_budget(3, 3) == 3 ** 10

    def _line_plan(self, halfwidth, occupied_radius=3, c_out=1.5):
        g = line_graph(halfwidth)
        occ = bfs_limited(g, [g.origin], occupied_radius)
        ray = build_escape_ray(g, occ, 2, 2, 0.0)
        plan = plan_ball_chain(g, ray, 2, 2, c_out, occupied=occ)
        return g, ray, plan

    def test_line_materialized_sets(self):
        g, ray, plan = self._line_plan(150)
        d_o = bfs_distances(g, [g.origin])
        w1, w2 = plan.waypoints
        assert d_o[w1] == 9 and d_o[w2] == 33
        assert plan.balls[0] == set(bfs_limited(g, [w1], 2))
        assert plan.balls[1] == set(bfs_limited(g, [w2], 4))
        # the target is the far ball plus the ray segment past the near ball
        P = plan.targets[0]
        assert plan.balls[1] <= P
        assert not (P & plan.balls[0])
        # on a line the near ball separates the enlargement from the origin
        assert g.origin not in plan.enlargements[0]
        assert plan.measured_detours == [math.inf]
        assert plan.truncated_at == 2

    def test_line_enlargement_radius_and_boundary(self):
        g, ray, plan = self._line_plan(150)
        EP = plan.enlargements[0]
        # enlargement radius is c_out * first budget = 96 hops past the target
        reach = {}
        for v in plan.targets[0]:
            reach[v] = 0
        frontier_dist = max(bfs_distances(g, sorted(plan.targets[0]))[v]
                            for v in EP)
        assert frontier_dist == math.ceil(1.5 * 64)
        for b in plan.boundaries[0]:
            nbrs = {int(u) for u in g.adjacency[b]}
            assert nbrs - EP - plan.balls[0]
        assert len(plan.boundaries[0]) == 1

    def test_truncated_plan_flagged(self):
        g = line_graph(60)
        occ = bfs_limited(g, [g.origin], 3)
        ray = build_escape_ray(g, occ, 2, 2, 0.0)
        plan = plan_ball_chain(g, ray, 2, 2, 1.5, occupied=occ)
        assert plan.truncated_at == 1
        assert plan.targets == []

    def test_occupied_inside_enlargement_rejected(self):
        g = line_graph(150)
        occ = bfs_limited(g, [g.origin], 3)
        ray = build_escape_ray(g, occ, 2, 2, 0.0)
        big_occ = bfs_limited(g, [g.origin], 25)
        with pytest.raises(ValueError):
            plan_ball_chain(g, ray, 2, 2, 1.5, occupied=big_occ)

    def test_needs_enough_waypoints(self):
        g = generate_lattice(1, 3)
        with pytest.raises(ValueError):
            plan_ball_chain(g, self.fake_ray(2), 2, 3, 1.5, materialize=False)

    def test_json_round_numbers(self):
        g, ray, plan = self._line_plan(150)
        doc = plan.to_json()
        assert doc["radii"] == [2, 4]
        assert doc["time_budgets"] == [64]
        assert doc["materialized"]
        assert sorted(plan.targets[0]) == doc["targets"][0]


class TestBallChainEvents:
    def _setup(self, tiny_extra=()):
        g = line_graph(150)
        occ = bfs_limited(g, [g.origin], 3)
        ray = build_escape_ray(g, occ, 2, 2, 0.0)
        plan = plan_ball_chain(g, ray, 2, 2, 1.5, occupied=occ)
        times = np.full(len(g.edges()), 1e6)
        tiny = set()
        for u in plan.ray_vertices:
            tiny.add(u)
        for ball in plan.balls:
            tiny.update(ball)
        tiny.update(tiny_extra)
        for u, v in g.edges():
            if u in tiny and v in tiny:
                times[g.edge_id(u, v)] = 1e-6
        pt = PassageTimeField(g, 0, override=times)
        trace = run_fpphe(g, 1.0, 0.0, 0, 0, StopRule.parse("count:1"),
                          pt_field=pt)
        return g, plan, pt, trace

    def test_forced_all_events_hold(self):
        g, plan, pt, trace = self._setup()
        out = check_ball_chain_events(trace, plan, 1.0, pt_field=pt)
        assert out["all_hold"]
        assert out["first_failing_k"] is None
        assert out["records"] == [{"k": 2, "fast_crossing": True,
                                   "containment": True, "holds": True}]

    def test_forced_bypass_breaks_containment_first(self):
        g = line_graph(150)
        occ = bfs_limited(g, [g.origin], 3)
        ray = build_escape_ray(g, occ, 2, 2, 0.0)
        plan = plan_ball_chain(g, ray, 2, 2, 1.5, occupied=occ)
        # zero-cost corridor from the target all the way out to the
        # enlargement boundary
        bypass = plan.enlargements[0]
        g2, plan2, pt, trace = self._setup(tiny_extra=bypass)
        out = check_ball_chain_events(trace, plan2, 1.0, pt_field=pt)
        assert out["first_failing_k"] == 2
        rec = out["records"][0]
        assert rec["fast_crossing"] and not rec["containment"]
        assert not out["all_hold"]

    def test_truncated_plan_never_all_hold(self):
        g = line_graph(60)
        occ = bfs_limited(g, [g.origin], 3)
        ray = build_escape_ray(g, occ, 2, 2, 0.0)
        plan = plan_ball_chain(g, ray, 2, 2, 1.5, occupied=occ)
        pt = PassageTimeField(g, 0)
        trace = run_fpphe(g, 1.0, 0.0, 0, 0, StopRule.parse("count:1"),
                          pt_field=pt)
        out = check_ball_chain_events(trace, plan, 1.0, pt_field=pt)
        assert out["records"] == []
        assert not out["all_hold"]

    def test_requires_materialized_plan(self):
        g = line_graph(150)
        occ = bfs_limited(g, [g.origin], 3)
        ray = build_escape_ray(g, occ, 2, 2, 0.0)
        plan = plan_ball_chain(g, ray, 2, 2, 1.5, materialize=False)
        trace = run_fpphe(g, 1.0, 0.0, 0, 0, StopRule.parse("count:1"))
        with pytest.raises(ValueError):
            check_ball_chain_events(trace, plan, 1.0)

    def test_graph_mismatch_rejected(self):
        g, plan, pt, trace = self._setup()
        other = line_graph(140)
        bad = run_fpphe(other, 1.0, 0.0, 0, 0, StopRule.parse("count:1"))
        with pytest.raises(ValueError):
            check_ball_chain_events(bad, plan, 1.0, pt_field=pt)
