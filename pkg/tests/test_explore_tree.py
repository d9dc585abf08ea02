import random
from fractions import Fraction as F

import pytest

from firecontain import lp
from firecontain.dp_tree import dp_exact
from firecontain.errors import EmptyCollection
from firecontain.explore_tree import (ExploreLimits, ExploreThresholds, blocked_dropped, blocked_top, explore,
                                      gamma_top, mix, partitions_from_point, thresholds)
from firecontain.lp_tree import FractionalSolution, TreePolytope, solve_vertex, sparsify_for_exploration
from firecontain.oracles import build_context, core_vertices
from firecontain.tree_core import SrmfcInstance, build_tree

from helpers import A, A1, A2, B, B1, T1_EDGES, compressed_budgets, random_tree_edges, t1


def path_instance(L, eps):
    return SrmfcInstance(build_tree([(i, i + 1) for i in range(L)], 0), compressed_budgets(eps, L))


def test_thresholds_clamped():
    th = thresholds(F(1, 7), path_instance(10, F(1, 7)))
    assert th.raw_h_hat == 48 and th.h_hat == 10
    assert th.N == 28


def test_thresholds_half_hundred_levels():
    th = thresholds(F(1, 2), path_instance(100, F(1, 2)))
    assert th.h_hat == 16


def test_thresholds_reject_large_eps():
    with pytest.raises(ValueError):
        thresholds(F(3, 4), t1())


def test_gamma_top_boundaries():
    tree = build_tree(T1_EDGES, 0)
    eps = F(1, 4)
    y = FractionalSolution({A1: 1, A2: F(3, 4)})
    assert gamma_top(y, tree, 1, eps) == {A1, A2}
    assert gamma_top(FractionalSolution({A1: F(3, 4) - F(1, 100)}), tree, 1, eps) == set()
    assert B1 not in gamma_top(y, tree, 1, eps)


def test_blocked_top():
    tree = build_tree(T1_EDGES, 0)
    assert blocked_top(tree, [], 2) == set()
    assert blocked_top(tree, [A], 2) == {A, A1, A2}
    assert blocked_top(tree, [A1], 2) == {A, A1}


def test_blocked_dropped_kappa_zero():
    tree = build_tree([(i, i + 1) for i in range(4)], 0)
    th = ExploreThresholds(F(1, 2), 4, 1, 0, 8, F(1), 4, 4, 1)
    assert blocked_dropped(tree, [], th) == set()
    assert blocked_dropped(tree, [2], th) == {1, 2}


def test_blocked_dropped_matches_definition_replay():
    # chain with a side branch; kappa = 1, h_check = 1, h_hat = 4
    tree = build_tree([(0, 1), (1, 2), (2, 3), (3, 4), (2, 5), (5, 6)], 0)
    th = ExploreThresholds(F(1, 2), 4, 1, 1, 8, F(1), 4, 4, 1)
    expected = set()
    for v in (2, 5):
        expected |= set(tree.path(v))
        expected |= {u for u in tree.subtree(v) if tree.level[u] <= tree.level[v] + 1}
    assert blocked_dropped(tree, [2, 5], th) == expected == {1, 2, 3, 5, 6}


def test_partitions_from_point_small_cases():
    tree = build_tree(T1_EDGES, 0)
    parts = partitions_from_point(FractionalSolution({}), 1, tree)
    assert len(parts) == 1 and parts[0].bottom == set()
    parts = partitions_from_point(FractionalSolution({A: F(1, 2)}), 1, tree)
    assert {p.bottom for p in parts} == {frozenset(), frozenset({A1, A2})}
    assert all(p.bottom | p.top == tree.leaves and not p.bottom & p.top for p in parts)


def test_mix():
    y = FractionalSolution({1: F(1, 2), 2: 1})
    assert mix([y]).values == y.values
    assert mix([y, FractionalSolution({})]).values == {1: F(1, 4), 2: F(1, 2)}
    with pytest.raises(EmptyCollection):
        mix([])


def test_mix_preserves_membership():
    inst = t1((2, 2))
    poly = TreePolytope(inst, 1)
    a = FractionalSolution({A: 1, B1: 1})
    b = FractionalSolution({A1: 1, A2: 1, B: 1})
    assert poly.contains(a) and poly.contains(b)
    assert poly.contains(mix([a, b]))


def test_degenerate_clamped_threshold():
    inst = SrmfcInstance(build_tree(T1_EDGES, 0), compressed_budgets(F(1, 2), 2))
    inst = SrmfcInstance(inst.tree, (F(2), F(1)))
    th = thresholds(F(1, 2), inst)
    res = explore(inst, th, shortcut=True)
    assert [p.bottom for p in res.partitions] == [inst.tree.leaves]
    assert dp_exact(inst) is not None


def test_core_avoiding_point_yields_good_partition():
    rng = random.Random(13)
    eps = F(1, 2)
    checked = 0
    while checked < 15:
        L = rng.randint(1, 3)
        tree = build_tree(random_tree_edges(rng, rng.randint(L + 1, 9), L), 0)
        inst = SrmfcInstance(tree, tuple(F(rng.randint(1, 2)) for _ in range(tree.height)))
        try:
            ctx = build_context(inst, eps)
        except Exception:
            continue
        h = ctx.th.h_hat
        core = core_vertices(ctx, h)
        x = solve_vertex(TreePolytope(inst, 1, None, None, core))
        if x is lp.INFEASIBLE:
            continue
        y, _ = sparsify_for_exploration(x, inst, eps, h, ctx.th.h_check)
        parts = partitions_from_point(y, h, tree, 16)
        assert any(dp_exact(inst, p.bottom) is not None for p in parts)
        checked += 1


def test_explore_respects_node_limit():
    inst = SrmfcInstance(build_tree(T1_EDGES, 0), (F(1), F(1)))
    th = thresholds(F(1, 2), inst)
    res = explore(inst, th, "efficient", ExploreLimits(max_nodes=3))
    assert res.expanded <= 3


@pytest.mark.parametrize("variant", ["basic", "mixing", "thinned", "efficient"])
def test_partitions_are_bipartitions(variant):
    inst = SrmfcInstance(build_tree(T1_EDGES, 0), (F(1), F(1, 2)))
    th = thresholds(F(1, 2), inst)
    res = explore(inst, th, variant, ExploreLimits(max_nodes=500))
    for p in res.partitions:
        assert p.bottom | p.top == inst.tree.leaves and not p.bottom & p.top
