import itertools
import random
from fractions import Fraction as F

import pytest

from firecontain import lp
from firecontain.errors import PreconditionViolated
from firecontain.lp_tree import (FractionalSolution, TreePolytope, classify_supports, is_vertex, layer_levels,
                                 min_stretch, path_sums, round_layered, round_loose, solve_vertex, sparsify,
                                 sparsify_for_exploration)
from firecontain.tree_core import SrmfcInstance, build_tree, check_protection, stretch_of

from helpers import compressed_budgets, five_postconditions, p3, random_tree_edges, t2


def test_star_vertex():
    poly = TreePolytope(t2(), 1)
    x = solve_vertex(poly)
    assert x.values == {1: 1, 2: 1, 3: 1}
    assert is_vertex(poly, x)


def test_star_vertex_matches_enumeration():
    # every vertex of the 3-variable polytope: choose 3 tight rows among 4 + 3 nonnegativity rows
    poly = TreePolytope(t2(), 1)
    prog, verts = poly.build_lp()
    rows = [(r, s, b) for r, s, b in prog.rows] + [({i: 1}, lp.GE, 0) for i in range(3)]
    found = set()
    for trio in itertools.combinations(rows, 3):
        if lp.rank([r for r, _, _ in trio], 3) < 3:
            continue
        # solve the square system by brute force over a small grid of candidate values
        for cand in itertools.product([F(0), F(1, 2), F(1)], repeat=3):
            if all(sum(c * cand[i] for i, c in r.items()) == b for r, _, b in trio) and prog.is_feasible_point(list(cand)):
                found.add(cand)
    assert found == {(F(1), F(1), F(1))}


def test_p3_at_one_third():
    poly = TreePolytope(p3(), F(1, 3))
    x = solve_vertex(poly)
    assert poly.contains(x) and is_vertex(poly, x) and x.mass(x.support) == 1
    # (1/3, 1/3, 1/3) is feasible too; preferring deep vertices singles out x_t = 1
    assert solve_vertex(poly, {1: 3, 2: 2, 3: 1}).values == {3: 1}


def test_star_half_infeasible():
    assert solve_vertex(TreePolytope(t2(), F(1, 2))) is lp.INFEASIBLE


def test_no_targets_gives_zero():
    assert solve_vertex(TreePolytope(t2(), 1, frozenset())).values == {}


def test_targets_must_be_leaves():
    with pytest.raises(PreconditionViolated):
        TreePolytope(t2(), 1, {0})


def test_classify_star_all_tight():
    poly = TreePolytope(t2(), 1)
    loose, tight = classify_supports(FractionalSolution({1: 1, 2: 1, 3: 1}), poly)
    assert loose == set() and tight == {1, 2, 3}


def test_classify_loose_internal():
    tree = build_tree([(0, 1), (1, 2), (1, 3)], 0)
    poly = TreePolytope(SrmfcInstance(tree, (F(2), F(2))), 1)
    x = FractionalSolution({1: F(1, 2), 2: F(1, 4), 3: F(1, 4)})
    loose, _ = classify_supports(x, poly)
    assert 1 in loose


def test_round_loose_examples():
    poly = TreePolytope(t2(), 1)
    out = round_loose(FractionalSolution({1: 1, 2: 1, 3: 1}), poly)
    assert out == {1, 2, 3} and stretch_of(t2(), out) == 1
    inst = SrmfcInstance(build_tree([(0, 1), (1, 2), (0, 3)], 0), (F(2), F(2)))
    x = FractionalSolution({1: 1, 3: 1})
    assert round_loose(x, TreePolytope(inst, 1)) == {1, 3}


def test_round_loose_protects_on_random_vertices():
    rng = random.Random(2)
    done = 0
    while done < 60:
        n = rng.randint(4, 30)
        tree = build_tree(random_tree_edges(rng, n, 4), 0)
        inst = SrmfcInstance(tree, tuple(F(rng.randint(1, 3)) for _ in range(tree.height)))
        alpha, _ = min_stretch(inst)
        poly = TreePolytope(inst, alpha)
        x = solve_vertex(poly)
        out = round_loose(x, poly)
        assert check_protection(tree, out)
        loose, _ = classify_supports(x, poly)
        for t in tree.leaves:
            path = tree.path(t)
            assert any(v in out for v in path)
        # at most L loose vertices in total are rounded up
        for lvl, pre in enumerate(inst.prefixes(), start=1):
            used = sum(1 for v in out if tree.level[v] <= lvl)
            assert used <= alpha * pre + tree.height
        assert len(loose) <= tree.height
        done += 1


def test_sparsify_rounds_down_low_levels():
    # a level-1 value 3/10 with eps*gamma/h2 = 1/8 becomes 1/4
    tree = build_tree([(0, 1), (1, 2)], 0)
    inst = SrmfcInstance(tree, (F(1), F(1)))
    x = FractionalSolution({1: F(3, 10), 2: F(7, 10)})
    y = sparsify(x, inst, F(1, 4), F(1, 2), 1, 1, check_levels=False)
    assert y[1] == F(1, 4)
    assert y[2] == F(7, 10)


def test_sparsify_random_postconditions():
    rng = random.Random(31)
    checked = 0
    while checked < 40:
        eps = rng.choice([F(1, 4), F(1, 2)])
        L = rng.randint(2, 4)
        n = rng.randint(L + 1, 15)
        tree = build_tree(random_tree_edges(rng, n, L), 0)
        if tree.height != L:
            continue
        inst = SrmfcInstance(tree, compressed_budgets(eps, L))
        alpha, _ = min_stretch(inst)
        if alpha > 1:
            continue
        x = solve_vertex(TreePolytope(inst, 1))
        gamma = rng.choice([F(1), F(1, 2)])
        h1 = L
        h2 = rng.randint(0, L)
        delta = {t: F(1) for t in tree.leaves}
        y = sparsify(x, inst, eps, gamma, h1, h2, check_levels=False)
        five_postconditions(x, y, inst, eps, gamma, h1, h2, delta)
        checked += 1


def test_sparsify_for_exploration_lands_in_relaxed_polytope():
    rng = random.Random(17)
    checked = 0
    eps = F(1, 7)
    while checked < 20:
        L = rng.randint(1, 3)
        tree = build_tree(random_tree_edges(rng, rng.randint(L + 1, 12), L), 0)
        inst = SrmfcInstance(tree, compressed_budgets(eps, tree.height))
        x = solve_vertex(TreePolytope(inst, 1))
        if x is lp.INFEASIBLE:
            continue
        y, scaled = sparsify_for_exploration(x, inst, eps, tree.height, tree.height)
        assert scaled
        assert TreePolytope(inst, 1 + 3 * eps).contains(y)
        for v in y.support:
            assert y[v] >= eps / tree.height
        checked += 1


def test_layer_levels_clamp():
    assert layer_levels(F(1, 2), 5, 2) == [5, 5, 5]
    assert layer_levels(F(1), 8, 2) == [8, 4, 3]


def test_round_layered_tie_counts_in_both_slices():
    # one leaf whose path mass is split 1/2-1/2 between the two slabs
    edges = [(i, i + 1) for i in range(8)]
    tree = build_tree(edges, 0)
    inst = SrmfcInstance(tree, tuple(F(1) for _ in range(8)))
    y = FractionalSolution({4: F(1, 2), 8: F(1, 2)})  # slabs are (4, 8] and (3, 4]
    out = round_layered(y, 2, F(1), inst)
    assert check_protection(tree, out)
    assert out == {4, 8}


def test_path_sums():
    tree = p3().tree
    assert path_sums(tree, FractionalSolution({1: F(1, 2), 3: F(1, 4)})) == [0, F(1, 2), F(1, 2), F(3, 4)]
