import random
from fractions import Fraction as F

import pytest

from firecontain.errors import EmptyTargets, MalformedInput, PreconditionViolated
from firecontain.tree_core import (INFINITE, SrmfcInstance, build_tree, check_protection, level_counts,
                                   levelize_solution, normalize_antichain, normalize_targets, stretch_of)

from helpers import A, A1, A2, B, B1, P3_EDGES, T1_EDGES, brute_cuts, p3, random_srmfc, t1, t2


def test_single_edge_tree():
    tree = build_tree([(0, 1)], 0)
    assert tree.height == 1
    assert tree.leaves == {1}


def test_t1_shape():
    tree = build_tree(T1_EDGES, 0)
    assert tree.height == 2
    assert tree.leaves == {A1, A2, B1}
    assert tree.path(A1) == [A1, A]
    assert set(tree.subtree(A)) == {A, A1, A2}


def test_cycle_rejected():
    with pytest.raises(MalformedInput):
        build_tree([(0, 1), (1, 0)], 0)


@pytest.mark.parametrize("edges", [[(0, 1), (2, 1)], [(0, 0)], [(0, 2)], [(0, 1), (2, 3), (3, 2)]])
def test_malformed_edge_sets(edges):
    with pytest.raises(MalformedInput):
        build_tree(edges, 0)


def test_normalize_all_leaves_is_identity():
    tree = build_tree(T1_EDGES, 0)
    new, old_ids = normalize_targets(tree, tree.leaves)
    assert new.vertex_count == tree.vertex_count
    assert sorted(old_ids) == list(range(6))


def test_normalize_prunes_to_minimal_targets():
    tree = build_tree(T1_EDGES, 0)
    new, old_ids = normalize_targets(tree, {A, A1})
    # only the path r-a survives
    assert sorted(old_ids) == [0, A]
    assert new.leaves == {old_ids.index(A)}


def test_normalize_equivalence_on_budgets():
    # protecting the pruned tree at budget b is possible iff protecting S in T1 is
    tree = build_tree(T1_EDGES, 0)
    for S in [{A, A1}, {A1, B1}, {A2}, {B, A1}]:
        new, old_ids = normalize_targets(tree, S)
        for b0 in range(0, 3):
            for b1 in range(0, 3):
                orig = SrmfcInstance(tree, (F(b0), F(b1)))
                pruned = SrmfcInstance(new, (F(b0), F(b1))[:new.height])
                best_orig = min((stretch_of(orig, c, S) for c in brute_cuts(tree, S)), default=INFINITE)
                best_new = min((stretch_of(pruned, c) for c in brute_cuts(new)), default=INFINITE)
                assert best_orig == best_new


def test_normalize_empty_targets():
    with pytest.raises(EmptyTargets):
        normalize_targets(build_tree(T1_EDGES, 0), set())


@pytest.mark.parametrize("protect, expected", [({A, B1}, True), ({A}, False), ({A, B}, True), (set(), False)])
def test_check_protection_t1(protect, expected):
    assert check_protection(build_tree(T1_EDGES, 0), protect) is expected


def test_stretch_examples():
    assert stretch_of(p3(), {3}) == F(1, 3)
    assert stretch_of(t2(), {1, 2, 3}) == 1
    assert stretch_of(p3((0, 0, 1)), {1}) is INFINITE


def test_stretch_of_p3_is_optimal():
    inst = p3()
    assert min(stretch_of(inst, c) for c in brute_cuts(inst.tree)) == F(1, 3)


def test_stretch_unprotected_is_infinite():
    assert stretch_of(t1(), {A}) is INFINITE


def test_levelize_identity_when_feasible():
    inst = t1()
    assert levelize_solution({A, B1}, inst, 1) == {A, B1}


def test_levelize_moves_to_ancestor():
    # B=1, alpha=1: two level-2 leaves and nothing on level 1
    tree = build_tree([(0, 1), (1, 2), (0, 3), (3, 4)], 0)
    inst = SrmfcInstance(tree, (F(1), F(1)))
    out = levelize_solution({2, 4}, inst, 1)
    assert level_counts(tree, out) == [1, 1]
    assert check_protection(tree, out)
    assert out in ({1, 4}, {2, 3})


def test_levelize_rejects_cumulative_violation():
    tree = build_tree([(0, 1), (0, 2)], 0)
    with pytest.raises(PreconditionViolated):
        levelize_solution({1, 2}, SrmfcInstance(tree, (F(1),)), 1)


def test_levelize_random_instances():
    rng = random.Random(7)
    checked = 0
    while checked < 500:
        inst = random_srmfc(rng, 10, 4, values=(1,))
        uniform = SrmfcInstance(inst.tree, (F(1),) * inst.height)
        cuts = list(brute_cuts(inst.tree)) if inst.tree.vertex_count <= 9 else []
        for cut in cuts[:3]:
            alpha = stretch_of(uniform, cut)
            out = levelize_solution(cut, uniform, alpha)
            assert check_protection(inst.tree, out)
            cap = -(-alpha.numerator // alpha.denominator)
            assert max(level_counts(inst.tree, out)) <= cap
            checked += 1


def test_normalize_antichain():
    tree = build_tree(T1_EDGES, 0)
    assert normalize_antichain(tree, {A, A1, B1}) == {A, B1}


def test_prefix_helpers():
    inst = t1((1, 2))
    assert inst.prefix(0) == 0
    assert inst.prefix(2) == 3
    assert inst.prefixes() == [1, 3]


def test_p3_edges_fixture():
    assert build_tree(P3_EDGES, 0).height == 3
