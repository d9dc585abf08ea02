import random
from fractions import Fraction as F

import pytest

from firecontain.compress_tree import (alpha_candidates, compress, contract_zero_level, down_push,
                                       is_compressed, prepare_candidate, reduce_to_compressed, split_level)
from firecontain.dp_tree import dp_exact, exhaustive_exact
from firecontain.errors import BudgetOutOfRange, LevelOutOfRange, NonzeroBudget
from firecontain.tree_core import INFINITE, SrmfcInstance, build_tree, check_protection, stretch_of

from helpers import p3, random_srmfc, t2


def test_down_push_moves_budget():
    inst = SrmfcInstance(build_tree([(0, 1), (1, 2), (2, 3)], 0), (1, 2, 1))
    assert down_push(inst, 2).budgets == (3, 0, 1)


def test_down_push_zero_and_bad_level():
    inst = SrmfcInstance(build_tree([(0, 1), (1, 2)], 0), (1, 0))
    assert down_push(inst, 2).budgets == (1, 0)
    with pytest.raises(LevelOutOfRange):
        down_push(inst, 1)


def test_contract_path():
    out = contract_zero_level(p3((1, 0, 1)), 2)
    assert out.budgets == (1, 1)
    assert out.tree.height == 2 and out.tree.vertex_count == 3


def test_contract_leaf_on_level_removes_siblings():
    # r -> a -> {a1 (leaf on level 2), a2 -> a3}; r -> b -> b1 -> b2
    tree = build_tree([(0, 1), (1, 2), (1, 3), (3, 4), (0, 5), (5, 6), (6, 7)], 0)
    inst = SrmfcInstance(tree, (F(1), F(0), F(1)))
    out = contract_zero_level(inst, 2)
    assert out.tree.height == 2
    # a became a leaf, a's other subtree is gone, b2 hangs from b
    assert out.tree.vertex_count == 4
    assert exhaustive_exact(out)[0] == exhaustive_exact(inst)[0]


def test_contract_nonzero_budget():
    with pytest.raises(NonzeroBudget):
        contract_zero_level(p3((1, F(1, 2), 1)), 2)


def test_split_level():
    inst = SrmfcInstance(build_tree([(0, 1), (1, 2), (2, 3)], 0), (3, 1, 1))
    inst = SrmfcInstance(build_tree([(0, 1), (1, 2)], 0), (3, 1))
    out = split_level(inst, 1, 1)
    assert out.budgets == (1, 2, 1)
    assert out.tree.height == 3
    assert split_level(inst, 1, 3).budgets == (3, 0, 1)
    with pytest.raises(BudgetOutOfRange):
        split_level(inst, 1, 4)


def test_compress_p3_eps_one():
    comp = compress(p3(), 1)
    assert comp.inst.prefixes() == [1, 2, 4]
    assert comp.inst.budgets == (1, 1, 2)


def test_compress_fixed_point():
    inst = SrmfcInstance(build_tree([(0, 1), (1, 2), (1, 3)], 0), (F(1), F(1, 2)))
    assert is_compressed(inst, F(1, 2))
    comp = compress(inst, F(1, 2))
    assert comp.inst.budgets == inst.budgets
    assert comp.inst.tree.vertex_count == inst.tree.vertex_count
    assert comp.lifter.lift({2, 3}) == {2, 3}


def test_alpha_candidates():
    cands = alpha_candidates(p3())
    for c in (F(1, 3), F(1, 2), F(1), F(2, 3)):
        assert c in cands
    assert alpha_candidates(t2()) == [F(1, 3), F(2, 3), F(1), F(4, 3)]
    assert exhaustive_exact(p3())[0] in cands


def test_reduce_scales_and_pushes():
    # alpha-feasibility means |R cap V_<=l| <= alpha * B_<=l, so budgets are multiplied by alpha
    cur, _ = prepare_candidate(p3(), 3)
    assert cur.budgets == (3, 3, 3)
    cur, _ = prepare_candidate(p3(), F(1, 3))
    assert cur.budgets == (1,)
    half = SrmfcInstance(build_tree([(0, 1), (1, 2), (1, 3)], 0), (F(1, 2), F(1, 2)))
    cur, lifter = prepare_candidate(half, 1)
    assert cur.height == 1 and cur.budgets == (1,)
    assert len(lifter.steps) >= 1


def test_some_candidate_is_one_feasible():
    rng = random.Random(3)
    for _ in range(30):
        inst = random_srmfc(rng, 9, 3, first_positive=True)
        found = any(dp_exact(c.inst) is not None for _, c in reduce_to_compressed(inst, F(1, 2)))
        assert found


def test_lift_round_trip_random():
    rng = random.Random(11)
    for _ in range(60):
        inst = random_srmfc(rng, 9, 3, first_positive=True)
        eps = rng.choice([F(1, 4), F(1, 2), F(1)])
        comp = compress(inst, eps)
        sol = dp_exact(comp.inst)
        if sol is None:
            continue
        alpha = stretch_of(comp.inst, sol)
        lifted = comp.lifter.lift(sol)
        assert check_protection(inst.tree, lifted)
        assert stretch_of(inst, lifted) <= (1 + eps) * max(alpha, 1)


def test_split_and_contract_preserve_optimum():
    rng = random.Random(5)
    for _ in range(40):
        inst = random_srmfc(rng, 8, 3, values=(1, 2))
        lvl = rng.randint(1, inst.height)
        b = inst.budget(lvl)
        out = split_level(inst, lvl, b / 2)
        assert exhaustive_exact(out)[0] == exhaustive_exact(inst)[0]


def test_down_push_keeps_feasible_solutions():
    rng = random.Random(9)
    for _ in range(40):
        inst = random_srmfc(rng, 8, 3, values=(1, 2))
        if inst.height < 2:
            continue
        alpha, sol = exhaustive_exact(inst)
        if alpha is INFINITE:
            continue
        lvl = rng.randint(2, inst.height)
        assert stretch_of(down_push(inst, lvl), sol) <= alpha
