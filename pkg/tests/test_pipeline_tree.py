import random
from fractions import Fraction as F

import pytest

from firecontain.dp_tree import exhaustive_budget, exhaustive_exact
from firecontain.errors import ParameterOutOfRange
from firecontain.pipeline_tree import solve_rmfc, solve_srmfc
from firecontain.tree_core import build_tree, check_protection, level_counts, stretch_of

from helpers import T1_EDGES, T2_EDGES, p3, random_srmfc


def test_p3_smooth():
    res = solve_srmfc(p3(), F(1, 2))
    assert check_protection(p3().tree, res.protect)
    assert res.alpha <= (1 + 17 * F(1, 2)) * F(1, 3)
    assert stretch_of(p3(), res.protect) == res.alpha


def test_empty_targets_vacuous():
    res = solve_srmfc(p3(), F(1, 2), targets=set())
    assert res.protect == set() and res.alpha == 0


def test_t1_two_approx():
    res = solve_rmfc(build_tree(T1_EDGES, 0))
    assert res.budget <= 2 and check_protection(build_tree(T1_EDGES, 0), res.protect)


def test_star_two_approx():
    tree = build_tree(T2_EDGES, 0)
    res = solve_rmfc(tree)
    assert res.budget <= 6 and check_protection(tree, res.protect)
    assert max(level_counts(tree, res.protect)) == res.budget


def test_single_leaf():
    tree = build_tree([(0, 1)], 0)
    res = solve_rmfc(tree)
    assert res.budget == 1 and res.protect == {1}


def test_bad_mode():
    with pytest.raises(ParameterOutOfRange):
        solve_rmfc(build_tree(T1_EDGES, 0), mode="nope")


def test_random_smooth_ratio():
    rng = random.Random(99)
    eps = F(1, 2)
    for _ in range(25):
        inst = random_srmfc(rng, 10, 3, values=(1, 2))
        opt, _ = exhaustive_exact(inst)
        res = solve_srmfc(inst, eps)
        assert check_protection(inst.tree, res.protect)
        if not res.truncated:
            assert res.alpha <= (1 + 17 * eps) * opt


def test_random_modes():
    rng = random.Random(5)
    for _ in range(15):
        inst = random_srmfc(rng, 10, 3)
        opt, _ = exhaustive_budget(inst.tree)
        for mode, bound in (("two_approx", 2 * opt), ("three_approx", 3 * opt),
                            ("budget_4eps", -(-(4 + F(1, 2)) * opt // 1))):
            res = solve_rmfc(inst.tree, mode, F(1, 2))
            assert check_protection(inst.tree, res.protect)
            assert max(level_counts(inst.tree, res.protect)) == res.budget
            if not res.truncated:
                assert res.budget <= bound
