"""Fixtures, random instance builders and small independent oracles shared by the tests."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from firecontain import lp, lp_tree
from firecontain.nukc import MetricSpace, SnukcInstance, nukc_contains, project_back, reduce_to_tree
from firecontain.tree_core import SrmfcInstance, build_tree

F = Fraction

# T1: r=0, a=1, b=2, a1=3, a2=4, b1=5
R, A, B, A1, A2, B1 = range(6)
T1_EDGES = [(R, A), (R, B), (A, A1), (A, A2), (B, B1)]
# P3: r=0 -> v1=1 -> v2=2 -> t=3
P3_EDGES = [(0, 1), (1, 2), (2, 3)]
# T2: star with leaves u1..u3 = 1..3
T2_EDGES = [(0, 1), (0, 2), (0, 3)]
M1_DIST = [[0, 10, 20], [10, 0, 10], [20, 10, 0]]


def t1(budgets=(1, 1)):
    return SrmfcInstance(build_tree(T1_EDGES, 0), tuple(F(b) for b in budgets))


def p3(budgets=(1, 1, 1)):
    return SrmfcInstance(build_tree(P3_EDGES, 0), tuple(F(b) for b in budgets))


def t2(budgets=(3,)):
    return SrmfcInstance(build_tree(T2_EDGES, 0), tuple(F(b) for b in budgets))


def m1(radii=(5,), budgets=(1,)):
    return SnukcInstance(MetricSpace(M1_DIST), radii, budgets)


def random_tree_edges(rng: random.Random, n: int, max_height: int):
    """Random tree on n vertices rooted at 0 with height at most max_height."""
    level = [0]
    edges = []
    for v in range(1, n):
        p = rng.choice([u for u in range(v) if level[u] < max_height])
        edges.append((p, v))
        level.append(level[p] + 1)
    return edges


def random_srmfc(rng: random.Random, n_max: int = 10, L_max: int = 4, values=(0, 1, 2, 3), first_positive=False):
    n = rng.randint(2, n_max)
    tree = build_tree(random_tree_edges(rng, n, L_max), 0)
    budgets = [F(rng.choice(values)) for _ in range(tree.height)]
    if first_positive and budgets[0] < 1:
        budgets[0] = F(1)
    return SrmfcInstance(tree, tuple(budgets))


def compressed_budgets(eps, L):
    base = 1 + F(eps)
    return tuple([F(1)] + [base ** i - base ** (i - 1) for i in range(1, L)])


def random_metric(rng: random.Random, n: int, L: int, span: int = 20, ratio=None, budgets=(1, 2)):
    """Integer points on a line; radii decreasing (by `ratio` per level when given)."""
    xs = [rng.randint(0, span) for _ in range(n)]
    space = MetricSpace([[abs(a - b) for b in xs] for a in xs])
    if ratio is None:
        radii = sorted((F(rng.randint(1, 10)) for _ in range(L)), reverse=True)
    else:
        top = F(rng.randint(1, 4)) * F(ratio) ** (L - 1)
        radii = [top / F(ratio) ** i for i in range(L)]
    ks = [F(rng.choice(budgets)) for _ in range(L)]
    return SnukcInstance(space, tuple(radii), tuple(ks))


def brute_beta(inst: SnukcInstance):
    """Optimal dilation by trying every subset of (point, level) pairs within the smooth budgets.

    Written independently of the package: coverage and prefix counts are evaluated inline.
    """
    pairs = [(v, l) for l in range(1, inst.height + 1) for v in range(inst.n)]
    pref = list(itertools.accumulate(inst.budgets))
    best = None
    for size in range(1, len(pairs) + 1):
        if size > pref[-1]:
            break
        for combo in itertools.combinations(pairs, size):
            counts = [sum(1 for _, l in combo if l <= j) for j in range(1, inst.height + 1)]
            if any(c > p for c, p in zip(counts, pref)):
                continue
            worst = F(0)
            for u in range(inst.n):
                options = []
                for v, l in combo:
                    d, r = inst.space.dist[u][v], inst.radii[l - 1]
                    if d == 0:
                        options.append(F(0))
                    elif r > 0:
                        options.append(d / r)
                if not options:
                    worst = None
                    break
                worst = max(worst, min(options))
            if worst is not None and (best is None or worst < best):
                best = worst
    return best


def brute_cuts(tree, goal=None):
    """All protecting antichains, by enumerating subsets of non-root vertices (tiny trees only)."""
    goal = tree.leaves if goal is None else goal
    verts = tree.non_root()
    for size in range(len(verts) + 1):
        for combo in itertools.combinations(verts, size):
            s = set(combo)
            if any(a in s for v in s for a in tree.ancestors(v)):
                continue
            if all(any(u in s for u in tree.path(t)) for t in goal):
                yield frozenset(s)


class VertexAudit:
    """Records every tree LP vertex produced and the worst loose count seen."""

    calls = 0
    violations: list = []


def audit_vertex(poly, x):
    if x is None or not isinstance(x, lp_tree.FractionalSolution):
        return
    loose, _ = lp_tree.classify_supports(x, poly)
    VertexAudit.calls += 1
    if len(loose) > poly.inst.height:
        VertexAudit.violations.append((len(loose), poly.inst.height))


def within_support_balls(inst, img, x, beta):
    return all(any(l == lvl and inst.space.d(u, v) <= beta * inst.radius(l) for v, l in x.support)
               for u, lvl in img.support)


def level_masses(x, L):
    return [sum((val for (_, l), val in x.values.items() if l == lvl), Fraction(0)) for lvl in range(1, L + 1)]


def reduction_round_trip(inst, x, beta, eta=4):
    red = reduce_to_tree(inst, x, beta, eta)
    poly = red.polytope(1)
    assert poly.contains(red.y)
    tree = red.inst.tree
    for lvl in range(1, inst.height + 1):
        tree_mass = sum((val for v, val in red.y.values.items() if tree.level[v] <= lvl), Fraction(0))
        metric_mass = sum((val for (_, l), val in x.values.items() if l <= lvl), Fraction(0))
        assert tree_mass <= metric_mass
    back = project_back(red.y, red)
    assert level_masses(back, inst.height) == [
        sum((val for v, val in red.y.values.items() if tree.level[v] == lvl), Fraction(0))
        for lvl in range(1, inst.height + 1)]
    assert nukc_contains(inst, back, 1, red.dilation * beta)
    assert within_support_balls(inst, back, x, beta)
    y = lp_tree.solve_vertex(poly)
    if y is not lp.INFEASIBLE:
        img = project_back(y, red)
        assert nukc_contains(inst, img, 1, red.dilation * beta)
        if y.support <= red.y.support:
            assert within_support_balls(inst, img, x, beta)
    return red


def five_postconditions(x, y, inst, eps, gamma, h1, h2, delta):
    tree = inst.tree
    step = eps * gamma
    assert y.support <= x.support
    for v in y.support:
        lvl = tree.level[v]
        if lvl <= h2:
            assert y[v] >= step / h2
        elif lvl <= h1:
            assert y[v] >= step
    used = Fraction(0)
    for lvl, pre in enumerate(inst.prefixes(), start=1):
        used += sum((y[v] for v in y.support if tree.level[v] == lvl), Fraction(0))
        assert used <= (1 + eps ** 2) * pre
    for t, need in delta.items():
        assert y.mass(tree.path(t)) >= need - 2 * step
