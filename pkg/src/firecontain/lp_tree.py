"""LP machinery on trees: the covering polytope, loose/tight supports,
rounding to integral protecting sets, and sparsification of fractional points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from . import lp
from .errors import PreconditionViolated
from .tree_core import RootedTree, SrmfcInstance, build_tree

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True, eq=False)
class FractionalSolution:
    """Nonnegative rational values on non-root vertices; missing keys are zero."""

    values: Mapping[int, Fraction]
    support: frozenset = field(init=False)

    def __post_init__(self):
        clean = {v: Fraction(x) for v, x in self.values.items() if x != 0}
        if any(x < 0 for x in clean.values()):
            raise ValueError("fractional solutions are nonnegative")
        object.__setattr__(self, "values", clean)
        object.__setattr__(self, "support", frozenset(clean))

    def __getitem__(self, v) -> Fraction:
        return self.values.get(v, ZERO)

    def mass(self, vertices: Iterable) -> Fraction:
        return sum((self.values.get(v, ZERO) for v in vertices), ZERO)

    def scaled(self, factor) -> "FractionalSolution":
        factor = Fraction(factor)
        return FractionalSolution({v: x * factor for v, x in self.values.items()})

    def restricted(self, keep) -> "FractionalSolution":
        return FractionalSolution({v: x for v, x in self.values.items() if keep(v)})

    def key(self) -> tuple:
        return tuple(sorted(self.values.items()))


@dataclass(frozen=True, eq=False)
class TreePolytope:
    """Points x >= 0 with x(V_<=l) <= alpha*B_<=l, x(P_t) >= delta_t on targets, x(D) = 0."""

    inst: SrmfcInstance
    alpha: Fraction
    targets: frozenset | None = None
    delta: Mapping[int, Fraction] | None = None
    forbidden: frozenset = frozenset()

    def __post_init__(self):
        tree = self.inst.tree
        targets = tree.leaves if self.targets is None else frozenset(self.targets)
        if not targets <= tree.leaves:
            raise PreconditionViolated("targets must be leaves")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        delta = {t: ONE for t in targets}
        if self.delta is not None:
            for t in targets:
                delta[t] = Fraction(self.delta.get(t, ONE))
        if any(not 0 <= d <= 1 for d in delta.values()):
            raise PreconditionViolated("coverage requirements must lie in [0, 1]")
        object.__setattr__(self, "delta", delta)
        forbidden = frozenset(self.forbidden)
        if tree.root in forbidden:
            raise PreconditionViolated("the root cannot be forbidden")
        object.__setattr__(self, "forbidden", forbidden)

    def caps(self) -> list[Fraction]:
        return [self.alpha * p for p in self.inst.prefixes()]

    def build_lp(self) -> tuple[lp.LinearProgram, list[int]]:
        tree = self.inst.tree
        verts = tree.non_root()
        col = {v: i for i, v in enumerate(verts)}
        prog = lp.LinearProgram(len(verts))
        for lvl, cap in enumerate(self.caps(), start=1):
            prog.add({col[v]: 1 for v in verts if tree.level[v] <= lvl}, lp.LE, cap)
        for t in sorted(self.targets):
            if self.delta[t] > 0:
                prog.add({col[v]: 1 for v in tree.path(t)}, lp.GE, self.delta[t])
        return prog, verts

    def contains(self, x: FractionalSolution) -> bool:
        tree = self.inst.tree
        if any(x[v] != 0 for v in self.forbidden) or tree.root in x.support:
            return False
        usage = ZERO
        by_level = _level_mass(tree, x)
        for lvl, cap in enumerate(self.caps(), start=1):
            usage += by_level[lvl]
            if usage > cap:
                return False
        return all(x.mass(tree.path(t)) >= self.delta[t] for t in self.targets)


def _level_mass(tree: RootedTree, x: FractionalSolution) -> list[Fraction]:
    out = [ZERO] * (tree.height + 1)
    for v, val in x.values.items():
        out[tree.level[v]] += val
    return out


def solve_vertex(poly: TreePolytope, objective: Mapping[int, object] | None = None):
    """A vertex of the polytope (minimizing total mass by default) or lp.INFEASIBLE."""
    if not any(poly.delta[t] > 0 for t in poly.targets):
        return FractionalSolution({})
    prog, verts = poly.build_lp()
    col = {v: i for i, v in enumerate(verts)}
    obj = None if objective is None else {col[v]: c for v, c in objective.items()}
    res = lp.solve(prog, obj, fixed_zero=[col[v] for v in poly.forbidden])
    if res is lp.INFEASIBLE:
        return res
    return FractionalSolution({v: res[col[v]] for v in verts})


def is_vertex(poly: TreePolytope, x: FractionalSolution) -> bool:
    """Exact basic-feasibility test (forbidden vertices add x_v = 0 rows)."""
    prog, verts = poly.build_lp()
    col = {v: i for i, v in enumerate(verts)}
    vec = [x[v] for v in verts]
    return lp.is_vertex(prog, vec, [col[v] for v in poly.forbidden])


def min_stretch(inst: SrmfcInstance, targets: Iterable[int] | None = None,
                forbidden: Iterable[int] = ()):
    """Fractional optimum min{alpha : Q_alpha nonempty} and an attaining point."""
    tree = inst.tree
    goal = sorted(tree.leaves if targets is None else targets)
    verts = tree.non_root()
    col = {v: i for i, v in enumerate(verts)}
    a = len(verts)
    prog = lp.LinearProgram(a + 1)
    for lvl, pre in enumerate(inst.prefixes(), start=1):
        row = {col[v]: 1 for v in verts if tree.level[v] <= lvl}
        row[a] = -pre
        prog.add(row, lp.LE, 0)
    for t in goal:
        prog.add({col[v]: 1 for v in tree.path(t)}, lp.GE, 1)
    res = lp.solve(prog, {a: 1}, fixed_zero=[col[v] for v in forbidden])
    if res is lp.INFEASIBLE:
        return res, None
    return res[a], FractionalSolution({v: res[col[v]] for v in verts})


def path_sums(tree: RootedTree, x: FractionalSolution) -> list[Fraction]:
    """x(P_v) for every vertex (zero at the root)."""
    out = [ZERO] * tree.vertex_count
    for v in tree.order:
        if v != tree.root:
            out[v] = out[tree.parent[v]] + x[v]
    return out


def classify_supports(x: FractionalSolution, poly: TreePolytope) -> tuple[set, set]:
    """Split supp(x) into (loose, tight).

    v is tight when x(P_v) equals delta_t for some target t below v.
    """
    tree = poly.inst.tree
    sums = path_sums(tree, x)
    below: dict[int, set] = {}
    for v in reversed(tree.order):
        acc = {poly.delta[v]} if v in poly.targets else set()
        for c in tree.children[v]:
            acc |= below[c]
        below[v] = acc
    loose, tight = set(), set()
    for v in x.support:
        (tight if sums[v] in below[v] else loose).add(v)
    return loose, tight


def round_loose(x: FractionalSolution, poly: TreePolytope) -> frozenset:
    """Integral protecting set: tight vertices at value >= 1 plus every loose vertex."""
    if not poly.contains(x):
        raise PreconditionViolated("point is not in the polytope")
    if any(d != 1 for t, d in poly.delta.items()):
        raise PreconditionViolated("rounding needs unit coverage requirements")
    loose, tight = classify_supports(x, poly)
    return frozenset(loose | {v for v in tight if x[v] >= 1})


# ---------------------------------------------------------------------------
# windows: the subtree slab between two levels, as a standalone instance


@dataclass(frozen=True, eq=False)
class Window:
    """Levels (low, high] of a tree, with levels <= low contracted into a new root."""

    tree: RootedTree
    to_old: tuple[int, ...]  # window id -> original id (root maps to original root)
    from_old: Mapping[int, int]
    low: int

    def leaf_of(self, orig_tree: RootedTree, t: int) -> int:
        """Window leaf covering original target t."""
        return self.from_old[orig_tree.ancestor_at(t, self.low + self.tree.height)]


def make_window(tree: RootedTree, low: int, high: int, targets: Iterable[int]) -> Window | None:
    """Window keeping only vertices with a target in their subtree; None if empty."""
    targets = set(targets)
    keep = set()
    for t in targets:
        if tree.level[t] > low:
            for v in tree.path(t):
                if low < tree.level[v] <= high:
                    keep.add(v)
    if not keep:
        return None
    to_old = [tree.root] + [v for v in tree.order if v in keep]
    from_old = {v: i for i, v in enumerate(to_old)}
    edges = []
    for v in to_old[1:]:
        p = tree.parent[v]
        edges.append((from_old[p] if tree.level[v] > low + 1 else 0, from_old[v]))
    wtree = build_tree(edges, 0)
    return Window(wtree, tuple(to_old), from_old, low)


def _suffix_min(values: list[Fraction]) -> list[Fraction]:
    out = list(values)
    for i in range(len(out) - 2, -1, -1):
        out[i] = min(out[i], out[i + 1])
    return out


def _differences(prefix: list[Fraction]) -> list[Fraction]:
    return [prefix[0]] + [prefix[i] - prefix[i - 1] for i in range(1, len(prefix))]


def _floor_multiple(value: Fraction, step: Fraction) -> Fraction:
    return step * math.floor(value / step)


def _ceil_multiple(value: Fraction, step: Fraction) -> Fraction:
    return step * math.ceil(value / step)


def sparsify(x: FractionalSolution, inst: SrmfcInstance, eps, gamma, h1: int, h2: int,
             delta: Mapping[int, Fraction] | None = None, targets: Iterable[int] | None = None,
             check_levels: bool = True) -> FractionalSolution:
    """Sparsify a point of Q_{1,delta} so that support values are bounded away from 0.

    Within levels (h2, h1] the point is replaced by a rounded LP vertex whose
    values are multiples of eps*gamma; values on levels <= h2 are rounded down
    to multiples of eps*gamma/h2. Everything above h1 is kept.
    """
    eps, gamma = Fraction(eps), Fraction(gamma)
    tree = inst.tree
    L = tree.height
    if not (0 < eps <= Fraction(1, 2)) or not (0 < gamma <= 1):
        raise PreconditionViolated("need 0 < eps <= 1/2 and 0 < gamma <= 1")
    if not (0 <= h2 <= h1 <= L):
        raise PreconditionViolated("need 0 <= h2 <= h1 <= L")
    if check_levels:
        if h1 < L and inst.budget(h1 + 1) < Fraction(L) / eps:
            raise PreconditionViolated("budget above h1 is too small")
        if h2 < h1 and inst.budget(h2 + 1) < Fraction(h1) / eps:
            raise PreconditionViolated("budget above h2 is too small")
    poly = TreePolytope(inst, ONE, targets, delta)
    if not poly.contains(x):
        raise PreconditionViolated("input point is not in Q_{1,delta}")
    step = eps * gamma
    out = dict(x.values)
    window = make_window(tree, h2, h1, poly.targets) if h1 > h2 else None
    if window is not None:
        out.update(_sparsify_window(x, inst, poly, window, h1, h2, step))
    if h2 > 0:
        bottom_step = step / h2
        for v in list(out):
            if tree.level[v] <= h2:
                out[v] = _floor_multiple(out[v], bottom_step)
    return FractionalSolution(out)


def _sparsify_window(x, inst, poly, window: Window, h1, h2, step) -> dict:
    tree = inst.tree
    wtree = window.tree
    below = x.mass(v for v in x.support if tree.level[v] <= h2)
    prefixes = inst.prefixes()
    per_level = _level_mass(tree, x)
    depth = wtree.height
    caps = [prefixes[h2 + j - 1] - below for j in range(1, depth + 1)]
    # the last window level also carries every constraint above it
    above = ZERO
    last = caps[-1]
    for lvl in range(h2 + depth + 1, tree.height + 1):
        above += per_level[lvl]
        last = min(last, prefixes[lvl - 1] - below - above)
    caps[-1] = last
    caps = _suffix_min(caps)
    winst = SrmfcInstance(wtree, _differences(caps))

    in_window = FractionalSolution(
        {window.from_old[v]: val for v, val in x.values.items() if v in window.from_old and v != tree.root}
    )
    wdelta = {}
    for t in poly.targets:
        if tree.level[t] > h2:
            w = window.leaf_of(tree, t)
            need = _floor_multiple(in_window.mass(wtree.path(w)), step)
            wdelta[w] = max(wdelta.get(w, ZERO), need)
    forbidden = frozenset(v for v in wtree.non_root() if v not in in_window.support)
    wpoly = TreePolytope(winst, ONE, frozenset(wdelta), wdelta, forbidden)
    vertex = solve_vertex(wpoly)
    if vertex is lp.INFEASIBLE:  # cannot happen: in_window is feasible
        raise AssertionError("window polytope unexpectedly empty")
    loose, tight = classify_supports(vertex, wpoly)
    replaced = {}
    for wv in wtree.non_root():
        val = vertex[wv]
        if wv in loose:
            val = _ceil_multiple(val, step)
        elif wv in tight:
            val = _floor_multiple(val, step)
        replaced[window.to_old[wv]] = val
    # window vertices pruned for lack of targets drop to zero
    for v in x.support:
        if h2 < tree.level[v] <= h1 and v not in window.from_old:
            replaced[v] = ZERO
    return replaced


def sparsify_for_exploration(x: FractionalSolution, inst: SrmfcInstance, eps, h_top: int,
                             h_low: int, targets=None) -> tuple[FractionalSolution, bool]:
    """Sparsify with gamma = 1 on (h_low, h_top] and rescale by 1/(1-2eps).

    Returns the point and whether it was rescaled (skipped when eps >= 1/2).
    """
    eps = Fraction(eps)
    y = sparsify(x, inst, eps, 1, h_top, h_low, targets=targets)
    if eps < Fraction(1, 2):
        return y.scaled(1 / (1 - 2 * eps)), True
    return y, False


def layer_levels(eps, L: int, k: int) -> list[int]:
    """h_0 = L, h_i = ceil(log_{1+eps}(h_{i-1}/eps^2)) + 1, clamped to L."""
    eps = Fraction(eps)
    hs = [L]
    for _ in range(k):
        hs.append(min(L, ceil_log(1 + eps, Fraction(hs[-1]) / eps ** 2) + 1))
    return hs


def ceil_log(base: Fraction, value: Fraction) -> int:
    """Smallest integer j with base**j >= value (base > 1)."""
    base, value = Fraction(base), Fraction(value)
    if value <= 0:
        raise ValueError("logarithm of a nonpositive number")
    j = 0
    power = Fraction(1)
    if value <= 1:
        while power / base >= value:
            power /= base
            j -= 1
        return j
    while power < value:
        power *= base
        j += 1
    return j


def round_layered(y: FractionalSolution, k: int, eps, inst: SrmfcInstance,
                  targets: Iterable[int] | None = None) -> frozenset:
    """Round y in Q_alpha with no support on V_<=h_k, one slab at a time."""
    eps = Fraction(eps)
    tree = inst.tree
    goal = tree.leaves if targets is None else frozenset(targets)
    hs = layer_levels(eps, tree.height, k)
    if any(tree.level[v] <= hs[k] for v in y.support):
        raise PreconditionViolated("support reaches into the protected bottom levels")
    result: set[int] = set()
    for i in range(1, k + 1):
        low, high = hs[i], hs[i - 1]
        if low >= high:
            continue
        slab = [t for t in goal
                if y.mass(v for v in tree.path(t) if low < tree.level[v] <= high) >= Fraction(1, k)]
        window = make_window(tree, low, high, slab)
        if window is None:
            continue
        wtree = window.tree
        scaled = FractionalSolution({window.from_old[v]: k * val for v, val in y.values.items()
                                     if v in window.from_old and v != tree.root})
        masses = _level_mass(wtree, scaled)[1:]
        winst = SrmfcInstance(wtree, masses)
        wtargets = frozenset(window.leaf_of(tree, t) for t in slab)
        wpoly = TreePolytope(winst, ONE, wtargets)
        vertex = solve_vertex(wpoly)
        if vertex is lp.INFEASIBLE:  # scaled is feasible, so this cannot happen
            raise AssertionError("slab polytope unexpectedly empty")
        result |= {window.to_old[v] for v in round_loose(vertex, wpoly)}
    return frozenset(result)
