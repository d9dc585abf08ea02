"""LP-guided guessing on compressed tree instances.

All four search variants run on one memoized recursion. A node solves the
covering LP for its forbidden set D, sparsifies the vertex, and branches on
subsets of the sparsified support near the root. Leaves of the search emit
candidate partitions (bottom-protected leaves, top-protected leaves).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import lp
from .errors import EmptyCollection, ResourceCap
from .lp_tree import (FractionalSolution, TreePolytope, ceil_log, solve_vertex,
                      sparsify_for_exploration)
from .tree_core import RootedTree, SrmfcInstance

VARIANTS = ("basic", "mixing", "thinned", "efficient")
INF = math.inf


@dataclass(frozen=True)
class ExploreThresholds:
    eps: Fraction
    h_hat: int
    h_check: int
    kappa: int
    N: int
    zeta_bar: Fraction
    height: int
    raw_h_hat: int
    raw_h_check: int

    @property
    def guarantee_eps(self) -> bool:
        """Whether eps lies in the range where the search guarantees are proven."""
        return self.eps <= Fraction(1, 7)


def thresholds(eps, inst: SrmfcInstance, N: int | None = None) -> ExploreThresholds:
    eps = Fraction(eps)
    if not 0 < eps <= Fraction(1, 2):
        raise ValueError("eps must lie in (0, 1/2]")
    base = 1 + eps
    L = inst.height
    raw_hat = ceil_log(base, Fraction(L) / eps ** 2) + 1
    raw_check = ceil_log(base, Fraction(raw_hat) / eps ** 2) + 1
    h_hat, h_check = min(raw_hat, L), min(raw_check, L)
    if N is None:
        N = math.ceil(4 / eps)
    kappa = ceil_log(base, (1 + 3 * eps) * N / eps ** 2)
    zeta = (2 * N / eps ** 3) * (h_check ** 2 * inst.prefix(h_check) + 2 * kappa * inst.prefix(h_hat))
    return ExploreThresholds(eps, h_hat, h_check, kappa, N, zeta, L, raw_hat, raw_check)


def gamma_basic(inst: SrmfcInstance, h: int) -> Fraction:
    """Depth budget h*B_<=h + 1 (one guess per core vertex, plus one)."""
    return h * inst.prefix(h) + 1


def gamma_mixing(eps, h: int, N: int) -> Fraction:
    """Depth budget h(1+eps)^h + N."""
    return h * (1 + Fraction(eps)) ** h + N


@dataclass(frozen=True)
class PartitionCandidate:
    bottom: frozenset
    top: frozenset


def gamma_top(y: FractionalSolution, tree: RootedTree, h: int, eps, targets=None) -> frozenset:
    """Leaves whose path mass above level h is at least 1 - eps."""
    eps = Fraction(eps)
    goal = tree.leaves if targets is None else targets
    return frozenset(t for t in goal
                     if y.mass(v for v in tree.path(t) if tree.level[v] > h) >= 1 - eps)


def blocked_top(tree: RootedTree, chosen: Iterable[int], h: int) -> frozenset:
    """Union of P_v and the part of T_v on levels <= h."""
    out = set()
    for v in chosen:
        out.update(tree.path(v))
        out.update(u for u in tree.subtree(v) if tree.level[u] <= h)
    return frozenset(out)


def blocked_dropped(tree: RootedTree, chosen: Iterable[int], th: ExploreThresholds) -> frozenset:
    """Like blocked_top, but vertices above h_check only block kappa levels of their subtree."""
    out = set()
    for v in chosen:
        out.update(tree.path(v))
        lv = tree.level[v]
        if lv <= th.h_check:
            out.update(u for u in tree.subtree(v) if tree.level[u] <= th.h_check)
        else:
            reach = min(lv + th.kappa, th.h_hat)
            out.update(u for u in tree.subtree(v) if tree.level[u] <= reach)
    return frozenset(out)


def partitions_from_point(y: FractionalSolution, h: int, tree: RootedTree,
                          max_support: int = 16, targets=None) -> list[PartitionCandidate]:
    """One partition per subset G of the low support: the bottom side is every leaf below G."""
    goal = tree.leaves if targets is None else frozenset(targets)
    low = sorted(v for v in y.support if tree.level[v] <= h)
    if len(low) > max_support:
        raise ResourceCap(f"{len(low)} low support vertices exceed the limit {max_support}")
    below = {v: frozenset(tree.leaves_under(v)) & goal for v in low}
    seen, out = set(), []
    for size in range(len(low) + 1):
        for group in itertools.combinations(low, size):
            bottom = frozenset().union(*(below[v] for v in group))
            if bottom not in seen:
                seen.add(bottom)
                out.append(PartitionCandidate(bottom, goal - bottom))
    return out


def mix(points: Sequence[FractionalSolution]) -> FractionalSolution:
    """Pointwise average."""
    if not points:
        raise EmptyCollection("cannot average an empty collection")
    total: dict = {}
    for p in points:
        for v, x in p.values.items():
            total[v] = total.get(v, Fraction(0)) + x
    return FractionalSolution({v: x / len(points) for v, x in total.items()})


@dataclass
class ExploreLimits:
    max_nodes: int = 20_000
    max_partitions: int = 10_000
    max_support: int = 12


@dataclass
class ExploreResult:
    partitions: list[PartitionCandidate]
    truncated: bool
    nodes: int  # calls of the recursion, as if nothing were memoized
    expanded: int  # calls actually evaluated
    bound_violations: list = field(default_factory=list)
    eps_in_guarantee_range: bool = True
    shortcut: bool = False
    max_low_support: int = 0


class _Stop(Exception):
    pass


class _Explorer:
    """Memoized recursion shared by all variants.

    A state is (D, budget, s) with s the number of points still to be
    collected. Emission only depends on every target's mass above the
    threshold level, so each state returns the set of achievable sums of
    those projected masses over the points it will still collect, together
    with the number of recursive calls below it. Both are independent of the
    points collected earlier on the path, which keeps the memo small while
    the node counts stay those of the plain recursion.
    """

    def __init__(self, inst, th, variant, h, limits, targets=None, check_bounds=False, points=None):
        self.inst = inst
        self.N = th.N if points is None else points
        self.tree = inst.tree
        self.th = th
        self.variant = variant
        self.h = h
        self.limits = limits
        self.targets = self.tree.leaves if targets is None else frozenset(targets)
        self.order = sorted(self.targets)
        self.points: dict[frozenset, FractionalSolution | None] = {}
        self.projections: dict[frozenset, tuple] = {}
        self.memo: dict = {}
        self.expanded = 0
        self.truncated = False
        self.partitions: set[frozenset] = set()
        self.check_bounds = check_bounds
        self.violations: list = []
        self.max_low = 0
        self.n_free = self.tree.vertex_count - 1
        if check_bounds:
            eps = th.eps
            self.c_exp = Fraction(self.N) / eps ** 3 + 1
            self.gamma_L = support_bound(inst, th)

    # -- points ------------------------------------------------------------
    def point(self, forbidden: frozenset) -> FractionalSolution | None:
        if forbidden not in self.points:
            poly = TreePolytope(self.inst, 1, self.targets, None, forbidden)
            x = solve_vertex(poly)
            if x is lp.INFEASIBLE:
                self.points[forbidden] = None
            else:
                y, _ = sparsify_for_exploration(x, self.inst, self.th.eps, self.th.h_hat,
                                                self.th.h_check, targets=self.targets)
                self.points[forbidden] = y
                tree = self.tree
                self.projections[forbidden] = tuple(
                    y.mass(v for v in tree.path(t) if tree.level[v] > self.h) for t in self.order)
        return self.points[forbidden]

    def top_of(self, total: tuple) -> frozenset:
        need = (1 - self.th.eps) * self.N
        return frozenset(t for t, m in zip(self.order, total) if m >= need)

    def note_partition(self, top: frozenset) -> None:
        if top not in self.partitions:
            self.partitions.add(top)
            if len(self.partitions) >= self.limits.max_partitions:
                self.truncated = True
                raise _Stop

    # -- recursion -----------------------------------------------------------
    def canonical_budget(self, forbidden, budget, remaining):
        free = self.n_free - len(forbidden)
        if self.variant == "efficient":
            enough = free * self.n_free
        else:
            enough = free + remaining + 1
        return INF if budget >= enough else budget

    def run(self, forbidden: frozenset, budget, remaining: int):
        key = (forbidden, self.canonical_budget(forbidden, budget, remaining), remaining)
        if key in self.memo:
            result = self.memo[key]
        else:
            if self.expanded >= self.limits.max_nodes:
                self.truncated = True
                raise _Stop
            self.expanded += 1
            result = self._expand(forbidden, budget, remaining)
            self.memo[key] = result
        self._check(result[1], budget, remaining)
        return result

    def _check(self, count, budget, remaining):
        if not self.check_bounds or self.variant != "efficient" or budget == INF:
            return
        if not bound_holds(count, self.c_exp, budget, self.gamma_L + 1, remaining):
            self.violations.append((count, budget, remaining))

    def _expand(self, forbidden, budget, remaining):
        count = 1
        sums: set[tuple] = set()
        if self.variant != "efficient" and budget <= 0:
            return frozenset(), count
        y = self.point(forbidden)
        if y is None:
            return frozenset(), count
        tree = self.tree
        depth = self.h
        low = sorted(v for v in y.support if tree.level[v] <= depth)
        self.max_low = max(self.max_low, len(low))
        if len(low) > self.limits.max_support:
            raise ResourceCap(f"{len(low)} low support vertices exceed {self.limits.max_support}")
        mine = self.projections[forbidden]

        def descend(d2, b2, r2, add_own):
            nonlocal count
            sub, c = self.run(d2, b2, r2)
            count += c
            if add_own:
                sums.update(_add(mine, s) for s in sub)
            else:
                sums.update(sub)

        if self.variant == "basic":
            for chosen in _subsets(low):
                if not chosen:
                    for part in partitions_from_point(y, depth, tree, self.limits.max_support, self.targets):
                        self.note_partition(part.top)
                else:
                    descend(forbidden | frozenset(chosen), budget - 1, remaining, False)
            return frozenset(), count

        if self.variant == "efficient":
            for lvl in range(1, depth + 1):
                layer = [v for v in low if tree.level[v] == lvl]
                if not layer or len(layer) > budget:
                    continue
                need = self.th.eps / self.N * self.inst.budget(lvl)
                for chosen in _subsets(layer):
                    if chosen and len(chosen) >= need:
                        descend(forbidden | frozenset(chosen), budget - len(layer), remaining, False)
            if remaining == 1:
                sums.add(mine)
                return frozenset(sums), count
            for top_set, dropped in _disjoint_tuples(low, 2):
                d2 = forbidden | blocked_top(tree, top_set, depth) | blocked_dropped(tree, dropped, self.th)
                descend(d2, budget, remaining - 1, True)
            return frozenset(sums), count

        # mixing and thinned
        parts = 2 if self.variant == "mixing" else 3
        for groups in _disjoint_tuples(low, parts):
            core = groups[0]
            if not core and remaining == 1:
                sums.add(mine)
                continue
            d2 = forbidden | frozenset(core) | blocked_top(tree, groups[1], depth)
            if parts == 3:
                d2 |= blocked_dropped(tree, groups[2], self.th)
            if core:
                descend(d2, budget - 1, remaining, False)
            else:
                descend(d2, budget - 1, remaining - 1, True)
        return frozenset(sums), count


def _add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def support_bound(inst: SrmfcInstance, th: ExploreThresholds) -> int:
    """Upper bound on the low support of a sparsified point (the gamma_eps * L term)."""
    eps = th.eps
    return math.ceil((1 + 3 * eps) / eps * (th.h_check * inst.prefix(th.h_check) + inst.prefix(th.h_hat)))


def _subsets(items: Sequence[int]):
    for size in range(len(items) + 1):
        yield from itertools.combinations(items, size)


def _disjoint_tuples(items: Sequence[int], parts: int):
    """All tuples of `parts` disjoint subsets of items (the rest stays unassigned).

    Ordered by total assigned size, so the all-empty choice comes first.
    """
    labelled = []
    for labels in itertools.product(range(parts + 1), repeat=len(items)):
        groups = tuple(tuple(v for v, lab in zip(items, labels) if lab == p + 1) for p in range(parts))
        labelled.append((sum(len(g) for g in groups), labels, groups))
    labelled.sort(key=lambda t: (t[0], t[1]))
    for _, _, groups in labelled:
        yield groups


def bound_holds(count: int, c_exp: Fraction, zeta, d_exp: int, s: int) -> bool:
    """Exact test of count <= 2^(c_exp*zeta) * 3^(d_exp*s)."""
    e = Fraction(c_exp) * Fraction(zeta)
    # count^q <= 2^p * 3^(d_exp*s*q)
    p, q = e.numerator, e.denominator
    if p < 0:
        return False
    if count.bit_length() * q <= p:  # count^q < 2^p already
        return True
    return count ** q <= (2 ** p) * (3 ** (d_exp * s * q))


def explore(inst: SrmfcInstance, th: ExploreThresholds, variant: str = "efficient",
            limits: ExploreLimits | None = None, h: int | None = None, budget=None,
            targets=None, shortcut: bool = False, check_bounds: bool = False,
            points: int | None = None) -> ExploreResult:
    """Run one search variant from D = {} and Y = () and collect emitted partitions.

    `budget` is the depth budget gamma (basic, mixing, thinned) or the bulk
    guessing budget zeta (efficient); defaults follow the presets above.
    `points` is how many collected points are averaged before emitting; it
    defaults to ceil(1/eps) for mixing and to th.N otherwise.
    With `shortcut`, a search whose threshold level is at or above the tree
    height returns the single partition (all leaves, none) without searching:
    no vertex lies above the threshold, so it is the only partition whose top
    side can be solved.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    limits = limits or ExploreLimits()
    depth = h if h is not None else (th.h_check if variant == "basic" else th.h_hat)
    if variant in ("thinned", "efficient"):
        depth = th.h_hat
    if points is None:
        points = math.ceil(1 / th.eps) if variant == "mixing" else th.N
    if budget is None:
        if variant == "efficient":
            budget = th.zeta_bar
        elif variant == "basic":
            budget = gamma_basic(inst, depth)
        else:
            budget = gamma_mixing(th.eps, depth, points)
    engine = _Explorer(inst, th, variant, depth, limits, targets, check_bounds, points)
    goal = engine.targets
    if shortcut and depth >= inst.height:
        return ExploreResult([PartitionCandidate(goal, frozenset())], False, 1, 1, [],
                             th.guarantee_eps, True, 0)
    count = 0
    try:
        sums, count = engine.run(frozenset(), budget, points)
        for total in sums:
            engine.note_partition(engine.top_of(total))
    except _Stop:
        pass
    parts = sorted((PartitionCandidate(goal - top, top) for top in engine.partitions),
                   key=lambda p: (len(p.top), sorted(p.top)))
    return ExploreResult(parts, engine.truncated, count, engine.expanded, engine.violations,
                         th.guarantee_eps, False, engine.max_low)
