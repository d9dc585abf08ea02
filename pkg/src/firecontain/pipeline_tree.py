"""End-to-end tree solvers: compression, exploration, bottom DP and top rounding.

Each stretch candidate alpha is turned into a compressed instance, the
chosen exploration variant proposes leaf partitions, and every partition is
solved as a bottom instance (levels up to the threshold, exactly by DP) plus
a top instance (levels above it, by LP rounding). The combined set is mapped
back to the input tree and measured there, so every reported stretch is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from . import lp
from .compress_tree import alpha_candidates, compress, prepare_candidate
from .dp_tree import DEFAULT_TABLE_LIMIT, dp_min_stretch
from .errors import NoSolutionFound, ParameterOutOfRange
from .explore_tree import ExploreLimits, explore, thresholds
from .lp_tree import (TreePolytope, layer_levels, make_window, min_stretch, round_layered,
                      round_loose, solve_vertex)
from .tree_core import (INFINITE, RmfcInstance, RootedTree, SrmfcInstance, level_counts,
                        levelize_solution, normalize_targets, relabel, stretch_of)

MODES = ("two_approx", "budget_4eps", "three_approx")
ROUTES = {"two_approx": "efficient", "budget_4eps": "basic", "three_approx": "mixing"}


@dataclass
class PipelineLimits:
    explore: ExploreLimits = field(default_factory=ExploreLimits)
    table_limit: int = DEFAULT_TABLE_LIMIT
    max_candidates: int | None = None


@dataclass
class SrmfcResult:
    protect: frozenset
    alpha: Fraction
    candidate: Fraction | None  # the stretch guess that produced the solution
    truncated: bool
    certified: bool  # stretch <= (1+17eps) * candidate was reached
    eps_in_guarantee_range: bool
    partitions_tried: int = 0
    candidates_tried: int = 0

    @property
    def guaranteed(self) -> bool:
        """Whether the run may claim the (1+17eps) guarantee."""
        return self.certified and not self.truncated and self.eps_in_guarantee_range


@dataclass
class RmfcResult:
    protect: frozenset
    budget: int  # largest number of protected vertices on one level
    guess: int  # the guessed optimum budget that succeeded
    stretch: Fraction  # cumulative stretch before levelizing, against the guess
    mode: str
    truncated: bool
    guarantee: str


def _truncate(tree: RootedTree, h: int, targets: Iterable[int]):
    """Bottom instance tree: levels <= h, with every target replaced by its level-min(h, depth) ancestor."""
    targets = list(targets)
    window = make_window(tree, 0, h, targets)
    if window is None:
        return None
    mapped = {window.from_old[tree.ancestor_at(t, min(tree.level[t], h))] for t in targets}
    return window, frozenset(mapped)


def solve_bottom(inst: SrmfcInstance, h: int, targets, table_limit=DEFAULT_TABLE_LIMIT):
    """Exact optimum of the bottom instance; a protecting set in `inst` ids or None."""
    targets = frozenset(targets)
    if not targets:
        return frozenset()
    cut = _truncate(inst.tree, h, targets)
    if cut is None:
        return None
    window, wtargets = cut
    budgets = inst.budgets[:window.tree.height]
    alpha, found = dp_min_stretch(SrmfcInstance(window.tree, budgets), wtargets, table_limit)
    if found is None:
        return None
    return frozenset(window.to_old[v] for v in found)


def solve_top_loose(inst: SrmfcInstance, h: int, targets, alpha):
    """Top instance via an LP vertex at stretch alpha avoiding V_<=h, then loose rounding."""
    targets = frozenset(targets)
    if not targets:
        return frozenset()
    tree = inst.tree
    low = frozenset(v for v in tree.non_root() if tree.level[v] <= h)
    poly = TreePolytope(inst, alpha, targets, None, low)
    x = solve_vertex(poly)
    if x is lp.INFEASIBLE:
        return None
    return round_loose(x, poly)


def solve_top_layered(inst: SrmfcInstance, eps, targets, layers: int = 2):
    """Top instance via the cheapest fractional point avoiding V_<=h_layers, then slab rounding."""
    targets = frozenset(targets)
    if not targets:
        return frozenset()
    tree = inst.tree
    floor_level = layer_levels(eps, tree.height, layers)[layers]
    low = [v for v in tree.non_root() if tree.level[v] <= floor_level]
    alpha, y = min_stretch(inst, targets, low)
    if y is None:
        return None
    return round_layered(y, layers, eps, inst, targets)


def _solve_partition(comp: SrmfcInstance, eps, route: str, th, bottom, top, table_limit):
    if route == "efficient":
        h = th.h_hat
        top_set = solve_top_loose(comp, h, top, 1 + 7 * eps)
    else:
        h = th.h_check
        top_set = solve_top_layered(comp, eps, top)
    if top_set is None:
        return None
    bottom_set = solve_bottom(comp, h, bottom, table_limit)
    if bottom_set is None:
        return None
    return bottom_set | top_set


def _search(inst: SrmfcInstance, eps, route: str, limits: PipelineLimits,
            accept: Callable[[Fraction, Fraction], bool], candidates: list[Fraction]):
    """Shared candidate loop; returns (best set, best stretch, its candidate, flags...)."""
    eps = Fraction(eps)
    best, best_alpha, best_cand = None, INFINITE, None
    truncated = False
    certified = False
    tried_parts = 0
    tried = 0
    for cand in candidates:
        if limits.max_candidates is not None and tried >= limits.max_candidates:
            truncated = True
            break
        prepared = prepare_candidate(inst, cand)
        if prepared is None:
            continue
        tried += 1
        cur, lifter = prepared
        packed = compress(cur, eps, lifter)
        comp = packed.inst
        th = thresholds(eps, comp)
        depth = th.h_hat if route == "efficient" else th.h_check
        result = explore(comp, th, route, limits.explore, h=depth, shortcut=True)
        truncated |= result.truncated
        for part in result.partitions:
            tried_parts += 1
            found = _solve_partition(comp, eps, route, th, part.bottom, part.top, limits.table_limit)
            if found is None:
                continue
            lifted = packed.lifter.lift(found)
            s = stretch_of(inst, lifted)
            if s < best_alpha:
                best, best_alpha, best_cand = lifted, s, cand
            if accept(s, cand):
                certified = True
        if certified:
            break
    return best, best_alpha, best_cand, truncated, certified, tried_parts, tried


def _prefilter(inst: SrmfcInstance, eps) -> list[Fraction]:
    """Stretch candidates that survive the fractional lower bound alpha_LP / (1+eps)."""
    lp_alpha, _ = min_stretch(inst)
    if lp_alpha is lp.INFEASIBLE:
        return []
    floor = lp_alpha / (1 + Fraction(eps))
    return [a for a in alpha_candidates(inst) if a >= floor]


def solve_srmfc(inst: SrmfcInstance, eps, limits: PipelineLimits | None = None,
                targets: Iterable[int] | None = None) -> SrmfcResult:
    """(1+17eps)-approximate protecting set for the smooth problem.

    Candidates are tried in increasing order; the loop stops at the first one
    whose lifted solution has stretch at most (1+17eps) times the candidate.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ParameterOutOfRange("eps must lie in (0, 1)")
    limits = limits or PipelineLimits()
    in_range = eps <= Fraction(1, 7)
    if targets is not None:
        targets = frozenset(targets)
        if not targets:
            return SrmfcResult(frozenset(), Fraction(0), None, False, True, in_range)
        tree, old_ids = normalize_targets(inst.tree, targets)
        work = SrmfcInstance(tree, inst.budgets[:tree.height])
    else:
        work, old_ids = inst, None
    candidates = _prefilter(work, eps)
    ratio = 1 + 17 * eps
    best, alpha, cand, truncated, certified, parts, tried = _search(
        work, eps, "efficient", limits, lambda s, c: s <= ratio * c, candidates)
    if best is None:
        if truncated:
            raise NoSolutionFound("search limits stopped every candidate before a solution was found")
        raise NoSolutionFound("no candidate produced a protecting set")
    if old_ids is not None:
        best = relabel(best, old_ids)
    return SrmfcResult(best, alpha, cand, truncated, certified, in_range, parts, tried)


def _target_budget(mode: str, eps: Fraction, guess: int) -> int:
    if mode == "two_approx":
        return 2 * guess
    if mode == "budget_4eps":
        return math.ceil((4 + eps) * guess)
    return 3 * guess


def two_approx_eps(eps) -> Fraction:
    """Largest eps <= the requested one with ceil((1+17eps)B) <= 2B for every B."""
    return min(Fraction(eps), Fraction(1, 17))


def solve_rmfc(tree: RootedTree | RmfcInstance, mode: str = "two_approx", eps=Fraction(1, 7),
               limits: PipelineLimits | None = None, targets: Iterable[int] | None = None) -> RmfcResult:
    """Per-level budget solution for the classical problem by guessing the optimum budget.

    Guesses B = 1, 2, ... and stops at the first one where the mode's pipeline
    returns a set whose cumulative stretch s gives ceil(s*B) within the mode's
    target (2B, ceil((4+eps)B) or 3B); the set is then levelized.
    """
    if mode not in MODES:
        raise ParameterOutOfRange(f"unknown mode {mode!r}")
    eps = Fraction(eps)
    if not 0 < eps <= Fraction(1, 2):
        raise ParameterOutOfRange("eps must lie in (0, 1/2]")
    if isinstance(tree, RmfcInstance):
        tree = tree.tree
    limits = limits or PipelineLimits()
    old_ids = None
    if targets is not None:
        targets = frozenset(targets)
        if not targets:
            return RmfcResult(frozenset(), 0, 0, Fraction(0), mode, False, "trivial")
        tree, old_ids = normalize_targets(tree, targets)
    route = ROUTES[mode]
    run_eps = two_approx_eps(eps) if mode == "two_approx" else eps
    any_truncated = False
    for guess in range(1, tree.vertex_count):
        smooth = SrmfcInstance(tree, (Fraction(guess),) * tree.height)
        goal = _target_budget(mode, eps, guess)
        # at the true optimum the candidate alpha = opt stretch <= 1 succeeds
        candidates = [a for a in _prefilter(smooth, run_eps) if a <= 1]
        best, s, _, truncated, _, _, _ = _search(
            smooth, run_eps, route, limits, lambda st, c: math.ceil(st * guess) <= goal, candidates)
        any_truncated |= truncated
        if best is None or math.ceil(s * guess) > goal:
            continue
        flat = levelize_solution(best, smooth, s)
        budget = max(level_counts(tree, flat), default=0)
        if old_ids is not None:
            flat = relabel(flat, old_ids)
        label = _guarantee(mode, eps) if not any_truncated else "none (search truncated)"
        return RmfcResult(flat, budget, guess, s, mode, any_truncated, label)
    raise NoSolutionFound("no budget guess produced a solution")


def _guarantee(mode: str, eps: Fraction) -> str:
    if mode == "two_approx":
        return "2 * B_OPT"
    if mode == "budget_4eps":
        return f"ceil((4 + {eps}) * B_OPT)"
    return "3 * B_OPT"
