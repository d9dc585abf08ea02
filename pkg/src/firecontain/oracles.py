"""Analysis helpers that need a known optimum.

On trees: core and thinned-core vertex sets for a fixed optimal protecting
set. On metrics: the big/small/separable classes of sparsified support pairs
relative to a fixed center set. These exist for the test suite and compute
the objects the searches are argued to guess correctly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .dp_tree import exhaustive_exact
from .errors import PreconditionViolated
from .explore_tree import ExploreThresholds, thresholds
from .tree_core import INFINITE, SrmfcInstance


@dataclass(frozen=True)
class AnalysisContext:
    inst: SrmfcInstance
    opt: frozenset
    th: ExploreThresholds


def build_context(inst: SrmfcInstance, eps, max_vertices: int = 24) -> AnalysisContext:
    """Context with the lexicographically smallest exhaustive optimum; it must be 1-feasible."""
    alpha, opt = exhaustive_exact(inst, max_vertices=max_vertices)
    if alpha is INFINITE or alpha > 1:
        raise PreconditionViolated(f"instance is not 1-feasible (optimal stretch {alpha})")
    return AnalysisContext(inst, frozenset(opt), thresholds(eps, inst))


def core_vertices(ctx: AnalysisContext, h: int) -> frozenset:
    """Strict ancestors (root excluded) of the optimum's vertices on levels <= h."""
    tree = ctx.inst.tree
    core = set()
    for v in ctx.opt:
        if tree.level[v] <= h:
            core.update(u for u in tree.path(v) if u != v)
    bound = h * ctx.inst.prefix(h) if h >= 1 else 0
    if len(core) > bound:
        raise PreconditionViolated(f"core has {len(core)} vertices, above h * B_<=h = {bound}")
    return frozenset(core)


def branching_vertices(ctx: AnalysisContext, core: frozenset) -> frozenset:
    """Core vertices of degree >= 3 in the tree spanned by the core and the root."""
    tree = ctx.inst.tree
    out = set()
    for v in core:
        core_kids = sum(1 for c in tree.children[v] if c in core)
        if 1 + core_kids >= 3:
            out.add(v)
    return frozenset(out)


def _window(tree, v: int, depth: int):
    """T_{v,depth}: v and its descendants at most `depth` levels below it."""
    limit = tree.level[v] + depth
    return (u for u in tree.subtree(v) if tree.level[u] <= limit)


def thinned_core(ctx: AnalysisContext) -> frozenset:
    """Core vertices kept by the thinning rule, with both size bounds checked."""
    tree = ctx.inst.tree
    th = ctx.th
    core = core_vertices(ctx, th.h_hat)
    low_core = core_vertices(ctx, th.h_check)
    marks = {v for v in ctx.opt if tree.level[v] <= th.h_hat} | branching_vertices(ctx, core)
    upper = {v for v in tree.non_root()
             if tree.level[v] > th.h_check and any(u in marks for u in _window(tree, v, th.kappa))}
    thin = frozenset((upper | low_core) - ctx.opt)
    if not thin <= core:
        raise PreconditionViolated("thinned core is not contained in the core")
    low_count = sum(1 for v in thin if tree.level[v] <= th.h_check)
    high_count = len(thin) - low_count
    if low_count > th.h_check * ctx.inst.prefix(th.h_check):
        raise PreconditionViolated("thinned core too large on low levels")
    if high_count > 2 * th.kappa * ctx.inst.prefix(th.h_hat):
        raise PreconditionViolated("thinned core too large on high levels")
    return thin


def thin_bounds(ctx: AnalysisContext) -> tuple[Fraction, Fraction]:
    """The two size limits (low levels, high levels) the thinned core must respect."""
    th = ctx.th
    return (th.h_check * ctx.inst.prefix(th.h_check), 2 * th.kappa * ctx.inst.prefix(th.h_hat))


# ---------------------------------------------------------------------------
# metric side: classifying sparsified support pairs against a fixed optimum


@dataclass(frozen=True)
class PairClasses:
    big: frozenset
    small: frozenset
    sep: frozenset
    non_sep: frozenset
    thin: frozenset


def _close(inst, th, v, lvl, opt, top=None):
    """Optimum centers (w, l') with d(v, w) <= sigma*(r_l + r_l') and l' <= top."""
    top = inst.height if top is None else top
    return [(w, other) for w, other in opt if other <= top
            and inst.space.d(v, w) <= th.sigma * (inst.radius(lvl) + inst.radius(other))]


def _radius_or_last(inst, lvl):
    return inst.radius(min(lvl, inst.height))


def classify_pairs(inst, th, support, opt) -> PairClasses:
    """Split the support pairs on levels <= h_hat by how the optimum's centers sit near them.

    A pair is big when a close optimum center is on its level or below, small
    when no close optimum center is on a level <= h_hat, separated by the
    level-dependent rule, and non-separable otherwise. The thin pairs are a
    greedy maximal subset of the non-separable ones, pairwise more than
    4*sigma*r_l apart on each level.
    """
    big, small, sep, non_sep = set(), set(), set(), set()
    for v, lvl in sorted(p for p in support if p[1] <= th.h_hat):
        if any(other <= lvl for _, other in _close(inst, th, v, lvl, opt)):
            big.add((v, lvl))
        elif not _close(inst, th, v, lvl, opt, th.h_hat):
            small.add((v, lvl))
        elif lvl <= th.h_check:
            (sep if not _close(inst, th, v, lvl, opt, th.h_check) else non_sep).add((v, lvl))
        else:
            near = _close(inst, th, v, lvl, opt, th.h_hat)
            far = th.mu * _radius_or_last(inst, lvl + th.kappa)
            apart = any(inst.space.d(a, b) > far for (a, _), (b, _) in itertools.combinations(near, 2))
            if not _close(inst, th, v, lvl, opt, lvl + th.kappa) and not apart:
                sep.add((v, lvl))
            else:
                non_sep.add((v, lvl))
    thin: list = []
    for v, lvl in sorted(non_sep, key=lambda p: (p[1], p[0])):
        if all(other != lvl or inst.space.d(v, u) > 4 * th.sigma * inst.radius(lvl) for u, other in thin):
            thin.append((v, lvl))
    return PairClasses(frozenset(big), frozenset(small), frozenset(sep), frozenset(non_sep), frozenset(thin))


def nonseparable_cases(inst, th, pair, opt) -> set:
    """Which of the three structural cases (1, 2, 3) hold for a non-separable pair."""
    v, lvl = pair
    close = _close(inst, th, v, lvl, opt)
    out = set()
    if lvl <= th.h_check and any(lvl < other <= th.h_check for _, other in close):
        out.add(1)
    if lvl > th.h_check:
        if any(lvl < other <= lvl + th.kappa for _, other in close):
            out.add(2)
        high = [(w, other) for w, other in close if lvl + th.kappa < other <= th.h_hat]
        far = th.mu * _radius_or_last(inst, lvl + th.kappa)
        if any(inst.space.d(a, b) > far for (a, _), (b, _) in itertools.combinations(high, 2)):
            out.add(3)
    return out
