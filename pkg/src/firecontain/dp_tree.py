"""Exact solvers for the smooth tree problem: the budget-vector DP and a brute-force oracle."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

from .errors import ResourceCap
from .tree_core import INFINITE, RootedTree, SrmfcInstance, stretch_of

DEFAULT_TABLE_LIMIT = 200_000


def level_caps(inst: SrmfcInstance) -> list[int]:
    """Per-level integral budget floor(B_<=l) - floor(B_<=l-1)."""
    caps, prev = [], 0
    for p in inst.prefixes():
        cur = math.floor(p)
        caps.append(cur - prev)
        prev = cur
    return caps


def _pareto(table: dict[tuple, frozenset]) -> dict[tuple, frozenset]:
    vecs = sorted(table, key=lambda vec: (sum(vec), vec))
    kept: list[tuple] = []
    for v in vecs:
        if not any(all(a <= b for a, b in zip(k, v)) for k in kept):
            kept.append(v)
    return {v: table[v] for v in kept}


def dp_exact(inst: SrmfcInstance, targets: Iterable[int] | None = None,
             table_limit: int = DEFAULT_TABLE_LIMIT, prune: bool = True):
    """A protecting set with |R cap V_<=l| <= floor(B_<=l) for every l, or None.

    Each vertex stores the achievable usage vectors for protecting every
    target below it, merged child by child. A vector counts protected
    vertices up to each checkpoint level, the last level of every run of
    equal floor(B_<=l); the other prefix constraints are implied by these.
    With `prune` only the componentwise-minimal vectors are kept.
    """
    tree = inst.tree
    goal = tree.leaves if targets is None else frozenset(targets)
    has_target = [False] * tree.vertex_count
    for v in reversed(tree.order):
        has_target[v] = v in goal or any(has_target[c] for c in tree.children[v])
    if not has_target[tree.root]:
        return frozenset()
    floors = [math.floor(p) for p in inst.prefixes()]
    L = len(floors)
    checkpoints = [i for i in range(L) if i == L - 1 or floors[i] < floors[i + 1]]
    caps = [floors[i] for i in checkpoints]
    unit_of = {}
    for lvl in range(1, L + 1):
        if floors[lvl - 1] > 0:
            unit_of[lvl] = tuple(1 if c >= lvl - 1 else 0 for c in checkpoints)
    zero = (0,) * len(checkpoints)
    tables: dict[int, dict[tuple, frozenset] | None] = {}
    for v in reversed(tree.order):
        if not has_target[v]:
            continue
        kids = [c for c in tree.children[v] if has_target[c]]
        if kids:
            merged: dict[tuple, frozenset] | None = {zero: frozenset()}
            for c in kids:
                child = tables[c]
                if not child:
                    merged = None
                    break
                nxt: dict[tuple, frozenset] = {}
                for a, wa in merged.items():
                    for b, wb in child.items():
                        s = tuple(x + y for x, y in zip(a, b))
                        if all(x <= cap for x, cap in zip(s, caps)) and s not in nxt:
                            nxt[s] = wa | wb
                if prune:
                    nxt = _pareto(nxt)
                if len(nxt) > table_limit:
                    raise ResourceCap(f"DP table at vertex {v} exceeds {table_limit} entries")
                merged = nxt
            table = merged or {}
        else:
            table = {}
        if v != tree.root and tree.level[v] in unit_of:
            table = dict(table)
            table.setdefault(unit_of[tree.level[v]], frozenset({v}))
            if prune:
                table = _pareto(table)
        tables[v] = table
        for c in kids:
            tables[c] = None  # free memory
    root_table = tables[tree.root]
    if not root_table:
        return None
    best = min(root_table, key=lambda vec: (vec[-1], vec))
    return root_table[best]


def minimal_cuts(tree: RootedTree, targets: Iterable[int] | None = None, limit: int = 2_000_000):
    """All inclusion-minimal protecting antichains (as frozensets)."""
    goal = tree.leaves if targets is None else frozenset(targets)
    reach = [False] * tree.vertex_count
    for v in reversed(tree.order):
        reach[v] = v in goal or any(reach[c] for c in tree.children[v])
    count = [0]

    def cuts(v):
        kids = [c for c in tree.children[v] if reach[c]]
        options = [] if v == tree.root else [frozenset({v})]
        if v in goal:
            return options
        combos = [frozenset()]
        for c in kids:
            sub = cuts(c)
            combos = [a | b for a in combos for b in sub]
            count[0] += len(combos)
            if count[0] > limit:
                raise ResourceCap("too many protecting sets to enumerate")
        return options + combos

    return cuts(tree.root)


def exhaustive_exact(inst: SrmfcInstance, targets: Iterable[int] | None = None, max_vertices: int = 24):
    """Minimum stretch over all protecting antichains, with the lexicographically smallest witness.

    Returns (alpha, R); alpha is INFINITE when no protecting set fits the budgets.
    """
    tree = inst.tree
    if tree.vertex_count - 1 > max_vertices:
        raise ResourceCap(f"exhaustive search limited to {max_vertices} non-root vertices")
    goal = tree.leaves if targets is None else frozenset(targets)
    if not goal:
        return Fraction(0), frozenset()
    best = None
    for cut in minimal_cuts(tree, goal):
        s = stretch_of(inst, cut, goal)
        key = (s, sorted(cut))
        if best is None or key < best[0]:
            best = (key, cut)
    return best[0][0], best[1]


def is_one_feasible(inst: SrmfcInstance, targets=None) -> bool:
    alpha, _ = exhaustive_exact(inst, targets)
    return alpha is not INFINITE and alpha <= 1


def dp_min_stretch(inst: SrmfcInstance, targets: Iterable[int] | None = None,
                   table_limit: int = DEFAULT_TABLE_LIMIT):
    """Smallest stretch alpha with a protecting set, found by binary search with dp_exact.

    The optimum is max_l |R cap V_<=l| / B_<=l for some R, so it lies among
    the values m / B_<=l; feasibility is monotone in alpha. Returns
    (alpha, R), or (INFINITE, None) when nothing protects the targets.
    """
    tree = inst.tree
    goal = tree.leaves if targets is None else frozenset(targets)
    if not goal:
        return Fraction(0), frozenset()
    n = tree.vertex_count - 1
    ladder = sorted({Fraction(m) / p for p in inst.prefixes() if p > 0 for m in range(1, n + 1)})

    def attempt(alpha):
        scaled = SrmfcInstance(tree, tuple(b * alpha for b in inst.budgets))
        return dp_exact(scaled, goal, table_limit)

    lo, hi, best = 0, len(ladder) - 1, None
    while lo <= hi:
        mid = (lo + hi) // 2
        found = attempt(ladder[mid])
        if found is not None:
            best, hi = found, mid - 1
        else:
            lo = mid + 1
    if best is None:
        return INFINITE, None
    return stretch_of(inst, best, goal), best


def exhaustive_budget(tree: RootedTree, targets: Iterable[int] | None = None, max_vertices: int = 24):
    """Smallest per-level budget B of a protecting set, by enumerating minimal cuts.

    Returns (B, R) with R the lexicographically smallest optimal cut; (0, {})
    when there is nothing to protect.
    """
    if tree.vertex_count - 1 > max_vertices:
        raise ResourceCap(f"exhaustive search limited to {max_vertices} non-root vertices")
    goal = tree.leaves if targets is None else frozenset(targets)
    if not goal:
        return 0, frozenset()
    best = None
    for cut in minimal_cuts(tree, goal):
        counts = [0] * (tree.height + 1)
        for v in cut:
            counts[tree.level[v]] += 1
        key = (max(counts), sorted(cut))
        if best is None or key < best[0]:
            best = (key, cut)
    return best[0][0], best[1]
