"""Level transformations (down-push, contraction, splitting) and geometric compression.

Every structural operation reports an `origin` map from new vertex ids to
old ids, and the compression keeps these in a replayable log so that a
solution of the compressed instance can be mapped back to the input tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import (BudgetOutOfRange, LevelOutOfRange, NonzeroBudget,
                     PreconditionViolated)
from .lp_tree import ceil_log
from .tree_core import RootedTree, SrmfcInstance, build_tree, normalize_antichain


class DegenerateTree(PreconditionViolated):
    """Contracting would turn the root into a leaf (the instance is infeasible)."""


@dataclass
class Step:
    op: str
    params: tuple
    origin: tuple[int, ...]  # new id -> id before the step


@dataclass
class Lifter:
    """Replayable log of transformations applied to `source`."""

    source: SrmfcInstance
    steps: list[Step] = field(default_factory=list)

    def record(self, op: str, params: tuple, origin: Iterable[int]) -> None:
        self.steps.append(Step(op, params, tuple(origin)))

    def map_vertex(self, v: int) -> int:
        for step in reversed(self.steps):
            v = step.origin[v]
        return v

    def lift(self, protect: Iterable[int]) -> frozenset[int]:
        """Map a protecting set of the final instance to one of the source instance."""
        mapped = {self.map_vertex(v) for v in protect}
        return normalize_antichain(self.source.tree, mapped)

    def copy(self) -> "Lifter":
        return Lifter(self.source, list(self.steps))


@dataclass
class CompressedInstance:
    inst: SrmfcInstance
    eps: Fraction
    lifter: Lifter


def _identity(tree: RootedTree) -> tuple[int, ...]:
    return tuple(range(tree.vertex_count))


def down_push(inst: SrmfcInstance, lvl: int) -> SrmfcInstance:
    """Move all budget of level lvl onto level lvl-1."""
    if not 2 <= lvl <= inst.height:
        raise LevelOutOfRange(f"down-push needs 2 <= level <= {inst.height}, got {lvl}")
    b = list(inst.budgets)
    b[lvl - 2] += b[lvl - 1]
    b[lvl - 1] = Fraction(0)
    return SrmfcInstance(inst.tree, tuple(b))


def contract_zero_level_mapped(inst: SrmfcInstance, lvl: int) -> tuple[SrmfcInstance, tuple[int, ...]]:
    tree = inst.tree
    if not 1 <= lvl <= tree.height:
        raise LevelOutOfRange(f"level {lvl} outside 1..{tree.height}")
    if inst.budget(lvl) != 0:
        raise NonzeroBudget(f"level {lvl} has budget {inst.budget(lvl)}")
    if tree.height == 1:
        raise DegenerateTree("contracting the only level leaves no tree")
    removed: set[int] = set()
    for v in tree.by_level()[lvl]:
        if not tree.children[v]:
            u = tree.parent[v]
            if u == tree.root:
                raise DegenerateTree("a leaf on level 1 would make the root a leaf")
            removed.update(c for c in tree.subtree(u) if c != u)
    keep = [v for v in tree.order if v not in removed and tree.level[v] != lvl]
    new_id = {v: i for i, v in enumerate(keep)}
    edges = []
    for v in keep:
        if v == tree.root:
            continue
        p = tree.parent[v]
        if tree.level[p] == lvl:
            p = tree.parent[p]
        edges.append((new_id[p], new_id[v]))
    new_tree = build_tree(edges, new_id[tree.root])
    budgets = list(inst.budgets[:lvl - 1]) + list(inst.budgets[lvl:])
    budgets = budgets[:new_tree.height]
    return SrmfcInstance(new_tree, tuple(budgets)), tuple(keep)


def contract_zero_level(inst: SrmfcInstance, lvl: int) -> SrmfcInstance:
    """Bypass every vertex of a zero-budget level."""
    return contract_zero_level_mapped(inst, lvl)[0]


def split_level_mapped(inst: SrmfcInstance, lvl: int, lower) -> tuple[SrmfcInstance, tuple[int, ...]]:
    lower = Fraction(lower)
    tree = inst.tree
    if not 1 <= lvl <= tree.height:
        raise LevelOutOfRange(f"level {lvl} outside 1..{tree.height}")
    if not 0 <= lower <= inst.budget(lvl):
        raise BudgetOutOfRange(f"split budget {lower} outside [0, {inst.budget(lvl)}]")
    origin = list(range(tree.vertex_count))
    twin = {}
    for v in tree.by_level()[lvl]:
        twin[v] = len(origin)
        origin.append(v)
    edges = []
    for v in range(tree.vertex_count):
        if v == tree.root:
            continue
        p = tree.parent[v]
        edges.append((twin.get(p, p), v))
    for v, w in twin.items():
        edges.append((v, w))
    # children of v now hang below its twin
    new_tree = build_tree(edges, tree.root)
    b = list(inst.budgets)
    budgets = b[:lvl - 1] + [lower, b[lvl - 1] - lower] + b[lvl:]
    return SrmfcInstance(new_tree, tuple(budgets)), tuple(origin)


def split_level(inst: SrmfcInstance, lvl: int, lower) -> SrmfcInstance:
    """Replace each level-lvl vertex by an edge; the upper copy gets budget B_lvl - lower."""
    return split_level_mapped(inst, lvl, lower)[0]


def is_compressed(inst: SrmfcInstance, eps) -> bool:
    base = 1 + Fraction(eps)
    return all(p == base ** i for i, p in enumerate(inst.prefixes()))


def compress(inst: SrmfcInstance, eps, lifter: Lifter | None = None) -> CompressedInstance:
    """Geometric compression: prefix budgets become exactly (1+eps)^(l-1)."""
    eps = Fraction(eps)
    if eps <= 0:
        raise PreconditionViolated("eps must be positive")
    if inst.budget(1) < 1:
        raise PreconditionViolated("compression needs B_1 >= 1")
    lifter = lifter.copy() if lifter is not None else Lifter(inst)
    base = 1 + eps
    total = sum(inst.budgets, Fraction(0))
    top = ceil_log(base, total) + 1
    b = list(inst.budgets)
    b[-1] += base ** (top - 1) - total
    cur = SrmfcInstance(inst.tree, tuple(b))
    if b[-1] != inst.budgets[-1]:
        lifter.record("pad", (b[-1] - inst.budgets[-1],), _identity(cur.tree))

    for lvl in range(top - 1, 0, -1):
        target = base ** (lvl - 1)
        prefixes = cur.prefixes()
        k = next(i for i, p in enumerate(prefixes, start=1) if p >= target)
        lower = target - (prefixes[k - 2] if k >= 2 else 0)
        if lower != cur.budget(k):
            cur, origin = split_level_mapped(cur, k, lower)
            lifter.record("split", (k, lower), origin)

    prefixes = cur.prefixes()
    block_ends = [i for i, p in enumerate(prefixes, start=1)
                  if any(p == base ** j for j in range(top))]
    start = 1
    for end in block_ends:
        for lvl in range(end, start, -1):
            if cur.budget(lvl) != 0:
                cur = down_push(cur, lvl)
                lifter.record("down_push", (lvl,), _identity(cur.tree))
        start = end + 1

    for lvl in range(cur.height, 0, -1):
        if lvl <= cur.height and cur.budget(lvl) == 0:
            cur, origin = contract_zero_level_mapped(cur, lvl)
            lifter.record("contract", (lvl,), origin)
    return CompressedInstance(cur, eps, lifter)


def alpha_candidates(inst: SrmfcInstance) -> list[Fraction]:
    """All m / B_<=l with 1 <= m <= n and B_<=l > 0, sorted."""
    n = inst.tree.vertex_count
    out = {Fraction(m) / p for p in inst.prefixes() if p > 0 for m in range(1, n + 1)}
    return sorted(out)


def rescale(inst: SrmfcInstance, alpha) -> SrmfcInstance:
    alpha = Fraction(alpha)
    return SrmfcInstance(inst.tree, tuple(b * alpha for b in inst.budgets))


def reduce_to_compressed(inst: SrmfcInstance, eps, candidates: Iterable[Fraction] | None = None):
    """(alpha, CompressedInstance) for every candidate stretch that survives the reduction.

    Budgets are multiplied by alpha; while B_1 < 1 the first level's budget is
    pushed to level 2 and level 1 is contracted. Candidates for which this
    would make the root a leaf are provably infeasible and are skipped.
    """
    out = []
    for alpha in (alpha_candidates(inst) if candidates is None else candidates):
        prepared = prepare_candidate(inst, alpha)
        if prepared is None:
            continue
        cur, lifter = prepared
        out.append((alpha, compress(cur, eps, lifter)))
    return out


def prepare_candidate(inst: SrmfcInstance, alpha):
    """Scaled instance with B_1 >= 1 and its lifter, or None if alpha is infeasible."""
    cur = rescale(inst, alpha)
    lifter = Lifter(inst)
    while cur.budget(1) < 1:
        if cur.height == 1:
            return None
        b = list(cur.budgets)
        b[1] += b[0]
        b[0] = Fraction(0)
        cur = SrmfcInstance(cur.tree, tuple(b))
        try:
            cur, origin = contract_zero_level_mapped(cur, 1)
        except DegenerateTree:
            return None
        lifter.record("contract", (1,), origin)
    return cur, lifter
