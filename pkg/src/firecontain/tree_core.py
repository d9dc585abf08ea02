"""Rooted trees with levels, protection checks and the stretch of a protecting set."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import EmptyTargets, MalformedInput, PreconditionViolated

INFINITE = math.inf


@dataclass(frozen=True, eq=False)
class RootedTree:
    """Immutable rooted tree on vertices 0..n-1.

    `parent[root]` is -1. Levels are distances from the root; `height` is the
    largest level. Leaves are the non-root vertices without children.
    """

    parent: tuple[int, ...]
    root: int
    children: tuple[tuple[int, ...], ...] = field(init=False)
    level: tuple[int, ...] = field(init=False)
    height: int = field(init=False)
    leaves: frozenset[int] = field(init=False)
    order: tuple[int, ...] = field(init=False)  # BFS order from the root

    def __post_init__(self):
        n = len(self.parent)
        kids: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(self.parent):
            if v != self.root:
                kids[p].append(v)
        level = [0] * n
        order = [self.root]
        queue = deque([self.root])
        while queue:
            u = queue.popleft()
            for c in kids[u]:
                level[c] = level[u] + 1
                order.append(c)
                queue.append(c)
        object.__setattr__(self, "children", tuple(tuple(k) for k in kids))
        object.__setattr__(self, "level", tuple(level))
        object.__setattr__(self, "order", tuple(order))
        object.__setattr__(self, "height", max(level))
        object.__setattr__(
            self, "leaves", frozenset(v for v in range(n) if v != self.root and not kids[v])
        )

    @property
    def vertex_count(self) -> int:
        return len(self.parent)

    def non_root(self) -> list[int]:
        return [v for v in range(self.vertex_count) if v != self.root]

    def path(self, v: int) -> list[int]:
        """Vertices from v up to (excluding) the root, v first."""
        out = []
        while v != self.root:
            out.append(v)
            v = self.parent[v]
        return out

    def ancestors(self, v: int) -> list[int]:
        """Strict non-root ancestors of v."""
        return self.path(v)[1:] if v != self.root else []

    def subtree(self, v: int) -> list[int]:
        out, stack = [], [v]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self.children[u])
        return out

    def leaves_under(self, v: int) -> list[int]:
        return [u for u in self.subtree(v) if u in self.leaves]

    def is_ancestor(self, a: int, v: int) -> bool:
        """True if a is an ancestor of v or equal to it."""
        la = self.level[a]
        while self.level[v] > la:
            v = self.parent[v]
        return v == a

    def ancestor_at(self, v: int, lvl: int) -> int:
        while self.level[v] > lvl:
            v = self.parent[v]
        return v

    def by_level(self) -> list[list[int]]:
        rows: list[list[int]] = [[] for _ in range(self.height + 1)]
        for v in self.order:
            rows[self.level[v]].append(v)
        return rows

    def edges(self) -> list[tuple[int, int]]:
        return [(self.parent[v], v) for v in self.order if v != self.root]


def build_tree(edges: Iterable[tuple[int, int]], root: int) -> RootedTree:
    """Build a tree from (parent, child) pairs on vertices 0..n-1."""
    edges = list(edges)
    vertices = {root}
    for p, c in edges:
        vertices.add(p)
        vertices.add(c)
    n = max(vertices) + 1
    if sorted(vertices) != list(range(n)):
        raise MalformedInput("vertex ids must be dense integers 0..n-1")
    parent = [-2] * n
    parent[root] = -1
    for p, c in edges:
        if c == root:
            raise MalformedInput(f"edge {p}->{c} points into the root (cycle)")
        if parent[c] != -2:
            raise MalformedInput(f"vertex {c} has two parents")
        if p == c:
            raise MalformedInput(f"self loop at {c}")
        parent[c] = p
    if n == 1:
        raise MalformedInput("tree needs at least one non-root vertex")
    # every vertex must reach the root without revisiting
    for v in range(n):
        if parent[v] == -2:
            raise MalformedInput(f"vertex {v} is disconnected")
    state = [0] * n  # 0 unknown, 1 on current walk, 2 reaches root
    state[root] = 2
    for v in range(n):
        walk = []
        u = v
        while state[u] == 0:
            state[u] = 1
            walk.append(u)
            u = parent[u]
        if state[u] == 1:
            raise MalformedInput(f"cycle through vertex {u}")
        for w in walk:
            state[w] = 2
    return RootedTree(tuple(parent), root)


@dataclass(frozen=True, eq=False)
class SrmfcInstance:
    """Tree plus a rational budget per level 1..L (index 0 holds level 1)."""

    tree: RootedTree
    budgets: tuple[Fraction, ...]

    def __post_init__(self):
        b = tuple(Fraction(x) for x in self.budgets)
        if len(b) != self.tree.height:
            raise MalformedInput(
                f"need {self.tree.height} budgets, got {len(b)}"
            )
        if any(x < 0 for x in b):
            raise MalformedInput("budgets must be nonnegative")
        object.__setattr__(self, "budgets", b)

    @property
    def height(self) -> int:
        return self.tree.height

    def budget(self, lvl: int) -> Fraction:
        return self.budgets[lvl - 1]

    def prefix(self, lvl: int) -> Fraction:
        """B_{<=lvl}; zero for lvl <= 0."""
        return sum(self.budgets[:max(lvl, 0)], Fraction(0))

    def prefixes(self) -> list[Fraction]:
        out, acc = [], Fraction(0)
        for b in self.budgets:
            acc += b
            out.append(acc)
        return out


@dataclass(frozen=True, eq=False)
class RmfcInstance:
    tree: RootedTree
    budget: int

    def __post_init__(self):
        if self.budget < 0:
            raise MalformedInput("budget must be nonnegative")

    def as_smooth(self) -> SrmfcInstance:
        return SrmfcInstance(self.tree, (Fraction(self.budget),) * self.tree.height)


def normalize_targets(tree: RootedTree, targets: Iterable[int]) -> tuple[RootedTree, list[int]]:
    """Prune the tree so that exactly the minimal target vertices are leaves.

    Returns the new tree and `old_ids`, mapping new vertex ids to ids of `tree`.
    """
    targets = set(targets)
    if not targets:
        raise EmptyTargets("target set is empty")
    if tree.root in targets:
        raise PreconditionViolated("the root cannot be a target")
    minimal = {t for t in targets if not any(a in targets for a in tree.ancestors(t))}
    keep = set()
    for t in minimal:
        keep.update(tree.path(t))
    keep.add(tree.root)
    old_ids = [v for v in tree.order if v in keep and not _below_target(tree, v, minimal)]
    new_id = {v: i for i, v in enumerate(old_ids)}
    edges = [(new_id[tree.parent[v]], new_id[v]) for v in old_ids if v != tree.root]
    return build_tree(edges, new_id[tree.root]), old_ids


def _below_target(tree: RootedTree, v: int, minimal: set[int]) -> bool:
    return any(a in minimal for a in tree.ancestors(v))


def normalize_antichain(tree: RootedTree, protect: Iterable[int]) -> frozenset[int]:
    """Drop every vertex that has a strict ancestor in the set."""
    protect = set(protect)
    return frozenset(v for v in protect if not any(a in protect for a in tree.ancestors(v)))


def check_protection(tree: RootedTree, protect: Iterable[int], targets: Iterable[int] | None = None) -> bool:
    protect = set(protect)
    if tree.root in protect:
        return False
    goal = tree.leaves if targets is None else targets
    return all(any(u in protect for u in tree.path(t)) for t in goal)


def level_counts(tree: RootedTree, protect: Iterable[int]) -> list[int]:
    """Number of protected vertices on each level 1..L (index 0 is level 1)."""
    counts = [0] * tree.height
    for v in protect:
        counts[tree.level[v] - 1] += 1
    return counts


def prefix_usage(tree: RootedTree, protect: Iterable[int]) -> list[int]:
    out, acc = [], 0
    for c in level_counts(tree, protect):
        acc += c
        out.append(acc)
    return out


def stretch_of(inst: SrmfcInstance, protect: Iterable[int], targets: Iterable[int] | None = None):
    """Smallest alpha with |R cap V_<=l| <= alpha * B_<=l for all l.

    Returns `INFINITE` when R does not protect, or when a prefix with zero
    budget already contains a protected vertex.
    """
    protect = set(protect)
    if not check_protection(inst.tree, protect, targets):
        return INFINITE
    best = Fraction(0)
    for used, avail in zip(prefix_usage(inst.tree, protect), inst.prefixes()):
        if used == 0:
            continue
        if avail == 0:
            return INFINITE
        best = max(best, Fraction(used) / avail)
    return best


def levelize_solution(protect: Iterable[int], inst: SrmfcInstance, alpha) -> frozenset[int]:
    """Turn cumulative feasibility for a uniform budget into per-level feasibility.

    Requires |R cap V_<=l| <= alpha*l*B and returns a protecting set with at
    most ceil(alpha*B) vertices on every level.
    """
    alpha = Fraction(alpha)
    tree = inst.tree
    if len(set(inst.budgets)) > 1:
        raise PreconditionViolated("levelize needs a uniform budget profile")
    uniform = inst.budgets[0] if inst.budgets else Fraction(0)
    cap = math.ceil(alpha * uniform)
    current = set(normalize_antichain(tree, protect))
    for lvl, used in enumerate(prefix_usage(tree, current), start=1):
        if used > alpha * lvl * uniform:
            raise PreconditionViolated(
                f"{used} protected vertices up to level {lvl} exceed {alpha * lvl * uniform}"
            )
    while True:
        counts = level_counts(tree, current)
        over = [lvl for lvl in range(1, tree.height + 1) if counts[lvl - 1] > cap]
        if not over:
            return frozenset(current)
        lvl = over[0]
        # deepest earlier level with spare room; exists by the prefix bound
        target = max(j for j in range(1, lvl) if counts[j - 1] < cap)
        movers = sorted(v for v in current if tree.level[v] == lvl)
        choice = next(
            (v for v in movers if tree.ancestor_at(v, target) not in current), movers[0]
        )
        current.discard(choice)
        current.add(tree.ancestor_at(choice, target))
        current = set(normalize_antichain(tree, current))


def relabel(protect: Iterable[int], old_ids: Sequence[int]) -> frozenset[int]:
    return frozenset(old_ids[v] for v in protect)
