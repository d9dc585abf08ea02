"""Smooth and classical non-uniform k-center: model, compression, LP tools and the search.

Centers are pairs (point, level) with 1-based levels; a pair opens a ball of
radius r_level around the point. Budgets are smooth (prefix) unless stated
otherwise. All arithmetic is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from . import lp
from .errors import MalformedInput, NoSolutionFound, ParameterOutOfRange, PreconditionViolated, ResourceCap
from .explore_tree import mix
from .lp_tree import FractionalSolution, TreePolytope, ceil_log, round_loose, solve_vertex, sparsify
from .tree_core import INFINITE, SrmfcInstance, build_tree

ZERO = Fraction(0)
ONE = Fraction(1)

CenterSet = frozenset  # of (point, level) pairs


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """Finite metric on points 0..n-1, validated on construction."""

    dist: tuple

    def __post_init__(self):
        rows = tuple(tuple(Fraction(x) for x in row) for row in self.dist)
        n = len(rows)
        if n == 0:
            raise MalformedInput("metric needs at least one point")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise MalformedInput(f"distance row {i} has {len(row)} entries, expected {n}")
        for u in range(n):
            if rows[u][u] != 0:
                raise MalformedInput(f"non-metric: d({u},{u}) is not zero")
            for v in range(n):
                if rows[u][v] < 0:
                    raise MalformedInput(f"non-metric: d({u},{v}) is negative")
                if rows[u][v] != rows[v][u]:
                    raise MalformedInput(f"non-metric: d({u},{v}) != d({v},{u})")
        for u in range(n):
            du = rows[u]
            for v in range(n):
                duv = du[v]
                dv = rows[v]
                for w in range(n):
                    if du[w] > duv + dv[w]:
                        raise MalformedInput(f"non-metric: d({u},{w}) > d({u},{v}) + d({v},{w})")
        object.__setattr__(self, "dist", rows)

    @property
    def n(self) -> int:
        return len(self.dist)

    def d(self, u: int, v: int) -> Fraction:
        return self.dist[u][v]

    def ball(self, v: int, radius) -> frozenset:
        row = self.dist[v]
        return frozenset(u for u in range(len(row)) if row[u] <= radius)

    def restricted(self, keep: Sequence[int]) -> "MetricSpace":
        return MetricSpace(tuple(tuple(self.dist[u][v] for v in keep) for u in keep))


@dataclass(frozen=True, eq=False)
class SnukcInstance:
    space: MetricSpace
    radii: tuple
    budgets: tuple

    def __post_init__(self):
        radii = tuple(Fraction(r) for r in self.radii)
        budgets = tuple(Fraction(k) for k in self.budgets)
        if not radii:
            raise PreconditionViolated("an instance needs at least one level")
        if len(radii) != len(budgets):
            raise PreconditionViolated("radii and budgets must have the same length")
        if any(r < 0 for r in radii) or any(k < 0 for k in budgets):
            raise PreconditionViolated("radii and budgets must be nonnegative")
        if any(radii[i] < radii[i + 1] for i in range(len(radii) - 1)):
            raise PreconditionViolated("radii must be nonincreasing")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "budgets", budgets)

    @property
    def height(self) -> int:
        return len(self.radii)

    @property
    def n(self) -> int:
        return self.space.n

    def radius(self, lvl: int) -> Fraction:
        return self.radii[lvl - 1]

    def budget(self, lvl: int) -> Fraction:
        return self.budgets[lvl - 1]

    def prefix(self, lvl: int) -> Fraction:
        return sum(self.budgets[:max(lvl, 0)], ZERO)

    def prefixes(self) -> list[Fraction]:
        return list(itertools.accumulate(self.budgets))

    def up_to(self, h: int) -> "SnukcInstance":
        """The first h levels."""
        return SnukcInstance(self.space, self.radii[:h], self.budgets[:h])

    def above(self, h: int) -> "SnukcInstance":
        """Levels h+1..L, renumbered from 1."""
        return SnukcInstance(self.space, self.radii[h:], self.budgets[h:])

    def with_radii(self, factor) -> "SnukcInstance":
        factor = Fraction(factor)
        return SnukcInstance(self.space, tuple(r * factor for r in self.radii), self.budgets)


def _check_levels(inst: SnukcInstance, centers: Iterable) -> None:
    for v, lvl in centers:
        if not 1 <= lvl <= inst.height or not 0 <= v < inst.n:
            raise PreconditionViolated(f"center {(v, lvl)} outside the instance")


def level_counts(inst: SnukcInstance, centers: Iterable) -> list[int]:
    counts = [0] * inst.height
    for _, lvl in centers:
        counts[lvl - 1] += 1
    return counts


def covered_points(inst: SnukcInstance, centers: Iterable, beta) -> frozenset:
    beta = Fraction(beta)
    out = set()
    for v, lvl in centers:
        out |= inst.space.ball(v, beta * inst.radius(lvl))
    return frozenset(out)


def is_feasible(inst: SnukcInstance, centers: Iterable, alpha, beta, smooth: bool = True) -> bool:
    """Budget check (prefix when smooth, per level otherwise) plus full coverage at dilation beta."""
    centers = frozenset(centers)
    _check_levels(inst, centers)
    alpha = Fraction(alpha)
    counts = level_counts(inst, centers)
    if smooth:
        used = list(itertools.accumulate(counts))
        caps = inst.prefixes()
    else:
        used, caps = counts, list(inst.budgets)
    if any(u > alpha * c for u, c in zip(used, caps)):
        return False
    return len(covered_points(inst, centers, beta)) == inst.n


def measure(inst: SnukcInstance, centers: Iterable) -> tuple:
    """Smallest (alpha, beta) at which `centers` is feasible in the smooth sense.

    Either entry is INFINITE when no finite value works.
    """
    centers = frozenset(centers)
    _check_levels(inst, centers)
    alpha = ZERO
    for used, cap in zip(itertools.accumulate(level_counts(inst, centers)), inst.prefixes()):
        if used == 0:
            continue
        if cap == 0:
            alpha = INFINITE
            break
        alpha = max(alpha, Fraction(used) / cap)
    beta = ZERO
    for u in range(inst.n):
        best = INFINITE
        for v, lvl in centers:
            d, r = inst.space.d(u, v), inst.radius(lvl)
            if d == 0:
                best = ZERO
                break
            if r > 0:
                best = min(best, d / r)
        beta = max(beta, best)
        if beta is INFINITE:
            break
    return alpha, beta


def flatten_budgets(centers: Iterable, budgets: Sequence, alpha=1) -> frozenset:
    """Turn a smooth solution into one with at most ceil(alpha*k_l) centers per level.

    Surplus centers move to the closest earlier level with spare room; the
    radius there is at least as large, so coverage is kept.
    """
    alpha = Fraction(alpha)
    caps = [math.ceil(alpha * Fraction(k)) for k in budgets]
    by_level: list[set] = [set() for _ in caps]
    for v, lvl in centers:
        if not 1 <= lvl <= len(caps):
            raise PreconditionViolated(f"center {(v, lvl)} outside the instance")
        by_level[lvl - 1].add(v)
    used = 0
    for i in range(len(caps)):
        used += len(by_level[i])
        if used > sum(caps[:i + 1]):
            raise PreconditionViolated("prefix counts exceed the rounded-up budgets")
    for i in range(len(caps)):
        while len(by_level[i]) > caps[i]:
            j = max(j for j in range(i) if len(by_level[j]) < caps[j])
            v = min(by_level[i])
            by_level[i].remove(v)
            by_level[j].add(v)  # a point already open on level j just merges
    return frozenset((v, i + 1) for i, pts in enumerate(by_level) for v in pts)


# ---------------------------------------------------------------------------
# thresholds


def sparsity_dilation(eps, lam: int) -> Fraction:
    """1 + 2 / (1 - 2(1+eps)^-lam), the radius factor lost by sparsifying."""
    q = (1 + Fraction(eps)) ** -lam
    if 2 * q >= 1:
        raise PreconditionViolated("need (1+eps)^lambda > 2")
    return 1 + 2 / (1 - 2 * q)


def lambda_eps(eps) -> int:
    """Smallest lambda whose sparsity dilation is at most 3 + eps/2 (linear scan)."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ParameterOutOfRange("eps must be positive")
    lam = 1
    while 2 * (1 + eps) ** -lam >= 1 or sparsity_dilation(eps, lam) > 3 + eps / 2:
        lam += 1
    return lam


@dataclass(frozen=True)
class NukcThresholds:
    eps: Fraction
    h_hat: int
    h_check: int
    rho: Fraction
    sigma: Fraction
    lam: int
    kappa: int
    kappa2: int
    mu: int
    N: int
    zeta_bar: Fraction
    height: int

    @property
    def guarantee_eps(self) -> bool:
        return self.eps <= Fraction(1, 7)

    def beta_levels(self) -> tuple:
        """Per-level dilation after sparsifying: the sparsity factor up to h_hat, 1 above."""
        big = sparsity_dilation(self.eps, self.lam)
        return tuple(big if lvl <= self.h_hat else ONE for lvl in range(1, self.height + 1))


def _first_level(inst: SnukcInstance, bound) -> int:
    """Smallest h in [1, L] with h = L or k_{h+1} >= bound."""
    for h in range(1, inst.height):
        if inst.budget(h + 1) >= bound:
            return h
    return inst.height


def nukc_thresholds(inst: SnukcInstance, eps, N: int | None = None) -> NukcThresholds:
    eps = Fraction(eps)
    if eps <= 0:
        raise ParameterOutOfRange("eps must be positive")
    base = 1 + eps
    L = inst.height
    h_hat = _first_level(inst, Fraction(L) / eps)
    h_check = _first_level(inst, Fraction(h_hat) / eps)
    sigma = 3 + eps
    lam = lambda_eps(eps)
    kappa = max(ceil_log(base, 4 * sigma / eps), ceil_log(base, (4 * sigma + 2) ** 2))
    kappa2 = ceil_log(base, 2 * sigma / eps)
    if N is None:
        N = math.ceil(3 / eps)
    zeta = (4 * N * lam / eps ** 5) * (h_check ** 2 * h_hat + 3 * kappa * L)
    return NukcThresholds(eps, h_hat, h_check, 15 + 6 * eps, sigma, lam, kappa, kappa2, 2, N, zeta, L)


# ---------------------------------------------------------------------------
# compression


@dataclass(frozen=True)
class NukcLifter:
    """Maps levels of a transformed instance back to levels of `source`."""

    source: SnukcInstance
    level_map: tuple  # transformed level - 1 -> source level

    def lift(self, centers: Iterable) -> frozenset:
        return frozenset((v, self.level_map[lvl - 1]) for v, lvl in centers)

    def shifted(self, source: SnukcInstance, offset: int) -> "NukcLifter":
        return NukcLifter(source, tuple(m + offset for m in self.level_map))


def _round_up_power(value: Fraction, base: Fraction) -> Fraction:
    if value == 0:
        return ZERO
    return base ** ceil_log(base, value)


def _merge_equal_radii(budgets: list, radii: list) -> tuple[list, list]:
    """Move each radius class's budget to its first level, then drop zero-budget levels."""
    b = list(budgets)
    first: dict = {}
    for i, r in enumerate(radii):
        if r in first:
            b[first[r]] += b[i]
            b[i] = ZERO
        else:
            first[r] = i
    keep = [i for i in range(len(b)) if b[i] != 0]
    return [b[i] for i in keep], [radii[i] for i in keep]


def compress_nukc(inst: SnukcInstance, eps, h: int | None = None) -> tuple[SnukcInstance, NukcLifter]:
    """Geometric compression: rounded radii, prefix budgets on powers of (1+eps).

    A solution of the result lifts by sending each center to the last input
    level whose rounded radius matches its level's radius.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise PreconditionViolated("eps must be positive")
    if inst.budget(1) < 1:
        raise PreconditionViolated("compression needs k_1 >= 1")
    h = inst.height if h is None else min(h, inst.height)
    base = 1 + eps
    rounded = [_round_up_power(r, base) if i < h else r for i, r in enumerate(inst.radii)]
    budgets, radii = _merge_equal_radii(list(inst.budgets), rounded)

    total = sum(budgets, ZERO)
    top = ceil_log(base, total) + 1
    budgets[-1] += base ** (top - 1) - total
    for lvl in range(top - 1, 0, -1):
        target = base ** (lvl - 1)
        prefixes = list(itertools.accumulate(budgets))
        i = next(j for j, p in enumerate(prefixes) if p >= target)
        lower = target - (prefixes[i - 1] if i else ZERO)
        if lower != budgets[i]:
            budgets[i:i + 1] = [lower, budgets[i] - lower]
            radii[i:i + 1] = [radii[i], radii[i]]
    powers = {base ** j for j in range(top)}
    start = 0
    for end, p in enumerate(itertools.accumulate(budgets)):
        if p in powers:
            budgets[start] += sum(budgets[start + 1:end + 1], ZERO)
            for j in range(start + 1, end + 1):
                budgets[j] = ZERO
            start = end + 1
    budgets, radii = _merge_equal_radii(budgets, radii)

    last_of = {r: i + 1 for i, r in enumerate(rounded)}
    level_map = tuple(last_of[r] for r in radii)
    return SnukcInstance(inst.space, tuple(radii), tuple(budgets)), NukcLifter(inst, level_map)


def is_compressed_nukc(inst: SnukcInstance, eps) -> bool:
    """Prefix budgets are powers of (1+eps) starting at 1 and radii shrink by (1+eps) per level."""
    base = 1 + Fraction(eps)
    prefixes = inst.prefixes()
    if prefixes[0] < 1:
        return False
    for p in prefixes:
        j = ceil_log(base, p)
        if base ** j != p:
            return False
    if any(prefixes[i + 1] < base * prefixes[i] for i in range(len(prefixes) - 1)):
        return False
    return all(inst.radii[i] >= base * inst.radii[i + 1] for i in range(inst.height - 1))


def drop_small_first_levels(inst: SnukcInstance):
    """Push budget forward while k_1 < 1; returns (instance, dropped level count) or None."""
    budgets = list(inst.budgets)
    radii = list(inst.radii)
    dropped = 0
    while budgets[0] < 1:
        if len(budgets) == 1:
            return None
        budgets[1] += budgets[0]
        del budgets[0], radii[0]
        dropped += 1
    return SnukcInstance(inst.space, tuple(radii), tuple(budgets)), dropped


def beta_candidates(inst: SnukcInstance) -> list[Fraction]:
    """Every ratio d(u,v)/r_l with u != v and r_l > 0, sorted; empty if all radii are zero."""
    n = inst.n
    radii = {r for r in inst.radii if r > 0}
    dists = {inst.space.d(u, v) for u in range(n) for v in range(u + 1, n)}
    return sorted({d / r for d in dists for r in radii})


# ---------------------------------------------------------------------------
# polytope


def _beta_vector(inst: SnukcInstance, beta) -> tuple:
    if isinstance(beta, (int, Fraction)):
        return (Fraction(beta),) * inst.height
    beta = tuple(Fraction(b) for b in beta)
    if len(beta) != inst.height:
        raise PreconditionViolated("need one dilation per level")
    return beta


def adjusted_prefixes(inst: SnukcInstance, centers: Iterable = ()) -> list[Fraction]:
    """Prefix sums of k_l - |C_l|."""
    counts = level_counts(inst, centers)
    return [p - c for p, c in zip(inst.prefixes(), itertools.accumulate(counts))]


def coverage(inst: SnukcInstance, x: FractionalSolution, beta, v: int) -> Fraction:
    betas = _beta_vector(inst, beta)
    row = inst.space.dist[v]
    return sum((val for (u, lvl), val in x.values.items() if row[u] <= betas[lvl - 1] * inst.radius(lvl)), ZERO)


def nukc_contains(inst: SnukcInstance, x: FractionalSolution, alpha, beta, U: Iterable[int] | None = None,
                  centers: Iterable = (), forbidden: Iterable = (), delta: Mapping[int, Fraction] | None = None,
                  unit_cap: bool = True) -> bool:
    """Membership in the polytope with adjusted budgets alpha*(k - |C|) and x(D) = 0."""
    alpha = Fraction(alpha)
    U = range(inst.n) if U is None else U
    if any(x[p] != 0 for p in forbidden):
        return False
    if any(val < 0 or (unit_cap and val > 1) for val in x.values.values()):
        return False
    mass = [ZERO] * inst.height
    for (v, lvl), val in x.values.items():
        if not 1 <= lvl <= inst.height:
            return False
        mass[lvl - 1] += val
    for used, cap in zip(itertools.accumulate(mass), adjusted_prefixes(inst, centers)):
        if used > alpha * cap:
            return False
    for v in U:
        need = ONE if delta is None else Fraction(delta.get(v, ZERO))
        if coverage(inst, x, beta, v) < need:
            return False
    return True


def solve_vertex_nukc(inst: SnukcInstance, alpha, beta, U: Iterable[int] | None = None,
                      centers: Iterable = (), forbidden: Iterable = (),
                      delta: Mapping[int, Fraction] | None = None):
    """A vertex of the (C, D)-compatible polytope minimizing total mass, or lp.INFEASIBLE.

    Unit upper bounds are not written as rows: a minimum-mass optimum never
    exceeds 1 on a coordinate, and a vertex of the larger region lying in the
    smaller one is a vertex there too.
    """
    alpha = Fraction(alpha)
    betas = _beta_vector(inst, beta)
    U = sorted(range(inst.n) if U is None else set(U))
    forbidden = frozenset(forbidden)
    pairs = [(v, lvl) for lvl in range(1, inst.height + 1) for v in range(inst.n)]
    col = {p: i for i, p in enumerate(pairs)}
    prog = lp.LinearProgram(len(pairs))
    for lvl, cap in enumerate(adjusted_prefixes(inst, centers), start=1):
        prog.add({col[(v, j)]: 1 for j in range(1, lvl + 1) for v in range(inst.n)}, lp.LE, alpha * cap)
    for v in U:
        need = ONE if delta is None else Fraction(delta.get(v, ZERO))
        if need <= 0:
            continue
        row = inst.space.dist[v]
        prog.add({col[(u, lvl)]: 1 for (u, lvl) in pairs if row[u] <= betas[lvl - 1] * inst.radius(lvl)},
                 lp.GE, need)
    res = lp.solve(prog, fixed_zero=[col[p] for p in forbidden if p in col])
    if res is lp.INFEASIBLE:
        return res
    return FractionalSolution({p: res[col[p]] for p in pairs})


# ---------------------------------------------------------------------------
# reduction to a tree instance


@dataclass(frozen=True, eq=False)
class ReducedTree:
    """Tree with levels 1..L built from the metric and one leaf per point on level L+1.

    `inst` has budget 0 on the leaf level and the leaves are never opened.
    """

    inst: SrmfcInstance
    psi: tuple  # tree vertex -> point (-1 for the root)
    leaf_of: tuple  # point -> leaf vertex
    delta: Mapping[int, Fraction]  # leaf -> requirement
    y: FractionalSolution  # the image y^x of the input point
    source: SnukcInstance
    beta: Fraction
    eta: Fraction

    @property
    def targets(self) -> frozenset:
        return frozenset(t for t, need in self.delta.items() if need > 0)

    @property
    def leaves(self) -> frozenset:
        return frozenset(self.leaf_of)

    def polytope(self, alpha, delta: Mapping[int, Fraction] | None = None) -> TreePolytope:
        need = self.delta if delta is None else delta
        targets = frozenset(t for t, v in need.items() if v > 0)
        return TreePolytope(self.inst, alpha, targets, {t: need[t] for t in targets}, self.leaves)

    @property
    def dilation(self) -> Fraction:
        """Radius multiplier 2*eta/(eta-2) of mapping tree solutions back."""
        return 2 * self.eta / (self.eta - 2)


def reduce_to_tree(inst: SnukcInstance, x: FractionalSolution, beta, eta,
                   delta: Mapping[int, Fraction] | None = None) -> ReducedTree:
    """Greedy level-by-level clustering of the points into a tree, from the leaves down.

    On level l the uncovered child with the most x-mass of level l within
    beta*r_l of its point is picked (ties: smallest point, then smallest id)
    and adopts every uncovered child within 2*beta*r_l.
    """
    beta, eta = Fraction(beta), Fraction(eta)
    if eta <= 2:
        raise PreconditionViolated("eta must exceed 2")
    L = inst.height
    for lvl in range(1, L):
        if inst.radius(lvl) < eta * inst.radius(lvl + 1):
            raise PreconditionViolated(f"radius ratio below eta between levels {lvl} and {lvl + 1}")
    space = inst.space
    level_mass = [dict() for _ in range(L + 1)]
    for (v, lvl), val in x.values.items():
        level_mass[lvl][v] = val

    psi = [-1]
    parent = [None]
    tree_level = [0]
    leaf_of = []
    current = []
    for p in range(space.n):
        leaf_of.append(len(psi))
        current.append(len(psi))
        psi.append(p)
        parent.append(None)
        tree_level.append(L + 1)
    y_values = {}
    for lvl in range(L, 0, -1):
        radius = beta * inst.radius(lvl)
        masses = level_mass[lvl]

        def gain(node):
            row = space.dist[psi[node]]
            return sum((val for u, val in masses.items() if row[u] <= radius), ZERO)

        gains = {node: gain(node) for node in current}
        uncovered = list(current)
        made = []
        while uncovered:
            w = min(uncovered, key=lambda node: (-gains[node], psi[node], node))
            me = len(psi)
            psi.append(psi[w])
            parent.append(None)
            tree_level.append(lvl)
            made.append(me)
            if gains[w] != 0:
                y_values[me] = gains[w]
            row = space.dist[psi[w]]
            rest = []
            for node in uncovered:
                if row[psi[node]] <= 2 * radius:
                    parent[node] = me
                else:
                    rest.append(node)
            uncovered = rest
        current = made
    for node in current:
        parent[node] = 0
    edges = [(parent[v], v) for v in range(1, len(psi))]
    tree = build_tree(edges, 0)
    budgets = tuple(inst.budgets) + (ZERO,)
    need = {leaf_of[p]: (ONE if delta is None else Fraction(delta.get(p, ZERO))) for p in range(space.n)}
    return ReducedTree(SrmfcInstance(tree, budgets), tuple(psi), tuple(leaf_of), need,
                       FractionalSolution(y_values), inst, beta, eta)


def project_back(y: FractionalSolution, reduced: ReducedTree) -> FractionalSolution:
    """x_{v,l} = total y over level-l tree vertices assigned to point v."""
    tree = reduced.inst.tree
    out: dict = {}
    for node, val in y.values.items():
        lvl = tree.level[node]
        if lvl > reduced.source.height:
            raise PreconditionViolated("leaf vertices carry no center")
        key = (reduced.psi[node], lvl)
        out[key] = out.get(key, ZERO) + val
    return FractionalSolution(out)


# ---------------------------------------------------------------------------
# sparsification


def _floor_to(value: Fraction, step: Fraction) -> Fraction:
    return step * math.floor(value / step)


def sparsify_nukc(inst: SnukcInstance, x: FractionalSolution, lam: int, U: Iterable[int] | None,
                  th: NukcThresholds) -> FractionalSolution:
    """Sparsify x in Q_{1,1}(U) slice by slice through tree reductions.

    Levels up to h_hat are split into lam residue classes; each class is
    reduced to a tree with eta = (1+eps)^lam, sparsified there with
    gamma = 1/lam, mapped back and moved onto support pairs of x. Levels above
    h_hat are kept. The result is scaled by 1/(1-3eps) and capped at 1.
    """
    eps = th.eps
    if not 0 < eps < Fraction(1, 3):
        raise PreconditionViolated("need 0 < eps < 1/3")
    eta = (1 + eps) ** lam
    if lam < 1 or eta <= 2:
        raise PreconditionViolated("need lambda >= 1 with (1+eps)^lambda > 2")
    U = frozenset(range(inst.n) if U is None else U)
    if not nukc_contains(inst, x, 1, 1, U):
        raise PreconditionViolated("input point is not in Q_{1,1}(U)")
    space = inst.space
    step = eps / lam
    out: dict = {p: val for p, val in x.values.items() if p[1] > th.h_hat}
    for m in range(1, lam + 1):
        levels = list(range(m, th.h_hat + 1, lam))
        if not levels:
            continue
        masses = [sum((val for (v, lvl), val in x.values.items() if lvl == ell), ZERO) for ell in levels]
        piece = SnukcInstance(space, tuple(inst.radius(ell) for ell in levels), tuple(masses))
        index = {ell: i + 1 for i, ell in enumerate(levels)}
        local = FractionalSolution({(v, index[lvl]): val for (v, lvl), val in x.values.items() if lvl in index})
        delta = {}
        for v in range(space.n):
            need = _floor_to(coverage(piece, local, 1, v), step)
            delta[v] = min(need, ONE)
        reduced = reduce_to_tree(piece, local, 1, eta, delta)
        low = sum(1 for ell in levels if ell <= th.h_check)
        tree_delta = {t: d for t, d in reduced.delta.items() if d > 0}
        if not tree_delta:
            continue
        thin = sparsify(reduced.y, reduced.inst, eps, Fraction(1, lam), len(levels), low,
                        delta=tree_delta, targets=frozenset(tree_delta), check_levels=False)
        back = project_back(thin, reduced)
        for (v, i), val in back.values.items():
            ell = levels[i - 1]
            radius = inst.radius(ell)
            row = space.dist[v]
            anchor = min(u for u in range(space.n)
                         if row[u] <= radius and x[(u, ell)] > 0)
            out[(anchor, ell)] = out.get((anchor, ell), ZERO) + val
    scale = 1 / (1 - 3 * eps)
    return FractionalSolution({p: min(val * scale, ONE) for p, val in out.items()})


# ---------------------------------------------------------------------------
# rounding on small radii


def _coarsen(inst: SnukcInstance, x: FractionalSolution, base: Fraction):
    """Radii rounded up to powers of `base`, equal radii merged; x follows the merge.

    Returns (instance, point, level map to the last input level of each class).
    """
    rounded = [_round_up_power(r, base) for r in inst.radii]
    order: list = []
    budget: dict = {}
    last: dict = {}
    for i, r in enumerate(rounded):
        if r not in budget:
            order.append(r)
            budget[r] = ZERO
        budget[r] += inst.budgets[i]
        last[r] = i + 1
    index = {r: j + 1 for j, r in enumerate(order)}
    moved: dict = {}
    for (v, lvl), val in x.values.items():
        key = (v, index[rounded[lvl - 1]])
        moved[key] = moved.get(key, ZERO) + val
    coarse = SnukcInstance(inst.space, tuple(order), tuple(budget[r] for r in order))
    return coarse, FractionalSolution(moved), tuple(last[r] for r in order)


def round_small_radii(inst: SnukcInstance, x: FractionalSolution, eps, alpha, beta=1,
                      U: Iterable[int] | None = None, strict: bool = True):
    """Integral centers covering U at dilation 16*beta from a fractional point.

    Radii are rounded up to powers of 4, the instance is reduced to a tree
    with eta = 4, a tree LP vertex is rounded by opening its loose vertices,
    and opened tree vertices become centers. Returns lp.INFEASIBLE when the
    tree LP is empty. With `strict`, budgets must be at least L/eps per level.
    """
    eps, alpha, beta = Fraction(eps), Fraction(alpha), Fraction(beta)
    U = frozenset(range(inst.n) if U is None else U)
    if strict and any(k < Fraction(inst.height) / eps for k in inst.budgets):
        raise PreconditionViolated("every level needs budget at least L/eps")
    if not U:
        return frozenset()
    coarse, moved, level_map = _coarsen(inst, x, Fraction(4))
    reduced = reduce_to_tree(coarse, moved, beta, 4, {p: ONE for p in U})
    poly = reduced.polytope(alpha)
    vertex = solve_vertex(poly)
    if vertex is lp.INFEASIBLE:
        return vertex
    opened = round_loose(vertex, poly)
    tree = reduced.inst.tree
    return frozenset((reduced.psi[v], level_map[tree.level[v] - 1]) for v in opened)


# ---------------------------------------------------------------------------
# exact cover DP


def dp_cover(inst: SnukcInstance, S: Iterable, beta, budgets: Sequence | None = None,
             points: Iterable[int] | None = None, max_points: int = 14):
    """Centers covering every pair of S, or None.

    A pair (v, l) is covered by a center (u, l') with l' <= l and
    d(v, u) <= beta*r_l'. Level l may open floor(k_<=l) - floor(k_<=l-1)
    centers. Sets of covered pairs are built from the top level down.
    """
    beta = Fraction(beta)
    S = sorted(set(S))
    budgets = inst.budgets if budgets is None else tuple(Fraction(b) for b in budgets)
    cand = sorted(set(range(inst.n) if points is None else points))
    if len(cand) > max_points:
        raise ResourceCap(f"cover DP limited to {max_points} candidate points, got {len(cand)}")
    if not S:
        return frozenset()
    floors = [math.floor(p) for p in itertools.accumulate(budgets)]
    caps = [floors[0]] + [floors[i] - floors[i - 1] for i in range(1, len(floors))]
    bit = {p: 1 << i for i, p in enumerate(S)}
    full = (1 << len(S)) - 1
    space = inst.space
    states: dict[int, frozenset] = {0: frozenset()}
    for lvl in range(len(budgets), 0, -1):
        cap = caps[lvl - 1]
        if cap < 0:
            return None
        radius = beta * inst.radius(lvl)
        reach = {}
        for u in cand:
            row = space.dist[u]
            reach[u] = sum((b for (v, l), b in bit.items() if l >= lvl and row[v] <= radius), 0)
        choices: dict[int, tuple] = {}
        for size in range(min(cap, len(cand)) + 1):
            for combo in itertools.combinations(cand, size):
                mask = 0
                for u in combo:
                    mask |= reach[u]
                choices.setdefault(mask, combo)
        nxt: dict[int, frozenset] = {}
        for mask, chosen in states.items():
            for add, combo in choices.items():
                key = mask | add
                if key not in nxt:
                    nxt[key] = chosen | {(u, lvl) for u in combo}
        states = nxt
    return states.get(full)


# ---------------------------------------------------------------------------
# search


@dataclass
class NukcLimits:
    max_nodes: int = 5_000
    zeta: Fraction | None = None  # default: zeta_bar from the thresholds
    N: int | None = None  # default: ceil(3/eps)
    max_points: int = 14


@dataclass
class NukcExploreResult:
    solutions: list
    truncated: bool
    nodes: int
    stopped_early: bool
    bound_violations: list = field(default_factory=list)
    eps_in_guarantee_range: bool = True
    default_limits: bool = True


class _Stop(Exception):
    pass


def node_bound_holds(count: int, th: NukcThresholds, inst: SnukcInstance, zeta, s: int, N: int) -> bool:
    """count <= C^zeta * D^s with C = 3^(N/eps^3+1) and D = (kappa2+4)^(a*L+1)."""
    e = (Fraction(N) / th.eps ** 3 + 1) * Fraction(zeta)
    p, q = e.numerator, e.denominator
    if count.bit_length() * q <= p:
        return True
    return count ** q <= 3 ** p * (th.kappa2 + 4) ** ((support_bound_nukc(inst, th) + 1) * s * q)


def support_bound_nukc(inst: SnukcInstance, th: NukcThresholds) -> int:
    """The a_eps*L bound on the sparsified support below h_hat."""
    eps = th.eps
    return math.ceil(th.lam * (1 + 7 * eps) / eps
                     * (th.h_check * inst.prefix(th.h_check) + inst.prefix(th.h_hat)))


class _NukcExplorer:
    def __init__(self, inst, th, limits, N, accept, check_bounds):
        self.inst = inst
        self.th = th
        self.limits = limits
        self.N = N
        self.accept = accept
        self.check_bounds = check_bounds
        self.nodes = 0
        self.truncated = False
        self.solutions: list = []
        self.seen: set = set()
        self.violations: list = []
        self.cache: dict = {}
        space = inst.space
        self.balls = {}  # (v, radius) -> ball
        self.space = space

    def ball(self, v, radius):
        key = (v, radius)
        got = self.balls.get(key)
        if got is None:
            got = self.balls[key] = self.space.ball(v, radius)
        return got

    def covered(self, C) -> frozenset:
        out = set()
        for v, lvl in C:
            out |= self.ball(v, self.th.rho * self.inst.radius(lvl))
        return frozenset(out)

    def point(self, C, D):
        """Sparsified compatible point for (C, D), or None."""
        key = (C, D)
        if key in self.cache:
            return self.cache[key]
        inst, th = self.inst, self.th
        done = self.covered(C)
        U = frozenset(range(inst.n)) - done
        x = solve_vertex_nukc(inst, 1, 1, U, C, D)
        y = None
        if x is not lp.INFEASIBLE:
            y = sparsify_nukc(inst, x, th.lam, U, th)
            keep = {p: val for p, val in y.values.items()
                    if not self.ball(p[0], th.sigma * inst.radius(p[1])) <= done}
            y = FractionalSolution(keep)
        self.cache[key] = (y, done)
        return y, done

    # pair sets added to D
    def d_thin(self, A):
        out = set()
        for v, lvl in A:
            out |= {(u, lvl) for u in self.ball(v, 4 * self.th.sigma * self.inst.radius(lvl))}
        return out

    def _around(self, v, lvl, top):
        sigma, inst = self.th.sigma, self.inst
        out = set()
        for other in range(1, top + 1):
            out |= {(u, other) for u in self.ball(v, sigma * (inst.radius(lvl) + inst.radius(other)))}
        return out

    def d_small(self, A):
        out = set()
        for v, lvl in A:
            out |= self._around(v, lvl, self.th.h_hat)
        return out

    def d_sep(self, A):
        th = self.th
        out = set()
        for v, lvl in A:
            top = th.h_check if lvl <= th.h_check else min(th.h_hat, lvl + th.kappa)
            out |= self._around(v, lvl, top)
        return out

    def run(self, C, D, zeta, Y, A_dp):
        if self.nodes >= self.limits.max_nodes:
            self.truncated = True
            raise _Stop
        self.nodes += 1
        start = self.nodes
        y, done = self.point(C, D)
        if y is not None:
            th = self.th
            S = sorted(p for p in y.support if p[1] <= th.h_hat)
            grown = Y + (y,)
            if len(grown) == self.N:
                self.emit(C, A_dp, grown, done)
            else:
                for C2, D2, A_add in self.light_branches(S, C, D):
                    self.run(C2, D2, zeta, grown, A_dp | A_add)
            for lvl in range(1, th.h_hat + 1):
                level = [p for p in S if p[1] == lvl]
                if len(level) > zeta:
                    continue
                need = th.eps / self.N * self.inst.budget(lvl)
                for thin, opened in self.heavy_choices(level, need):
                    D2 = D | self.d_thin(thin - opened)
                    self.run(C | opened, frozenset(D2), zeta - len(level), Y, A_dp)
        if self.check_bounds:
            count = self.nodes - start + 1
            s = self.N - len(Y)
            if not node_bound_holds(count, self.th, self.inst, zeta, s, self.N):
                self.violations.append((count, zeta, s))

    def heavy_choices(self, level, need):
        for labels in itertools.product((0, 1, 2), repeat=len(level)):
            thin = frozenset(p for p, lab in zip(level, labels) if lab)
            if not thin or len(thin) < need:
                continue
            yield thin, frozenset(p for p, lab in zip(level, labels) if lab == 2)

    def light_branches(self, S, C, D):
        """Partitions of S into (close big, small, separated, DP) plus big offsets."""
        kappa2 = self.th.kappa2
        options = []
        for v, lvl in S:
            opts = [("dp",), ("small",), ("sep",), ("big", 0)]
            opts += [("big", f) for f in range(1, kappa2 + 1) if lvl - f >= 1]
            options.append(opts)
        for labels in itertools.product(*options):
            add_C, small, sep, dp = set(), [], [], set()
            for (v, lvl), lab in zip(S, labels):
                if lab[0] == "dp":
                    dp.add((v, lvl))
                elif lab[0] == "small":
                    small.append((v, lvl))
                elif lab[0] == "sep":
                    sep.append((v, lvl))
                elif lab[1]:
                    add_C.add((v, lvl - lab[1]))
            D2 = D | self.d_small(small) | self.d_sep(sep) if (small or sep) else D
            yield C | add_C, frozenset(D2), frozenset(dp)

    def emit(self, C, A_dp, Y, done):
        inst, th = self.inst, self.th
        sigma = th.sigma
        V_dp = sorted({v for v, _ in A_dp})
        final = [(v, lvl) for v, lvl in A_dp if not self.ball(v, sigma * inst.radius(lvl)) <= done]
        counts = level_counts(inst, C)
        budgets = [inst.budget(lvl) - counts[lvl - 1] + 2 * th.eps * inst.budget(lvl)
                   for lvl in range(1, th.h_hat + 1)]
        big = dp_cover(inst.up_to(th.h_hat), final, 4 * sigma, budgets, V_dp, self.limits.max_points)
        if big is None:
            return
        small = frozenset()
        if th.h_hat < inst.height:
            avg = mix(list(Y))
            high = {p: val for p, val in avg.values.items() if p[1] > th.h_hat}
            upper = FractionalSolution(high)
            V_small = [v for v in range(inst.n) if coverage(inst, upper, 1, v) >= 1 - th.eps]
            if V_small:
                top = inst.above(th.h_hat)
                shifted = FractionalSolution({(v, lvl - th.h_hat): val / (1 - th.eps)
                                              for (v, lvl), val in high.items()})
                alpha = max((m / p for m, p in zip(itertools.accumulate(_masses(top, shifted)),
                                                    top.prefixes()) if m > 0), default=ONE)
                got = round_small_radii(top, shifted, th.eps, alpha, 1, V_small, strict=False)
                if got is lp.INFEASIBLE:
                    return
                small = frozenset((v, lvl + th.h_hat) for v, lvl in got)
        out = frozenset(C) | big | small
        if out in self.seen:
            return
        self.seen.add(out)
        self.solutions.append(out)
        if self.accept is not None and self.accept(out):
            raise _Stop


def _masses(inst: SnukcInstance, x: FractionalSolution) -> list[Fraction]:
    out = [ZERO] * inst.height
    for (_, lvl), val in x.values.items():
        out[lvl - 1] += val
    return out


def explore_nukc(inst: SnukcInstance, th: NukcThresholds, limits: NukcLimits | None = None,
                 accept: Callable[[frozenset], bool] | None = None,
                 check_bounds: bool = False) -> NukcExploreResult:
    """Run the enumeration from C = D = {} and collect every emitted center set.

    Branches of one call are independent, so the part that collects the point
    (and eventually emits) runs before the bulk-guessing branches; this only
    changes the order of the output. `accept` may stop the search early.
    """
    limits = limits or NukcLimits()
    N = th.N if limits.N is None else limits.N
    zeta = th.zeta_bar if limits.zeta is None else Fraction(limits.zeta)
    engine = _NukcExplorer(inst, th, limits, N, accept, check_bounds)
    stopped = False
    try:
        engine.run(frozenset(), frozenset(), zeta, (), frozenset())
    except _Stop:
        stopped = not engine.truncated
    defaults = limits.N is None or limits.N == math.ceil(3 / th.eps)
    defaults = defaults and zeta >= th.zeta_bar
    return NukcExploreResult(engine.solutions, engine.truncated, engine.nodes, stopped,
                             engine.violations, th.guarantee_eps, defaults)


# ---------------------------------------------------------------------------
# end to end


@dataclass
class SnukcResult:
    centers: frozenset
    alpha: Fraction  # measured smooth budget stretch on the input
    beta: Fraction  # measured dilation on the input
    beta_guess: Fraction | None
    certified: bool  # within the budget and dilation bounds below
    truncated: bool
    budget_bound: Fraction
    dilation_factor: Fraction  # bound on beta / beta_guess
    eps_in_guarantee_range: bool
    guesses_tried: int = 0

    @property
    def guaranteed(self) -> bool:
        return self.certified and not self.truncated and self.eps_in_guarantee_range


def dilation_factor(eps) -> Fraction:
    """max(15 + 6eps, 16): the small-radii rounding used here loses 16 instead of 8."""
    return max(15 + 6 * Fraction(eps), Fraction(16))


def solve_snukc(inst: SnukcInstance, eps=Fraction(1, 7), limits: NukcLimits | None = None) -> SnukcResult:
    """Guess the optimal dilation, compress, search, lift; measure everything on the input.

    Guesses run in increasing order and the search stops at the first lifted
    solution with budget stretch <= 1+14eps and dilation <= factor * guess.
    """
    eps = Fraction(eps)
    if not 0 < eps < Fraction(1, 3):
        raise ParameterOutOfRange("eps must lie in (0, 1/3)")
    limits = limits or NukcLimits()
    budget_bound = 1 + 14 * eps
    factor = dilation_factor(eps)
    guesses = [ZERO] + beta_candidates(inst)
    if not any(r > 0 for r in inst.radii):
        guesses = [ONE]
    best = None
    truncated = False
    tried = 0
    for guess in guesses:
        scale = guess if guess > 0 else ONE
        scaled = inst.with_radii(guess) if guess > 0 else SnukcInstance(
            inst.space, (ZERO,) * inst.height, inst.budgets)
        prepared = drop_small_first_levels(scaled)
        if prepared is None:
            continue
        tried += 1
        work, dropped = prepared
        packed, lifter = compress_nukc(work, eps)
        lifter = lifter.shifted(inst, dropped)
        th = nukc_thresholds(packed, eps)

        def good(centers, guess=guess, lifter=lifter):
            a, b = measure(inst, lifter.lift(centers))
            return a <= budget_bound and b <= factor * guess

        result = explore_nukc(packed, th, limits, good)
        truncated |= result.truncated
        for found in result.solutions:
            lifted = lifter.lift(found)
            a, b = measure(inst, lifted)
            ok = a <= budget_bound and b <= factor * guess
            key = (not ok, b, a, sorted(lifted))
            if best is None or key < best[0]:
                best = (key, lifted, guess, ok)
        if best is not None and best[3]:
            break
        del scale
    if best is None:
        # every point opened on level 1 always covers at dilation 0
        fallback = frozenset((v, 1) for v in range(inst.n))
        a, b = measure(inst, fallback)
        return SnukcResult(fallback, a, b, None, False, truncated, budget_bound, factor,
                           eps <= Fraction(1, 7), tried)
    _, centers, guess, ok = best
    a, b = measure(inst, centers)
    return SnukcResult(centers, a, b, guess, ok, truncated, budget_bound, factor,
                       eps <= Fraction(1, 7), tried)


def solve_nukc(inst: SnukcInstance, eps=Fraction(1, 7), limits: NukcLimits | None = None):
    """Classical per-level solution: the smooth result with budgets flattened.

    Returns (centers, per-level stretch ceil(alpha), smooth result).
    """
    if any(k.denominator != 1 for k in inst.budgets):
        raise PreconditionViolated("classical budgets must be integers")
    smooth = solve_snukc(inst, eps, limits)
    if smooth.alpha is INFINITE:
        raise NoSolutionFound("no solution within any finite budget stretch")
    flat = flatten_budgets(smooth.centers, inst.budgets, smooth.alpha)
    return flat, math.ceil(smooth.alpha), smooth


# ---------------------------------------------------------------------------
# brute-force oracle


def exhaustive_nukc(inst: SnukcInstance, max_points: int = 10, max_sets: int = 3_000_000):
    """Optimal dilation over all center sets within the smooth budgets.

    Returns (beta_opt, centers) with the lexicographically smallest optimal
    set, or (INFINITE, None) when no set of centers fits (all budgets below 1).
    """
    n, L = inst.n, inst.height
    if n > max_points:
        raise ResourceCap(f"exhaustive search limited to {max_points} points")
    floors = [math.floor(p) for p in inst.prefixes()]
    dist = inst.space.dist
    best = None
    count = 0

    def needed(centers):
        worst = ZERO
        for u in range(n):
            row = dist[u]
            best_u = INFINITE
            for v, lvl in centers:
                d, r = row[v], inst.radii[lvl - 1]
                if d == 0:
                    best_u = ZERO
                    break
                if r > 0 and d / r < best_u:
                    best_u = d / r
            if best_u > worst:
                worst = best_u
                if worst is INFINITE:
                    return worst
        return worst

    def walk(lvl, used, chosen):
        nonlocal best, count
        if lvl > L:
            if not chosen:
                return
            count += 1
            if count > max_sets:
                raise ResourceCap("too many center sets to enumerate")
            beta = needed(chosen)
            if beta is INFINITE:
                return
            key = (beta, sorted(chosen))
            if best is None or key < best:
                best = key
            return
        room = floors[lvl - 1] - used
        for size in range(0, min(room, n) + 1):
            for combo in itertools.combinations(range(n), size):
                walk(lvl + 1, used + size, chosen + [(v, lvl) for v in combo])

    walk(1, 0, [])
    if best is None:
        return INFINITE, None
    return best[0], frozenset(best[1])
