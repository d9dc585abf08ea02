"""Exact rational two-phase simplex (dense tableau, Bland's rule).

Only what the polytopes in this package need: nonnegative variables,
rows of the form a.x <= b, a.x >= b or a.x = b, and a linear objective to
minimize. The optimum returned is always a basic feasible solution, so its
variable part is a vertex of the feasible region.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

LE, GE, EQ = "<=", ">=", "="
ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class LinearProgram:
    num_vars: int
    rows: list[tuple[dict[int, Fraction], str, Fraction]] = field(default_factory=list)

    def add(self, coeffs: Mapping[int, object], sense: str, rhs) -> None:
        clean = {j: Fraction(c) for j, c in coeffs.items() if c != 0}
        self.rows.append((clean, sense, Fraction(rhs)))

    def is_feasible_point(self, x: Sequence[Fraction]) -> bool:
        if any(v < 0 for v in x):
            return False
        for coeffs, sense, rhs in self.rows:
            lhs = sum((c * x[j] for j, c in coeffs.items()), ZERO)
            if sense == LE and lhs > rhs or sense == GE and lhs < rhs or sense == EQ and lhs != rhs:
                return False
        return True

    def tight_rows(self, x: Sequence[Fraction]) -> list[dict[int, Fraction]]:
        """Coefficient rows of every active constraint at x, bounds included."""
        out = []
        for coeffs, _, rhs in self.rows:
            if sum((c * x[j] for j, c in coeffs.items()), ZERO) == rhs:
                out.append(coeffs)
        for j, v in enumerate(x):
            if v == 0:
                out.append({j: ONE})
        return out


class Infeasible:
    """Sentinel result for an empty polytope."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Infeasible"

    def __bool__(self):
        return False


INFEASIBLE = Infeasible()


def solve(lp: LinearProgram, objective: Mapping[int, object] | None = None,
          fixed_zero: Iterable[int] = ()) -> list[Fraction] | Infeasible:
    """Minimize `objective` (default: sum of all variables) over the LP.

    Variables listed in `fixed_zero` are removed, i.e. forced to 0.
    Returns the variable values of an optimal basic solution or INFEASIBLE.
    Unbounded problems raise ValueError (the package only builds bounded ones).
    """
    fixed = set(fixed_zero)
    free = [j for j in range(lp.num_vars) if j not in fixed]
    col_of = {j: i for i, j in enumerate(free)}
    if objective is None:
        cost = [ONE] * len(free)
    else:
        cost = [ZERO] * len(free)
        for j, c in objective.items():
            if j in col_of:
                cost[col_of[j]] = Fraction(c)

    rows = []
    for coeffs, sense, rhs in lp.rows:
        dense = {col_of[j]: c for j, c in coeffs.items() if j in col_of}
        if rhs < 0:
            dense = {j: -c for j, c in dense.items()}
            rhs = -rhs
            sense = {LE: GE, GE: LE, EQ: EQ}[sense]
        if not dense:
            if (sense == LE and rhs >= 0) or (sense == GE and rhs <= 0) or (sense == EQ and rhs == 0):
                continue
            return INFEASIBLE
        rows.append((dense, sense, rhs))

    x = _two_phase(len(free), rows, cost)
    if x is INFEASIBLE:
        return x
    full = [ZERO] * lp.num_vars
    for i, j in enumerate(free):
        full[j] = x[i]
    return full


def _two_phase(n: int, rows, cost):
    n_slack = sum(1 for _, s, _ in rows if s != EQ)
    n_art = sum(1 for _, s, _ in rows if s != LE)
    width = n + n_slack + n_art
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    slack_at = n
    art_at = n + n_slack
    artificials = set()
    for dense, sense, rhs in rows:
        row = [ZERO] * (width + 1)
        for j, c in dense.items():
            row[j] = c
        row[width] = rhs
        if sense == LE:
            row[slack_at] = ONE
            basis.append(slack_at)
            slack_at += 1
        else:
            if sense == GE:
                row[slack_at] = -ONE
                slack_at += 1
            row[art_at] = ONE
            basis.append(art_at)
            artificials.add(art_at)
            art_at += 1
        tab.append(row)

    if artificials:
        phase1 = [ZERO] * (width + 1)
        for a in artificials:
            phase1[a] = ONE
        obj = _reduced(phase1, tab, basis)
        _run(tab, basis, obj, width, banned=set())
        if obj[width] != 0:  # obj holds -(phase-1 value)
            return INFEASIBLE
        _drive_out(tab, basis, artificials, width)
    full_cost = [ZERO] * (width + 1)
    for j, c in enumerate(cost):
        full_cost[j] = c
    obj = _reduced(full_cost, tab, basis)
    if not _run(tab, basis, obj, width, banned=artificials):
        raise ValueError("unbounded objective")
    x = [ZERO] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = tab[i][width]
    return x


def _reduced(cost, tab, basis):
    """Reduced-cost row: cost minus the basic combination; last entry is -value."""
    obj = list(cost)
    width = len(cost) - 1
    for i, b in enumerate(basis):
        cb = obj[b]
        if cb != 0:
            row = tab[i]
            for j in range(width + 1):
                if row[j]:
                    obj[j] -= cb * row[j]
    return obj


def _pivot(tab, basis, obj, r, c, width):
    prow = tab[r]
    piv = prow[c]
    if piv != 1:
        inv = 1 / piv
        for j in range(width + 1):
            if prow[j]:
                prow[j] *= inv
    nz = [j for j in range(width + 1) if prow[j]]
    for i, row in enumerate(tab):
        if i != r and row[c]:
            f = row[c]
            for j in nz:
                row[j] -= f * prow[j]
    if obj[c]:
        f = obj[c]
        for j in nz:
            obj[j] -= f * prow[j]
    basis[r] = c


def _run(tab, basis, obj, width, banned) -> bool:
    """Bland's rule iterations; False if unbounded."""
    while True:
        enter = next((j for j in range(width) if obj[j] < 0 and j not in banned), None)
        if enter is None:
            return True
        best = None
        for i, row in enumerate(tab):
            a = row[enter]
            if a > 0:
                ratio = row[width] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return False
        _pivot(tab, basis, obj, best[1], enter, width)


def _drive_out(tab, basis, artificials, width):
    """Pivot zero-valued artificials out of the basis where possible."""
    for i in range(len(tab)):
        if basis[i] in artificials:
            col = next((j for j in range(width) if j not in artificials and tab[i][j] != 0), None)
            if col is not None:
                _pivot(tab, basis, [ZERO] * (width + 1), i, col, width)


def rank(rows: Sequence[Mapping[int, Fraction]], num_vars: int) -> int:
    """Exact rank of a sparse rational matrix by Gaussian elimination."""
    mat = [[Fraction(r.get(j, 0)) for j in range(num_vars)] for r in rows]
    rk = 0
    for col in range(num_vars):
        piv = next((i for i in range(rk, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[rk], mat[piv] = mat[piv], mat[rk]
        p = mat[rk]
        for i in range(len(mat)):
            if i != rk and mat[i][col] != 0:
                f = mat[i][col] / p[col]
                mat[i] = [a - f * b for a, b in zip(mat[i], p)]
        rk += 1
    return rk


def is_vertex(lp: LinearProgram, x: Sequence[Fraction], fixed_zero: Iterable[int] = ()) -> bool:
    """Feasible and the active constraints have full column rank."""
    fixed = set(fixed_zero)
    if any(x[j] != 0 for j in fixed) or not lp.is_feasible_point(x):
        return False
    return rank(lp.tight_rows(x), lp.num_vars) == lp.num_vars
