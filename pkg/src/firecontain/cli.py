"""Text formats, seeded generators and the `firecontain` command line.

Formats (line oriented, '#' starts a comment, blank lines ignored):

    rmfc v1                    nukc v1                 solution v1
    n <int>                    points <n>              protect <id>      (tree)
    root <id>                  <n rows of n values>    center <p> <l>    (metric)
    edge <parent> <child>      levels <L>
    budget <b1> ... <bL>       k <k1> ... <kL>
    protect <id> ...           r <r1> ... <rL>

Values are exact rationals written as integers, "p/q" or decimals. A tree
file whose budget line has one integer on a tree of height > 1 is a classical
(uniform budget) instance. Exit codes: 0 ok, 1 infeasible or failed check,
2 malformed input, 3 resource cap.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import nukc
from .compress_tree import compress
from .dp_tree import exhaustive_budget, exhaustive_exact
from .errors import FireContainError, MalformedInput, ParameterOutOfRange, ResourceCap
from .explore_tree import ExploreLimits, thresholds
from .pipeline_tree import MODES, PipelineLimits, solve_rmfc, solve_srmfc
from .tree_core import (INFINITE, RmfcInstance, RootedTree, SrmfcInstance, build_tree, check_protection,
                        level_counts, stretch_of)

EXIT_OK, EXIT_FAILED, EXIT_MALFORMED, EXIT_CAP = 0, 1, 2, 3
SEED_LIMIT = 2 ** 64
TREE_ORACLE_LIMIT = 16  # non-root vertices
METRIC_ORACLE_LIMIT = 8  # points


# ---------------------------------------------------------------------------
# parsing and writing


@dataclass
class ParsedInstance:
    instance: SrmfcInstance | RmfcInstance | nukc.SnukcInstance
    targets: frozenset | None = None  # tree files only; None means every leaf

    @property
    def is_tree(self) -> bool:
        return not isinstance(self.instance, nukc.SnukcInstance)


@dataclass
class _Line:
    number: int
    words: list  # (column, text)

    @property
    def head(self) -> str:
        return self.words[0][1]

    def ints(self, start: int = 1) -> list[int]:
        out = []
        for col, word in self.words[start:]:
            try:
                out.append(int(word))
            except ValueError:
                raise MalformedInput(f"expected an integer, got {word!r}", self.number, col) from None
        return out

    def rationals(self, start: int = 1) -> list[Fraction]:
        out = []
        for col, word in self.words[start:]:
            try:
                out.append(Fraction(word))
            except (ValueError, ZeroDivisionError):
                raise MalformedInput(f"expected a rational, got {word!r}", self.number, col) from None
        return out

    def expect(self, head: str, count: int | None = None) -> None:
        if self.head != head:
            raise MalformedInput(f"expected '{head}', got {self.head!r}", self.number, self.words[0][0])
        if count is not None and len(self.words) - 1 != count:
            raise MalformedInput(f"'{head}' takes {count} value(s), got {len(self.words) - 1}", self.number)


def _lines(text: str) -> list[_Line]:
    out = []
    for number, raw in enumerate(text.splitlines(), start=1):
        raw = raw.split("#", 1)[0]
        words, col = [], 0
        for part in raw.split():
            col = raw.index(part, col)
            words.append((col + 1, part))
            col += len(part)
        if words:
            out.append(_Line(number, words))
    return out


def _take(lines: list[_Line], i: int, what: str) -> _Line:
    if i >= len(lines):
        last = lines[-1].number if lines else 1
        raise MalformedInput(f"unexpected end of input, expected {what}", last)
    return lines[i]


def parse_instance(text: str) -> ParsedInstance:
    lines = _lines(text)
    if not lines:
        raise MalformedInput("empty input", 1)
    header = lines[0]
    tag = " ".join(w for _, w in header.words)
    if tag == "rmfc v1":
        return _parse_tree(lines)
    if tag == "nukc v1":
        return _parse_metric(lines)
    raise MalformedInput(f"unknown header {tag!r}", header.number, 1)


def _wrap(line: _Line, action):
    try:
        return action()
    except MalformedInput as err:
        if err.line is None:
            raise MalformedInput(str(err), line.number) from None
        raise


def _parse_tree(lines: list[_Line]) -> ParsedInstance:
    i = 1
    line = _take(lines, i, "'n'")
    line.expect("n", 1)
    (n,) = line.ints()
    if n < 2:
        raise MalformedInput("a tree needs at least 2 vertices", line.number)
    line = _take(lines, i + 1, "'root'")
    line.expect("root", 1)
    (root,) = line.ints()
    i += 2
    edges = []
    for _ in range(n - 1):
        line = _take(lines, i, "'edge'")
        line.expect("edge", 2)
        p, c = line.ints()
        for col, v in zip((line.words[1][0], line.words[2][0]), (p, c)):
            if not 0 <= v < n:
                raise MalformedInput(f"vertex {v} outside 0..{n - 1}", line.number, col)
        edges.append((p, c))
        i += 1
    budget_line = _take(lines, i, "'budget'")
    budget_line.expect("budget")
    tree = _wrap(budget_line, lambda: build_tree(edges, root))
    budgets = budget_line.rationals()
    i += 1
    targets = None
    if i < len(lines):
        line = lines[i]
        line.expect("protect")
        ids = line.ints()
        for (col, _), v in zip(line.words[1:], ids):
            if not 0 <= v < n or v == root:
                raise MalformedInput(f"target {v} is not a non-root vertex", line.number, col)
        targets = frozenset(ids)
        i += 1
    if i < len(lines):
        raise MalformedInput("trailing content", lines[i].number)
    if len(budgets) == 1 and tree.height > 1:
        if budgets[0].denominator != 1:
            raise MalformedInput("a uniform budget must be an integer", budget_line.number)
        inst = _wrap(budget_line, lambda: RmfcInstance(tree, int(budgets[0])))
    else:
        inst = _wrap(budget_line, lambda: SrmfcInstance(tree, tuple(budgets)))
    return ParsedInstance(inst, targets)


def _parse_metric(lines: list[_Line]) -> ParsedInstance:
    line = _take(lines, 1, "'points'")
    line.expect("points", 1)
    (n,) = line.ints()
    if n < 1:
        raise MalformedInput("need at least one point", line.number)
    rows = []
    for j in range(n):
        row_line = _take(lines, 2 + j, f"distance row {j}")
        values = row_line.rationals(0)
        if len(values) != n:
            raise MalformedInput(f"distance row {j} needs {n} values, got {len(values)}", row_line.number)
        rows.append(values)
    i = 2 + n
    line = _take(lines, i, "'levels'")
    line.expect("levels", 1)
    (L,) = line.ints()
    if L < 1:
        raise MalformedInput("need at least one level", line.number)
    k_line = _take(lines, i + 1, "'k'")
    k_line.expect("k", L)
    r_line = _take(lines, i + 2, "'r'")
    r_line.expect("r", L)
    if i + 3 < len(lines):
        raise MalformedInput("trailing content", lines[i + 3].number)
    first_row = lines[2].number
    try:
        space = nukc.MetricSpace(rows)
    except MalformedInput as err:
        raise MalformedInput(str(err), first_row) from None
    try:
        inst = nukc.SnukcInstance(space, tuple(r_line.rationals()), tuple(k_line.rationals()))
    except FireContainError as err:
        raise MalformedInput(str(err), r_line.number) from None
    return ParsedInstance(inst)


def parse_solution(text: str) -> frozenset:
    """Protect ids (ints) or centers ((point, level) pairs)."""
    lines = _lines(text)
    if not lines or " ".join(w for _, w in lines[0].words) != "solution v1":
        raise MalformedInput("expected header 'solution v1'", lines[0].number if lines else 1)
    out = set()
    kinds = set()
    for line in lines[1:]:
        if line.head == "protect":
            line.expect("protect", 1)
            out.add(line.ints()[0])
        elif line.head == "center":
            line.expect("center", 2)
            out.add(tuple(line.ints()))
        else:
            raise MalformedInput(f"unknown entry {line.head!r}", line.number, line.words[0][0])
        kinds.add(line.head)
    if len(kinds) > 1:
        raise MalformedInput("a solution mixes protect and center lines")
    return frozenset(out)


def _fmt(values: Iterable) -> str:
    return " ".join(str(Fraction(v)) for v in values)


def serialize(inst, targets: Iterable[int] | None = None) -> str:
    if isinstance(inst, nukc.SnukcInstance):
        out = ["nukc v1", f"points {inst.n}"]
        out += [_fmt(row) for row in inst.space.dist]
        out += [f"levels {inst.height}", f"k {_fmt(inst.budgets)}", f"r {_fmt(inst.radii)}"]
        return "\n".join(out) + "\n"
    tree: RootedTree = inst.tree
    out = ["rmfc v1", f"n {tree.vertex_count}", f"root {tree.root}"]
    out += [f"edge {p} {c}" for p, c in tree.edges()]
    if isinstance(inst, RmfcInstance):
        out.append(f"budget {inst.budget}")
    else:
        out.append(f"budget {_fmt(inst.budgets)}")
    if targets is not None:
        out.append("protect " + " ".join(str(t) for t in sorted(targets)))
    return "\n".join(out) + "\n"


def serialize_solution(solution: Iterable) -> str:
    out = ["solution v1"]
    for item in sorted(solution):
        if isinstance(item, tuple):
            out.append(f"center {item[0]} {item[1]}")
        else:
            out.append(f"protect {item}")
    return "\n".join(out) + "\n"


def digest(inst, targets=None) -> str:
    return hashlib.sha256(serialize(inst, targets).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# generators


def _rng(seed: int) -> random.Random:
    if not 0 <= seed < SEED_LIMIT:
        raise ParameterOutOfRange("seed must be a 64-bit unsigned integer")
    return random.Random(seed)


def generate_tree(n: int, depth: int, branching: int, seed: int, budget_max: int = 1) -> SrmfcInstance:
    """Random tree on n vertices with height exactly `depth`.

    A root-to-leaf spine of length `depth` is laid first; every further vertex
    picks its parent uniformly among vertices above the bottom level that still
    have fewer than `branching` children. Budgets are uniform in 1..budget_max.
    """
    if depth < 1 or branching < 1 or budget_max < 1:
        raise ParameterOutOfRange("depth, branching and budget_max must be positive")
    if n < depth + 1:
        raise ParameterOutOfRange("n must be at least depth + 1")
    rng = _rng(seed)
    level = [0]
    kids = [0]
    edges = []
    for v in range(1, depth + 1):
        edges.append((v - 1, v))
        level.append(v)
        kids.append(0)
        kids[v - 1] += 1
    for v in range(depth + 1, n):
        open_ = [u for u in range(v) if level[u] < depth and kids[u] < branching]
        if not open_:
            raise ParameterOutOfRange("branching too small for n vertices at this depth")
        p = rng.choice(open_)
        edges.append((p, v))
        level.append(level[p] + 1)
        kids.append(0)
        kids[p] += 1
    tree = build_tree(edges, 0)
    return SrmfcInstance(tree, tuple(Fraction(rng.randint(1, budget_max)) for _ in range(depth)))


def generate_metric(n: int, dim: int, L: int, seed: int, span: int = 20, radius_max: int = 10,
                    budget_max: int = 2) -> nukc.SnukcInstance:
    """Random instance: integer points in a line (dim 1) or plane (dim 2) under the l1 distance,
    or (dim 0) a random symmetric matrix closed under shortest paths.

    Radii are L draws from 1..radius_max sorted decreasingly; budgets are
    uniform in 1..budget_max.
    """
    if n < 1 or L < 1 or span < 1 or radius_max < 1 or budget_max < 1:
        raise ParameterOutOfRange("sizes must be positive")
    if dim not in (0, 1, 2):
        raise ParameterOutOfRange("dim must be 0 (random matrix), 1 or 2")
    rng = _rng(seed)
    if dim:
        pts = [tuple(rng.randint(0, span) for _ in range(dim)) for _ in range(n)]
        dist = [[sum(abs(a - b) for a, b in zip(p, q)) for q in pts] for p in pts]
    else:
        dist = [[0] * n for _ in range(n)]
        for u in range(n):
            for v in range(u + 1, n):
                dist[u][v] = dist[v][u] = rng.randint(1, span)
        for w in range(n):
            for u in range(n):
                for v in range(n):
                    if dist[u][w] + dist[w][v] < dist[u][v]:
                        dist[u][v] = dist[u][w] + dist[w][v]
    radii = sorted((rng.randint(1, radius_max) for _ in range(L)), reverse=True)
    budgets = [rng.randint(1, budget_max) for _ in range(L)]
    return nukc.SnukcInstance(nukc.MetricSpace(dist), tuple(radii), tuple(budgets))


# ---------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    command: str
    instance: str  # digest
    result: dict = field(default_factory=dict)
    guarantee: str = "none"
    truncated: bool = False
    seconds: float = 0.0
    seed: int | None = None
    ok: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if value is INFINITE:
        return "inf"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _num(value):
    return "inf" if value is INFINITE else str(value)


class CheckFailed(FireContainError):
    """A solution did not re-verify."""


def _solve_tree(parsed: ParsedInstance, args) -> dict:
    inst = parsed.instance
    tree = inst.tree
    limits = PipelineLimits(explore=ExploreLimits(max_nodes=args.max_nodes))
    small = tree.vertex_count - 1 <= TREE_ORACLE_LIMIT
    if args.problem == "rmfc":
        res = solve_rmfc(tree, args.mode, args.eps, limits, parsed.targets)
        if not check_protection(tree, res.protect, parsed.targets):
            raise CheckFailed("solver output does not protect the targets")
        if max(level_counts(tree, res.protect), default=0) != res.budget:
            raise CheckFailed("reported budget does not match the solution")
        out = {"solution": sorted(res.protect), "budget": res.budget, "mode": res.mode,
               "truncated": res.truncated, "guarantee": res.guarantee}
        if small:
            opt, _ = exhaustive_budget(tree, parsed.targets)
            out["oracle_budget"] = opt
            out["ratio"] = str(Fraction(res.budget, opt)) if opt else "0"
        return out
    if isinstance(inst, RmfcInstance):
        inst = inst.as_smooth()
    res = solve_srmfc(inst, args.eps, limits, parsed.targets)
    if not check_protection(tree, res.protect, parsed.targets) or stretch_of(inst, res.protect,
                                                                             parsed.targets) != res.alpha:
        raise CheckFailed("solver output does not re-verify")
    out = {"solution": sorted(res.protect), "alpha": str(res.alpha), "truncated": res.truncated,
           "guarantee": "(1+17eps) * alpha_OPT" if res.guaranteed else "none"}
    if small:
        opt, _ = exhaustive_exact(inst, parsed.targets)
        out["oracle_alpha"] = _num(opt)
    return out


def _solve_metric(parsed: ParsedInstance, args) -> dict:
    inst = parsed.instance
    limits = nukc.NukcLimits(max_nodes=args.max_nodes)
    if args.problem == "nukc":
        flat, stretch, smooth = nukc.solve_nukc(inst, args.eps, limits)
        if not nukc.is_feasible(inst, flat, stretch, smooth.beta, smooth=False):
            raise CheckFailed("flattened solution does not re-verify")
        centers, alpha, beta = flat, stretch, smooth.beta
    else:
        smooth = nukc.solve_snukc(inst, args.eps, limits)
        if smooth.alpha is INFINITE or not nukc.is_feasible(inst, smooth.centers, smooth.alpha, smooth.beta):
            raise CheckFailed("solver output does not re-verify")
        centers, alpha, beta = smooth.centers, smooth.alpha, smooth.beta
    guarantee = "none"
    if smooth.guaranteed:
        guarantee = f"alpha <= {smooth.budget_bound}, beta <= {smooth.dilation_factor} * beta_OPT"
    out = {"solution": sorted(centers), "alpha": _num(alpha), "beta": _num(beta),
           "beta_guess": _num(smooth.beta_guess) if smooth.beta_guess is not None else None,
           "certified": smooth.certified, "truncated": smooth.truncated, "guarantee": guarantee}
    if inst.n <= METRIC_ORACLE_LIMIT:
        opt, _ = nukc.exhaustive_nukc(inst)
        out["oracle_beta"] = _num(opt)
    return out


def cmd_solve(args) -> RunReport:
    parsed = _read(args.input)
    tree_problem = args.problem in ("srmfc", "rmfc")
    if tree_problem != parsed.is_tree:
        raise ParameterOutOfRange(f"problem {args.problem} does not match the instance file")
    result = _solve_tree(parsed, args) if tree_problem else _solve_metric(parsed, args)
    if args.output:
        sol = [tuple(c) for c in result["solution"]] if not tree_problem else result["solution"]
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(serialize_solution(sol))
    truncated = result.pop("truncated")
    guarantee = result.pop("guarantee")
    if truncated:
        guarantee = "none (search truncated)"
    return RunReport("solve", digest(parsed.instance, parsed.targets), result, guarantee, truncated)


def cmd_check(args) -> RunReport:
    parsed = _read(args.input)
    with open(args.solution, encoding="utf-8") as fh:
        sol = parse_solution(fh.read())
    inst = parsed.instance
    if parsed.is_tree:
        if any(isinstance(s, tuple) for s in sol):
            raise MalformedInput("tree solutions use protect lines")
        tree = inst.tree
        if any(not 0 <= v < tree.vertex_count or v == tree.root for v in sol):
            raise MalformedInput("protected vertex outside the tree")
        protects = check_protection(tree, sol, parsed.targets)
        usage = level_counts(tree, sol)
        result = {"protects": protects, "per_level": usage}
        ok = protects
        if isinstance(inst, RmfcInstance):
            ok = ok and max(usage, default=0) <= inst.budget
        else:
            stretch = stretch_of(inst, sol, parsed.targets)
            result["alpha"] = _num(stretch)
            if args.alpha is not None:
                ok = ok and stretch is not INFINITE and stretch <= Fraction(args.alpha)
    else:
        if any(not isinstance(s, tuple) for s in sol):
            raise MalformedInput("metric solutions use center lines")
        if any(not (0 <= v < inst.n and 1 <= lvl <= inst.height) for v, lvl in sol):
            raise MalformedInput("center outside the instance")
        alpha, beta = nukc.measure(inst, sol)
        result = {"alpha": _num(alpha), "beta": _num(beta), "per_level": nukc.level_counts(inst, sol)}
        ok = alpha is not INFINITE and beta is not INFINITE
        if args.alpha is not None or args.beta is not None:
            a = Fraction(args.alpha) if args.alpha is not None else alpha
            b = Fraction(args.beta) if args.beta is not None else beta
            ok = ok and nukc.is_feasible(inst, sol, a, b, smooth=not args.per_level)
    report = RunReport("check", digest(inst, parsed.targets), result)
    report.ok = ok
    return report


def cmd_compress(args) -> RunReport:
    parsed = _read(args.input)
    inst = parsed.instance
    if parsed.is_tree:
        if isinstance(inst, RmfcInstance):
            inst = inst.as_smooth()
        out = compress(inst, args.eps).inst
        text = serialize(out)
        result = {"levels": out.height, "budgets": [str(b) for b in out.budgets]}
    else:
        out, lifter = nukc.compress_nukc(inst, args.eps)
        text = serialize(out)
        result = {"levels": out.height, "budgets": [str(b) for b in out.budgets],
                  "radii": [str(r) for r in out.radii], "level_map": list(lifter.level_map)}
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return RunReport("compress", digest(parsed.instance, parsed.targets), result)


def cmd_oracle(args) -> RunReport:
    parsed = _read(args.input)
    inst = parsed.instance
    if parsed.is_tree:
        budget, cut = exhaustive_budget(inst.tree, parsed.targets)
        result = {"budget_opt": budget, "budget_witness": sorted(cut)}
        if isinstance(inst, SrmfcInstance):
            alpha, best = exhaustive_exact(inst, parsed.targets)
            result.update(alpha_opt=_num(alpha), alpha_witness=sorted(best) if best is not None else None)
    else:
        beta, best = nukc.exhaustive_nukc(inst)
        result = {"beta_opt": _num(beta), "witness": sorted(best) if best is not None else None}
    report = RunReport("oracle", digest(inst, parsed.targets), result)
    report.ok = not (result.get("beta_opt") == "inf" or result.get("alpha_opt") == "inf")
    return report


def cmd_analyze(args) -> RunReport:
    parsed = _read(args.input)
    inst = parsed.instance
    eps = Fraction(args.eps)
    if parsed.is_tree:
        if isinstance(inst, RmfcInstance):
            inst = inst.as_smooth()
        th = thresholds(eps, inst)
        result = {"h_hat": th.h_hat, "h_check": th.h_check, "kappa": th.kappa, "N": th.N,
                  "zeta_bar": str(th.zeta_bar), "height": th.height}
    else:
        th = nukc.nukc_thresholds(inst, eps)
        result = {"h_hat": th.h_hat, "h_check": th.h_check, "lambda": th.lam, "kappa": th.kappa,
                  "kappa2": th.kappa2, "N": th.N, "rho": str(th.rho), "sigma": str(th.sigma),
                  "zeta_bar": str(th.zeta_bar), "height": th.height,
                  "dilation_factor": str(nukc.dilation_factor(eps))}
    result["eps_in_guarantee_range"] = eps <= Fraction(1, 7)
    return RunReport("analyze", digest(parsed.instance, parsed.targets), result)


def cmd_generate(args) -> RunReport:
    if args.kind == "tree":
        inst = generate_tree(args.n, args.depth, args.branching, args.seed, args.budget_max)
    else:
        inst = generate_metric(args.n, args.dim, args.levels, args.seed, budget_max=args.budget_max)
    text = serialize(inst)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return RunReport("generate", digest(inst), {}, seed=args.seed)


BENCH_COLUMNS = ("family", "seed", "n", "levels", "solver", "value", "oracle", "ratio", "seconds", "truncated")


def bench_rows(family: str, count: int, seed: int, n: int, levels: int, eps, max_nodes: int) -> list[dict]:
    """One row per generated instance: solver value, oracle value, their ratio, wall time."""
    eps = Fraction(eps)
    rows = []
    for i in range(count):
        s = (seed + i) % SEED_LIMIT
        start = time.perf_counter()
        if family == "tree":
            inst = generate_tree(n, levels, 3, s, 2)
            res = solve_rmfc(inst.tree, "two_approx", eps, PipelineLimits(explore=ExploreLimits(max_nodes=max_nodes)))
            value, truncated = Fraction(res.budget), res.truncated
            took = time.perf_counter() - start
            oracle = Fraction(exhaustive_budget(inst.tree)[0])
            solver = "rmfc/two_approx"
        else:
            inst = generate_metric(n, 2, levels, s)
            res = nukc.solve_snukc(inst, eps, nukc.NukcLimits(max_nodes=max_nodes))
            value, truncated = res.beta, res.truncated
            took = time.perf_counter() - start
            oracle = nukc.exhaustive_nukc(inst)[0]
            solver = "snukc/beta"
        ratio = "inf" if value is INFINITE else ("1" if oracle == value else
                                                 (str(value / oracle) if oracle not in (0, INFINITE) else "inf"))
        rows.append({"family": family, "seed": s, "n": n, "levels": levels, "solver": solver,
                     "value": _num(value), "oracle": _num(oracle), "ratio": ratio,
                     "seconds": f"{took:.4f}", "truncated": truncated})
    return rows


def cmd_bench(args) -> RunReport:
    rows = bench_rows(args.family, args.count, args.seed, args.n, args.levels, args.eps, args.max_nodes)
    print("\t".join(BENCH_COLUMNS))
    for row in rows:
        print("\t".join(str(row[c]) for c in BENCH_COLUMNS))
    report = RunReport("bench", "-", {"rows": len(rows)}, seed=args.seed)
    report.truncated = any(r["truncated"] for r in rows)
    return report


def _read(path: str) -> ParsedInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="firecontain", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a tree or metric instance")
    p.add_argument("--problem", choices=("srmfc", "rmfc", "snukc", "nukc"), required=True)
    p.add_argument("--mode", choices=MODES, default="two_approx", help="rmfc only")
    p.add_argument("--eps", type=_rational, default=Fraction(1, 7))
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", help="write the solution file here")
    p.add_argument("--max-nodes", type=int, default=5000)
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("check", help="verify a solution file against an instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--alpha", type=_rational)
    p.add_argument("--beta", type=_rational)
    p.add_argument("--per-level", action="store_true", help="metric: per-level instead of prefix budgets")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("compress", help="write the geometrically compressed instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--eps", type=_rational, default=Fraction(1, 7))
    p.add_argument("--out", dest="output")
    p.set_defaults(run=cmd_compress)

    p = sub.add_parser("oracle", help="exact optimum by exhaustive search")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(run=cmd_oracle)

    p = sub.add_parser("analyze", help="print the search thresholds for an instance")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--eps", type=_rational, default=Fraction(1, 7))
    p.set_defaults(run=cmd_analyze)

    p = sub.add_parser("generate", help="write a seeded random instance")
    p.add_argument("kind", choices=("tree", "metric"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, default=3, help="tree height")
    p.add_argument("--branching", type=int, default=3)
    p.add_argument("--dim", type=int, default=2, help="metric: 0 random matrix, 1 line, 2 plane")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--budget-max", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="output")
    p.set_defaults(run=cmd_generate)

    p = sub.add_parser("bench", help="tab-separated table of solver value vs oracle")
    p.add_argument("family", choices=("tree", "metric"))
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--eps", type=_rational, default=Fraction(1, 7))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-nodes", type=int, default=5000)
    p.set_defaults(run=cmd_bench)
    return parser


def run(argv: Sequence[str] | None = None) -> tuple[int, RunReport | None]:
    """Parse flags, dispatch, and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        report = args.run(args)
    except MalformedInput as err:
        print(f"malformed input: {err}", file=sys.stderr)
        return EXIT_MALFORMED, None
    except ResourceCap as err:
        print(f"resource cap: {err}", file=sys.stderr)
        return EXIT_CAP, None
    except (FireContainError, ValueError) as err:
        print(f"failed: {err}", file=sys.stderr)
        return EXIT_FAILED, None
    except OSError as err:
        print(f"cannot read or write: {err}", file=sys.stderr)
        return EXIT_FAILED, None
    report.seconds = round(time.perf_counter() - start, 4)
    return (EXIT_OK if report.ok else EXIT_FAILED), report


def main(argv: Sequence[str] | None = None) -> int:
    code, report = run(argv)
    if report is not None and report.command not in ("generate", "bench"):
        print(report.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
