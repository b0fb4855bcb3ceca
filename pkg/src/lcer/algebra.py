"""Finite algebras extending the underlying model: model checking a set of
constrained equations, refuting goals, bounded counter-model search,
congruences/quotients, and value-consistency of a theory.

Carrier elements are the underlying model's elements plus fresh atoms (written
with a leading '#').  A theory symbol keeps its model interpretation on
underlying elements; only entries touching fresh elements live in tables.
Counter-model search branches lazily on exactly the table entries that the
checks actually consult, in a fixed deterministic order, so the first algebra
found is canonical for the documented order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .equations import (
    CETheory,
    ConstrainedEquation,
    ConversionTrace,
    SearchLimits,
    TraceStep,
    default_value_pool,
    rule_step_candidates,
    term_candidate_pool,
    term_key,
)
from .models import UnderlyingModel
from .sexpr import Atom, ParseError, expect_atom, expect_list, head, parse_sexprs
from .terms import (
    TERM,
    THEORY,
    FunSymbol,
    Sort,
    Term,
    Variable,
    subterms_of,
    vars_of,
)


class AlgebraError(Exception):
    pass


class UncoveredVariable(AlgebraError):
    pass


@dataclass
class FiniteCEAlgebra:
    theory: CETheory
    carriers: dict[Sort, tuple]
    tables: dict[str, dict[tuple, object]]  # symbol name -> args -> result

    def model(self) -> UnderlyingModel:
        return self.theory.model

    def is_underlying(self, sort: Sort, elem: object) -> bool:
        return sort.kind == THEORY and self.theory.model.element_in_carrier(sort, elem)

    def underlying_part(self, sort: Sort) -> tuple:
        return tuple(e for e in self.carriers[sort] if self.is_underlying(sort, e))

    def validate(self) -> None:
        model = self.theory.model
        for name, sort in model.sorts.items():
            car = model.carriers[sort]
            if sort not in self.carriers:
                raise AlgebraError(f"no carrier declared for sort {name}")
            if car.finite:
                missing = set(car.elements) - set(self.carriers[sort])  # type: ignore[arg-type]
                if missing:
                    raise AlgebraError(
                        f"carrier of {name} must contain every model element; "
                        f"missing {sorted(map(str, missing))}")
        for sort in self.theory.signature.sorts:
            if sort.kind == TERM and sort not in self.carriers:
                raise AlgebraError(f"no carrier declared for sort {sort.name}")
            if not self.carriers.get(sort, ()):
                raise AlgebraError(f"carrier of {sort.name} is empty")
        for f in self.theory.signature.term_symbols():
            table = self.tables.get(f.name, {})
            for combo in itertools.product(*(self.carriers[s] for s in f.arg_sorts)):
                if combo not in table:
                    raise AlgebraError(
                        f"table for {f.name} is missing entry {tuple(map(str, combo))}")
                if table[combo] not in self.carriers[f.result_sort]:
                    raise AlgebraError(f"table for {f.name} leaves the carrier")

    def eval(self, t: Term, rho: dict[Variable, object]) -> object:
        if isinstance(t, Variable):
            if t not in rho:
                raise UncoveredVariable(f"valuation does not cover {t.name}")
            return rho[t]
        if t.fun.is_value:
            if t.fun.value not in self.carriers[t.fun.result_sort]:
                raise AlgebraError(
                    f"value {t.fun.name} is outside the declared carrier slice")
            return t.fun.value
        args = tuple(self.eval(a, rho) for a in t.args)
        if t.fun.kind == THEORY and all(
                self.is_underlying(s, a) for s, a in zip(t.fun.arg_sorts, args)):
            result = self.theory.model.interp[t.fun.name](*args)
            if result not in self.carriers[t.fun.result_sort]:
                raise AlgebraError(
                    f"{t.fun.name}{tuple(map(str, args))} leaves the declared "
                    "carrier slice")
            return result
        table = self.tables.get(t.fun.name, {})
        if args not in table:
            raise AlgebraError(f"table for {t.fun.name} has no entry {tuple(map(str, args))}")
        return table[args]


def _valuations(alg: FiniteCEAlgebra, variables: list[Variable],
                logical: frozenset[Variable]) -> Iterable[dict[Variable, object]]:
    """Logical variables range over the underlying part, others over the full
    carrier, in declared order."""
    domains = []
    for v in variables:
        if v in logical:
            domains.append(alg.underlying_part(v.sort))
        else:
            domains.append(alg.carriers[v.sort])
    for combo in itertools.product(*domains):
        yield dict(zip(variables, combo))


def _constraint_holds(alg: FiniteCEAlgebra, ce: ConstrainedEquation,
                      rho: dict[Variable, object]) -> bool:
    # Var(constraint) is inside the logical set, which ranges over underlying
    # elements, so the underlying model answers the query.
    return bool(alg.theory.model.eval_with(ce.constraint, rho))


@dataclass(frozen=True)
class ModelCheckResult:
    ok: bool
    eq_index: Optional[int] = None
    valuation: Optional[dict] = None

    def __bool__(self) -> bool:
        return self.ok


def check_is_model(alg: FiniteCEAlgebra, max_valuations: int = 2_000_000) -> ModelCheckResult:
    """Valid iff every equation holds under every admissible valuation."""
    count = 0
    for i, ce in enumerate(alg.theory.equations):
        variables = sorted(vars_of(ce.lhs) | vars_of(ce.rhs) | ce.logical_vars,
                           key=lambda v: (v.name, v.sort.name))
        for rho in _valuations(alg, variables, ce.logical_vars):
            count += 1
            if count > max_valuations:
                raise AlgebraError("model check exceeded the valuation budget")
            if not _constraint_holds(alg, ce, rho):
                continue
            if alg.eval(ce.lhs, rho) != alg.eval(ce.rhs, rho):
                return ModelCheckResult(False, i, rho)
    return ModelCheckResult(True)


def check_refutes(alg: FiniteCEAlgebra, goal: ConstrainedEquation) -> Optional[dict]:
    """A valuation satisfying the goal's constraint with unequal sides, or None."""
    variables = sorted(vars_of(goal.lhs) | vars_of(goal.rhs) | goal.logical_vars,
                       key=lambda v: (v.name, v.sort.name))
    for rho in _valuations(alg, variables, goal.logical_vars):
        if not _constraint_holds(alg, goal, rho):
            continue
        if alg.eval(goal.lhs, rho) != alg.eval(goal.rhs, rho):
            return rho
    return None


# -- counter-model search --------------------------------------------------------

class _Need(Exception):
    def __init__(self, key: tuple[str, tuple], result_sort: Sort) -> None:
        self.key = key
        self.result_sort = result_sort


class _Partial:
    """Evaluator over a partial table assignment; missing entries raise _Need."""

    def __init__(self, alg: FiniteCEAlgebra, assignment: dict) -> None:
        self.alg = alg
        self.assignment = assignment

    def eval(self, t: Term, rho: dict[Variable, object]) -> object:
        alg = self.alg
        if isinstance(t, Variable):
            return rho[t]
        if t.fun.is_value:
            return t.fun.value
        args = tuple(self.eval(a, rho) for a in t.args)
        if t.fun.kind == THEORY and all(
                alg.is_underlying(s, a) for s, a in zip(t.fun.arg_sorts, args)):
            return alg.theory.model.interp[t.fun.name](*args)
        key = (t.fun.name, args)
        if key not in self.assignment:
            raise _Need(key, t.fun.result_sort)
        return self.assignment[key]


@dataclass
class SearchOutcome:
    algebra: Optional[FiniteCEAlgebra]
    refuting_valuation: Optional[dict]
    nodes: int
    exhausted: bool
    bounds: str


def search_counter_model(
    theory: CETheory,
    goal: ConstrainedEquation,
    max_extra_per_theory_sort: int = 1,
    term_sort_size: int = 1,
    max_nodes: int = 500_000,
) -> SearchOutcome:
    """First finite algebra (in the documented deterministic order) that models
    the theory's equations and refutes the goal, within the carrier bounds."""
    model = theory.model
    if not model.finite:
        raise AlgebraError(
            "counter-model search needs a finite underlying model; for infinite "
            "models only verification of a supplied algebra file is available")

    carriers: dict[Sort, tuple] = {}
    for name, sort in model.sorts.items():
        fresh = tuple(f"#{name.lower()}{i}" for i in range(max_extra_per_theory_sort))
        carriers[sort] = tuple(model.carriers[sort].elements) + fresh  # type: ignore[arg-type]
    for sort in theory.signature.sorts:
        if sort.kind == TERM:
            carriers[sort] = tuple(f"#{sort.name.lower()}{i}" for i in range(term_sort_size))

    shell = FiniteCEAlgebra(theory, carriers, {})
    bounds = (f"extra={max_extra_per_theory_sort} per theory sort, "
              f"term-sort size={term_sort_size}")

    goal_vars = sorted(vars_of(goal.lhs) | vars_of(goal.rhs) | goal.logical_vars,
                       key=lambda v: (v.name, v.sort.name))
    eq_plans = []
    for ce in theory.equations:
        variables = sorted(vars_of(ce.lhs) | vars_of(ce.rhs) | ce.logical_vars,
                           key=lambda v: (v.name, v.sort.name))
        eq_plans.append((ce, variables))

    nodes = 0
    exhausted_budget = False

    def run(assignment: dict) -> Optional[dict]:
        """None if some equation fails; otherwise a refuting valuation or
        raises _NoRefutation."""
        ev = _Partial(shell, assignment)
        for ce, variables in eq_plans:
            for rho in _valuations(shell, variables, ce.logical_vars):
                if not bool(model.eval_with(ce.constraint, rho)):
                    continue
                if ev.eval(ce.lhs, rho) != ev.eval(ce.rhs, rho):
                    return None
        for rho in _valuations(shell, goal_vars, goal.logical_vars):
            if not bool(model.eval_with(goal.constraint, rho)):
                continue
            if ev.eval(goal.lhs, rho) != ev.eval(goal.rhs, rho):
                return rho
        raise _NoRefutation()

    def solve(assignment: dict) -> Optional[tuple[dict, dict]]:
        nonlocal nodes, exhausted_budget
        nodes += 1
        if nodes > max_nodes:
            exhausted_budget = True
            return None
        try:
            rho = run(assignment)
        except _Need as need:
            for value in shell.carriers[need.result_sort]:
                assignment[need.key] = value
                found = solve(assignment)
                if found is not None:
                    return found
                del assignment[need.key]
            return None
        except _NoRefutation:
            return None
        if rho is None:
            return None
        return assignment, rho

    found = solve({})
    if found is None:
        return SearchOutcome(None, None, nodes, exhausted_budget, bounds)
    assignment, rho = found

    tables: dict[str, dict[tuple, object]] = {}
    for (name, args), result in assignment.items():
        tables.setdefault(name, {})[args] = result
    for f in theory.signature.term_symbols():
        table = tables.setdefault(f.name, {})
        for combo in itertools.product(*(carriers[s] for s in f.arg_sorts)):
            table.setdefault(combo, carriers[f.result_sort][0])
    for f in model.symbols.values():
        table = tables.setdefault(f.name, {})
        for combo in itertools.product(*(carriers[s] for s in f.arg_sorts)):
            if all(shell.is_underlying(s, e) for s, e in zip(f.arg_sorts, combo)):
                continue
            table.setdefault(combo, carriers[f.result_sort][0])
    algebra = FiniteCEAlgebra(theory, carriers, tables)
    algebra.validate()
    return SearchOutcome(algebra, rho, nodes, False, bounds)


class _NoRefutation(Exception):
    pass


# -- congruences and quotients -----------------------------------------------

@dataclass
class FiniteCongruence:
    blocks: dict[Sort, tuple[frozenset, ...]]

    def rep_map(self, carriers: dict[Sort, tuple]) -> dict[Sort, dict]:
        out: dict[Sort, dict] = {}
        for sort, parts in self.blocks.items():
            order = {e: i for i, e in enumerate(carriers[sort])}
            reps = {}
            for block in parts:
                rep = min(block, key=lambda e: order[e])
                for e in block:
                    reps[e] = rep
            out[sort] = reps
        return out


class NotACongruence(AlgebraError):
    pass


def quotient(alg: FiniteCEAlgebra, cong: FiniteCongruence) -> FiniteCEAlgebra:
    """Quotient algebra; requires identity on the underlying part and table
    compatibility, and reports the violating tuple otherwise."""
    for sort, parts in cong.blocks.items():
        seen: set = set()
        for block in parts:
            if not block:
                raise NotACongruence(f"empty block for sort {sort.name}")
            under = [e for e in block if alg.is_underlying(sort, e)]
            if len(under) > 1:
                raise NotACongruence(
                    f"block {sorted(map(str, block))} merges underlying elements "
                    f"{sorted(map(str, under))}")
            seen.update(block)
        if seen != set(alg.carriers[sort]):
            raise NotACongruence(f"blocks do not partition the carrier of {sort.name}")
    reps = cong.rep_map(alg.carriers)

    def rep(sort: Sort, e: object) -> object:
        return reps[sort][e]

    def lookup(f: FunSymbol, combo: tuple) -> object:
        if f.kind == THEORY and all(
                alg.is_underlying(s, e) for s, e in zip(f.arg_sorts, combo)):
            return alg.theory.model.interp[f.name](*combo)
        return alg.tables[f.name][combo]

    symbols = list(alg.theory.signature.term_symbols()) + \
        list(alg.theory.model.symbols.values())
    for f in symbols:
        by_rep: dict[tuple, tuple] = {}
        for combo in itertools.product(*(alg.carriers[s] for s in f.arg_sorts)):
            combo_rep = tuple(rep(s, e) for s, e in zip(f.arg_sorts, combo))
            r = rep(f.result_sort, lookup(f, combo))
            prev = by_rep.get(combo_rep)
            if prev is None:
                by_rep[combo_rep] = (r, combo)
            elif prev[0] != r:
                raise NotACongruence(
                    f"{f.name} is not compatible: {tuple(map(str, prev[1]))} and "
                    f"{tuple(map(str, combo))} are related but give unrelated results")

    new_carriers = {
        sort: tuple(dict.fromkeys(rep(sort, e) for e in elems))
        for sort, elems in alg.carriers.items()
    }
    new_tables: dict[str, dict[tuple, object]] = {}
    for f in symbols:
        table: dict[tuple, object] = {}
        for combo in itertools.product(*(new_carriers[s] for s in f.arg_sorts)):
            if f.kind == THEORY and all(
                    alg.is_underlying(s, e) for s, e in zip(f.arg_sorts, combo)):
                continue
            table[combo] = rep(f.result_sort, lookup(f, combo))
        if table:
            new_tables[f.name] = table
    out = FiniteCEAlgebra(alg.theory, new_carriers, new_tables)
    out.validate()
    return out


def identity_congruence(alg: FiniteCEAlgebra) -> FiniteCongruence:
    return FiniteCongruence({
        sort: tuple(frozenset({e}) for e in elems)
        for sort, elems in alg.carriers.items()
    })


# -- value-consistency ---------------------------------------------------------

@dataclass
class ConsistencyReport:
    consistent: bool
    depth: int
    left: Optional[Term] = None
    right: Optional[Term] = None
    trace: Optional[ConversionTrace] = None


def check_value_consistency(theory: CETheory, depth: int = 8,
                            width: int = 4000,
                            limits: SearchLimits | None = None) -> ConsistencyReport:
    """Bounded search for a conversion between two distinct values.

    A witness proves the theory inconsistent; a clean sweep up to the depth is
    evidence only.
    """
    limits = limits or SearchLimits()
    model = theory.model
    pool = default_value_pool(theory)
    probes: dict[str, Term] = {}
    for eq in theory.equations:
        for side in (eq.lhs, eq.rhs):
            for sub in subterms_of(side):
                if model.is_value_term(sub):
                    probes.setdefault(term_key(sub), sub)
    for sort, elems in pool.items():
        for e in elems:
            t = model.value_term(sort, e)
            probes.setdefault(term_key(t), t)
    seeds = [t for eq in theory.equations for t in (eq.lhs, eq.rhs)]
    term_pool = term_candidate_pool(seeds)

    for key in sorted(probes):
        start = probes[key]
        traces: dict[Term, tuple[TraceStep, ...]] = {start: ()}
        frontier = [start]
        for _ in range(depth):
            nxt = []
            for u in frontier:
                for cand in rule_step_candidates(
                        theory, u, value_pool=pool, term_pool=term_pool,
                        cap_per_redex=limits.cap_per_redex):
                    raw = cand.result
                    step = cand.as_step(
                        _sub(u, cand.position))
                    nf, calc_steps = _norm(model, raw)
                    if nf in traces:
                        continue
                    traces[nf] = traces[u] + (step, *calc_steps)
                    if model.is_value_term(nf) and nf != start:
                        return ConsistencyReport(False, depth, start, nf, traces[nf])
                    nxt.append(nf)
                    if len(traces) >= width:
                        nxt = []
                        break
                else:
                    continue
                break
            frontier = nxt
            if not frontier:
                break
    return ConsistencyReport(True, depth)


def _sub(t: Term, pos) -> Term:
    from .terms import subterm_at

    return subterm_at(t, pos)


def _norm(model, t):
    from .equations import calc_trace

    return calc_trace(model, t)


# -- algebra files ---------------------------------------------------------------

def _parse_element(model: UnderlyingModel, sort: Sort, atom: Atom) -> object:
    text = atom.text
    if text.startswith("#"):
        return text
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"bad carrier element {text}", atom.line, atom.col)


def parse_algebra(theory: CETheory, text: str) -> FiniteCEAlgebra:
    nodes = parse_sexprs(text)
    if len(nodes) != 1 or head(nodes[0]) != "algebra":
        raise ParseError("expected a single (algebra ...) form", 1, 1)
    root = expect_list(nodes[0], "(algebra ...)")
    model = theory.model
    carriers: dict[Sort, tuple] = {}
    table_nodes = []
    for node in root.items[1:]:
        h = head(node)
        node = expect_list(node, "a carrier or table")
        if h == "carrier":
            if len(node.items) < 3:
                raise ParseError("carrier needs a sort and elements", node.line, node.col)
            sname = expect_atom(node.items[1], "a sort name").text
            sort = theory.signature.sort(sname)
            if sort is None:
                raise ParseError(f"unknown sort {sname}", node.line, node.col)
            elems = tuple(_parse_element(model, sort, expect_atom(e, "an element"))
                          for e in node.items[2:])
            if len(set(elems)) != len(elems):
                raise ParseError("duplicate carrier element", node.line, node.col)
            carriers[sort] = elems
        elif h == "table":
            table_nodes.append(node)
        else:
            raise ParseError("expected (carrier ...) or (table ...)", node.line, node.col)

    alg = FiniteCEAlgebra(theory, carriers, {})
    for node in table_nodes:
        fname = expect_atom(node.items[1], "a symbol name").text
        sym = theory.signature.symbol(fname) or model.symbols.get(fname)
        if sym is None:
            raise ParseError(f"unknown symbol {fname}", node.line, node.col)
        table = alg.tables.setdefault(sym.name, {})
        for entry in node.items[2:]:
            entry = expect_list(entry, "((args...) result)")
            if len(entry.items) != 2:
                raise ParseError("expected ((args...) result)", entry.line, entry.col)
            args_node = expect_list(entry.items[0], "argument elements")
            if len(args_node.items) != sym.arity:
                raise ParseError(f"{sym.name} takes {sym.arity} arguments",
                                 entry.line, entry.col)
            args = tuple(
                _parse_element(model, s, expect_atom(a, "an element"))
                for s, a in zip(sym.arg_sorts, args_node.items))
            result = _parse_element(model, sym.result_sort,
                                    expect_atom(entry.items[1], "an element"))
            for s, e in zip(sym.arg_sorts + (sym.result_sort,), args + (result,)):
                if e not in carriers.get(s, ()):
                    raise ParseError(f"element {e} is not in the carrier of {s.name}",
                                     entry.line, entry.col)
            if sym.kind == THEORY and all(
                    alg.is_underlying(s, e) for s, e in zip(sym.arg_sorts, args)):
                expected = model.interp[sym.name](*args)
                if expected != result:
                    raise ParseError(
                        f"entry for {sym.name} overrides the underlying model",
                        entry.line, entry.col)
                continue
            table[args] = result

    # default-fill omitted theory entries on tuples that touch fresh elements
    for f in model.symbols.values():
        table = alg.tables.setdefault(f.name, {})
        for combo in itertools.product(*(carriers[s] for s in f.arg_sorts)):
            if all(alg.is_underlying(s, e) for s, e in zip(f.arg_sorts, combo)):
                continue
            table.setdefault(combo, carriers[f.result_sort][0])
    alg.validate()
    return alg


def _element_text(e: object) -> str:
    if isinstance(e, bool):
        return "true" if e else "false"
    return str(e)


def algebra_text(alg: FiniteCEAlgebra) -> str:
    lines = ["(algebra"]
    for sort, elems in alg.carriers.items():
        lines.append(f"  (carrier {sort.name} " +
                     " ".join(_element_text(e) for e in elems) + ")")
    for name in sorted(alg.tables):
        entries = alg.tables[name]
        if not entries:
            continue
        parts = " ".join(
            f"(({' '.join(_element_text(a) for a in args)}) {_element_text(r)})"
            for args, r in sorted(entries.items(), key=lambda kv: repr(kv[0])))
        lines.append(f"  (table {name} {parts})")
    lines.append(")")
    return "\n".join(lines) + "\n"
