"""Constrained equations, equation systems, and rewriting with them.

A rule step applies an equation at a position, in either direction, under a
substitution that sends every declared logical variable to a value and makes
the instantiated constraint evaluate to true.  Conversion search works modulo
calculation: every term is kept calc-normalized, and reverse calculation steps
are recovered only in traces (never enumerated during search).
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .models import UnderlyingModel, enumerate_satisfying
from .terms import (
    THEORY,
    App,
    Position,
    Signature,
    Sort,
    Term,
    Variable,
    apply_subst,
    match,
    positions_of,
    replace_at,
    sort_of,
    subterm_at,
    subterms_of,
    vars_of,
)


class CEError(Exception):
    pass


@dataclass(frozen=True)
class ConstrainedEquation:
    """An equation s = t guarded by a constraint, with its logical variables."""

    logical_vars: frozenset[Variable]
    lhs: Term
    rhs: Term
    constraint: Term

    def __post_init__(self) -> None:
        if sort_of(self.lhs) != sort_of(self.rhs):
            raise CEError(
                f"sides have different sorts: {sort_of(self.lhs).name} vs "
                f"{sort_of(self.rhs).name}")
        for x in self.logical_vars:
            if x.sort.kind != THEORY:
                raise CEError(f"logical variable {x.name} is not theory-sorted")
        if sort_of(self.constraint).name != "Bool":
            raise CEError("constraint must have sort Bool")
        extra = vars_of(self.constraint) - self.logical_vars
        if extra:
            names = ", ".join(sorted(v.name for v in extra))
            raise CEError(f"constraint mentions variables outside the logical set: {names}")

    def subst(self, sigma) -> "ConstrainedEquation":
        return ConstrainedEquation(
            self.logical_vars,
            apply_subst(sigma, self.lhs),
            apply_subst(sigma, self.rhs),
            apply_subst(sigma, self.constraint),
        )

    def __repr__(self) -> str:
        xs = ",".join(sorted(v.name for v in self.logical_vars))
        return f"<{xs}> {self.lhs!r} ~ {self.rhs!r} [{self.constraint!r}]"


@dataclass
class CETheory:
    signature: Signature
    model: UnderlyingModel
    equations: tuple[ConstrainedEquation, ...]

    def __post_init__(self) -> None:
        self._root_index: dict[tuple[str, int, str], list[int]] = {}
        for i, eq in enumerate(self.equations):
            for direction, side in (("lr", eq.lhs), ("rl", eq.rhs)):
                if isinstance(side, App):
                    key = (side.fun.name, 0, direction)
                else:
                    key = (side.sort.name, 1, direction)
                self._root_index.setdefault(key, []).append(i)

    def sides_matching(self, t: Term) -> Iterable[tuple[int, str]]:
        """Equation indices/directions whose pattern root can match t."""
        out: list[tuple[int, str]] = []
        for direction in ("lr", "rl"):
            if isinstance(t, App):
                out.extend((i, direction)
                           for i in self._root_index.get((t.fun.name, 0, direction), ()))
            for i in self._root_index.get((sort_of(t).name, 1, direction), ()):
                out.append((i, direction))
        return out


def term_key(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    if not t.args:
        return t.fun.name
    return f"({t.fun.name} {' '.join(term_key(a) for a in t.args)})"


# -- traces ------------------------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    position: Position
    kind: str  # "calc" or "rule"
    direction: str  # "lr" or "rl"
    eq_index: Optional[int]
    subst: tuple[tuple[Variable, Term], ...]  # sorted by variable name
    replaced: Term
    result: Term

    def reversed_(self) -> "TraceStep":
        flip = "rl" if self.direction == "lr" else "lr"
        return TraceStep(self.position, self.kind, flip, self.eq_index,
                         self.subst, self.result, self.replaced)


ConversionTrace = tuple[TraceStep, ...]


class IllegalStep(Exception):
    def __init__(self, index: int, reason: str) -> None:
        super().__init__(f"step {index}: {reason}")
        self.index = index
        self.reason = reason


def replay_trace(theory: CETheory, start: Term, trace: ConversionTrace) -> Term:
    """Re-validate and apply every step; returns the end term."""
    model = theory.model
    t = start
    for i, st in enumerate(trace):
        try:
            before = subterm_at(t, st.position)
        except Exception:
            raise IllegalStep(i, "position not valid")
        if before != st.replaced:
            raise IllegalStep(i, f"expected {st.replaced!r} at position, found {before!r}")
        if st.kind == "calc":
            redex, value = (before, st.result) if st.direction == "lr" else (st.result, before)
            if not model.is_calc_redex(redex):
                raise IllegalStep(i, "not a calculation redex")
            if model.interpret_term(redex) != value:
                raise IllegalStep(i, "calculation result does not match the model")
        elif st.kind == "rule":
            if st.eq_index is None or not 0 <= st.eq_index < len(theory.equations):
                raise IllegalStep(i, "unknown equation index")
            eq = theory.equations[st.eq_index]
            sigma = dict(st.subst)
            for x in eq.logical_vars:
                if x not in sigma or not model.is_value_term(sigma[x]):
                    raise IllegalStep(i, f"substitution is not value-instantiated on {x.name}")
            src, dst = (eq.lhs, eq.rhs) if st.direction == "lr" else (eq.rhs, eq.lhs)
            if apply_subst(sigma, src) != before or apply_subst(sigma, dst) != st.result:
                raise IllegalStep(i, "sides do not match the equation instance")
            if not model.eval_constraint(apply_subst(sigma, eq.constraint)):
                raise IllegalStep(i, "constraint evaluates to false")
        else:
            raise IllegalStep(i, f"unknown step kind {st.kind}")
        t = replace_at(t, st.position, st.result)
    return t


def calc_trace(model: UnderlyingModel, t: Term) -> tuple[Term, list[TraceStep]]:
    nf, raw = model.calc_normalize_steps(t)
    steps = [TraceStep(pos, "calc", "lr", None, (), redex, value)
             for pos, redex, value in raw]
    return nf, steps


# -- value and term candidate pools -------------------------------------------

def literals_in(terms: Iterable[Term], model: UnderlyingModel) -> dict[Sort, set]:
    out: dict[Sort, set] = {}
    for t in terms:
        for u in subterms_of(t):
            if isinstance(u, App) and u.fun.is_value:
                out.setdefault(u.fun.result_sort, set()).add(u.fun.value)
    return out


def default_value_pool(theory: CETheory, goal_terms: Iterable[Term] = ()) -> dict[Sort, tuple]:
    """Finite carriers verbatim; for the integers, [-8, 8] plus all literals
    occurring in the theory and the goal."""
    model = theory.model
    lits = literals_in(
        [t for eq in theory.equations for t in (eq.lhs, eq.rhs, eq.constraint)],
        model)
    for s, vals in literals_in(goal_terms, model).items():
        lits.setdefault(s, set()).update(vals)
    pool: dict[Sort, tuple] = {}
    for name, sort in model.sorts.items():
        car = model.carriers[sort]
        if car.finite:
            pool[sort] = tuple(car.elements)  # type: ignore[arg-type]
        else:
            vals = set(range(-8, 9)) | lits.get(sort, set())
            pool[sort] = tuple(sorted(vals, key=lambda v: (abs(v), v < 0)))
    return pool


def term_candidate_pool(goal_terms: Iterable[Term], seeds: Iterable[Term] = ()) -> dict[Sort, tuple[Term, ...]]:
    """Term-sorted instantiation candidates: subterms of the goals plus seeds."""
    seen: dict[Sort, dict[str, Term]] = {}
    for t in itertools.chain(goal_terms, seeds):
        for u in subterms_of(t):
            s = sort_of(u)
            seen.setdefault(s, {}).setdefault(term_key(u), u)
    return {s: tuple(sorted(d.values(), key=lambda u: (u.size, term_key(u))))
            for s, d in seen.items()}


@dataclass(frozen=True)
class RuleCandidate:
    position: Position
    eq_index: int
    direction: str
    subst: tuple[tuple[Variable, Term], ...]
    result: Term

    def as_step(self, before: Term) -> TraceStep:
        return TraceStep(self.position, "rule", self.direction, self.eq_index,
                         self.subst, before, subterm_at(self.result, self.position))


def _extra_assignments(
    model: UnderlyingModel,
    extras: list[Variable],
    constraint: Term,
    value_pool: dict[Sort, tuple],
    solve_box: Optional[int],
    cap: int,
) -> list[dict[Variable, Term]]:
    if not extras:
        if vars_of(constraint):
            return []
        return [{}] if model.eval_constraint(constraint) else []
    out: list[dict[Variable, Term]] = []
    seen: set[tuple] = set()
    if solve_box is not None:
        for sigma in enumerate_satisfying(model, set(extras), constraint, box=solve_box):
            key = tuple(term_key(sigma[v]) for v in extras)
            if key not in seen:
                seen.add(key)
                out.append(sigma)
            if len(out) >= cap:
                return out
    domains = []
    for v in extras:
        elems = value_pool.get(v.sort)
        if elems is None:
            return out
        domains.append([model.value_term(v.sort, e) for e in elems])
    for combo in itertools.product(*domains):
        sigma = dict(zip(extras, combo))
        key = tuple(term_key(sigma[v]) for v in extras)
        if key in seen:
            continue
        if model.eval_constraint(apply_subst(sigma, constraint)):
            seen.add(key)
            out.append(sigma)
        if len(out) >= cap:
            break
    return out


def rule_step_candidates(
    theory: CETheory,
    t: Term,
    value_pool: Optional[dict[Sort, tuple]] = None,
    term_pool: Optional[dict[Sort, tuple[Term, ...]]] = None,
    solve_box: int | None | str = "auto",
    cap_per_redex: int = 256,
) -> list[RuleCandidate]:
    """All one-step rule successors of t (either direction).

    Unbound logical variables are instantiated from constraint solutions over
    the box and from the value pool; unbound term variables come from the term
    pool.  Passing an explicit value_pool (with the default "auto" box) keeps
    the draws to the pool alone.
    """
    model = theory.model
    if solve_box == "auto":
        solve_box = None if value_pool is not None else 64
    if value_pool is None:
        value_pool = default_value_pool(theory, [t])
    if term_pool is None:
        term_pool = term_candidate_pool([t])
    out: list[RuleCandidate] = []
    for pos, sub in sorted(positions_of(t), key=lambda ps: ps[0]):
        for eq_index, direction in sorted(theory.sides_matching(sub)):
            eq = theory.equations[eq_index]
            src, dst = (eq.lhs, eq.rhs) if direction == "lr" else (eq.rhs, eq.lhs)
            if sort_of(src) != sort_of(sub):
                continue
            base = match(src, sub)
            if base is None:
                continue
            # logical variables bound by matching must already be values
            if any(x in base and not model.is_value_term(base[x])
                   for x in eq.logical_vars):
                continue
            logical_extras = sorted(
                (x for x in eq.logical_vars if x not in base), key=lambda v: v.name)
            term_extras = sorted(
                (x for x in vars_of(dst) - set(base) - eq.logical_vars),
                key=lambda v: v.name)
            phi0 = apply_subst(base, eq.constraint)
            assigns = _extra_assignments(
                model, logical_extras, phi0, value_pool, solve_box, cap_per_redex)
            term_domains = []
            ok = True
            for x in term_extras:
                cands = term_pool.get(x.sort, ())
                if not cands:
                    ok = False
                    break
                term_domains.append(cands)
            if not ok:
                continue
            for logical_sigma in assigns:
                for term_combo in itertools.product(*term_domains):
                    sigma = dict(base)
                    sigma.update(logical_sigma)
                    sigma.update(zip(term_extras, term_combo))
                    result = replace_at(t, pos, apply_subst(sigma, dst))
                    frozen = tuple(sorted(
                        ((x, u) for x, u in sigma.items() if u != x),
                        key=lambda kv: kv[0].name))
                    out.append(RuleCandidate(pos, eq_index, direction, frozen, result))
    return out


# -- bidirectional conversion search ------------------------------------------

@dataclass
class SearchLimits:
    bound: int = 8
    max_term_growth: int = 7
    max_nodes: int = 200_000
    solve_box: Optional[int] = 64
    cap_per_redex: int = 64


def _successors(theory, u, value_pool, term_pool, limits, calc_only, size_cap):
    """Macro edges: one rule step followed by calc normalization."""
    if calc_only:
        return []
    model = theory.model
    edges = []
    for cand in rule_step_candidates(
            theory, u, value_pool=value_pool, term_pool=term_pool,
            solve_box=limits.solve_box, cap_per_redex=limits.cap_per_redex):
        raw = cand.result
        step = cand.as_step(subterm_at(u, cand.position))
        v, calc_steps = calc_trace(model, raw)
        if v == u:
            continue
        if size_cap is not None and v.size > size_cap:
            continue
        edges.append((v, (step, *calc_steps)))
    edges.sort(key=lambda e: (len(e[1]), e[0].size, term_key(e[0])))
    return edges


def conversion_search(
    theory: CETheory,
    s: Term,
    t: Term,
    limits: SearchLimits | None = None,
    value_pool: Optional[dict[Sort, tuple]] = None,
    seed_terms: Iterable[Term] = (),
    calc_only: bool = False,
) -> Optional[ConversionTrace]:
    """Search for a conversion trace of length <= limits.bound, or None.

    Bidirectional uniform-cost search over calc-normal forms, deterministic
    expansion order, meeting in the middle; the returned trace is one of
    minimal length (ties broken by term size and a fixed term order).
    """
    if sort_of(s) != sort_of(t):
        raise CEError("conversion endpoints must have the same sort")
    limits = limits or SearchLimits()
    model = theory.model
    explicit_pool = value_pool is not None
    if value_pool is None:
        value_pool = default_value_pool(theory, [s, t])
    if explicit_pool:
        limits = SearchLimits(limits.bound, limits.max_term_growth,
                              limits.max_nodes, None, limits.cap_per_redex)

    s0, prefix = calc_trace(model, s)
    t0, post = calc_trace(model, t)
    suffix = [st.reversed_() for st in reversed(post)]
    fixed = len(prefix) + len(suffix)
    if fixed > limits.bound:
        return None
    if s0 == t0:
        return tuple(prefix + suffix)
    budget = limits.bound - fixed

    term_pool = term_candidate_pool([s0, t0], seed_terms)
    size_cap = max(s0.size, t0.size) + limits.max_term_growth

    # dist[side][term] = (cost, parent, edge_steps); the frontier is ordered by
    # cost + term size (greedy toward small meeting terms), which is the
    # documented deterministic expansion order
    dist: list[dict[Term, tuple[int, Optional[Term], tuple]]] = [
        {s0: (0, None, ())}, {t0: (0, None, ())}]
    done: list[set[Term]] = [set(), set()]
    heaps: list[list] = [[(s0.size, 0, term_key(s0), s0)], [(t0.size, 0, term_key(t0), t0)]]
    best: Optional[tuple[int, int, str, Term]] = None
    expanded = 0

    def consider_meet(node: Term) -> None:
        nonlocal best
        if node in dist[0] and node in dist[1]:
            total = dist[0][node][0] + dist[1][node][0]
            cand = (total, node.size, term_key(node), node)
            if total <= budget and (best is None or cand < best):
                best = cand

    consider_meet(s0)
    while best is None:
        tops: list[Optional[int]] = []
        for side in (0, 1):
            while heaps[side] and heaps[side][0][3] in done[side]:
                heapq.heappop(heaps[side])
            tops.append(heaps[side][0][0] if heaps[side] else None)
        alive = [c for c in tops if c is not None]
        if not alive:
            break
        if tops[0] is None:
            side = 1
        elif tops[1] is None:
            side = 0
        else:
            side = 0 if tops[0] <= tops[1] else 1
        _, cost, _, u = heapq.heappop(heaps[side])
        if u in done[side]:
            continue
        done[side].add(u)
        expanded += 1
        if expanded > limits.max_nodes:
            break
        if cost >= budget:
            continue
        # the first meet under this deterministic expansion order is the
        # result; within one expansion the best of its meets wins
        for v, steps in _successors(theory, u, value_pool, term_pool, limits,
                                    calc_only, size_cap):
            c2 = cost + len(steps)
            if c2 > budget:
                continue
            old = dist[side].get(v)
            if old is None or c2 < old[0]:
                dist[side][v] = (c2, u, steps)
                heapq.heappush(heaps[side], (c2 + v.size, c2, term_key(v), v))
                consider_meet(v)

    if best is None:
        return None
    meet = best[3]

    fwd: list[TraceStep] = []
    node = meet
    while True:
        cost, parent, steps = dist[0][node]
        if parent is None:
            break
        fwd = list(steps) + fwd
        node = parent
    bwd: list[TraceStep] = []
    node = meet
    while True:
        cost, parent, steps = dist[1][node]
        if parent is None:
            break
        bwd.extend(st.reversed_() for st in reversed(steps))
        node = parent
    trace = tuple(prefix + fwd + bwd + suffix)
    if len(trace) > limits.bound:
        return None
    return trace


def reachable_terms(
    theory: CETheory,
    start: Term,
    depth: int,
    width: int = 200,
    value_pool: Optional[dict[Sort, tuple]] = None,
    seed_terms: Iterable[Term] = (),
    limits: SearchLimits | None = None,
) -> dict[Term, ConversionTrace]:
    """Breadth-first set of terms convertible from start within depth macro steps."""
    limits = limits or SearchLimits()
    model = theory.model
    if value_pool is None:
        value_pool = default_value_pool(theory, [start])
    else:
        limits = SearchLimits(limits.bound, limits.max_term_growth,
                              limits.max_nodes, None, limits.cap_per_redex)
    term_pool = term_candidate_pool([start], seed_terms)
    s0, prefix = calc_trace(model, start)
    size_cap = s0.size + limits.max_term_growth
    out: dict[Term, ConversionTrace] = {s0: tuple(prefix)}
    frontier = [s0]
    for _ in range(depth):
        nxt = []
        for u in frontier:
            for v, steps in _successors(theory, u, value_pool, term_pool,
                                        limits, False, size_cap):
                if v not in out:
                    out[v] = out[u] + steps
                    nxt.append(v)
                    if len(out) >= width:
                        return out
        frontier = nxt
        if not frontier:
            break
    return out
