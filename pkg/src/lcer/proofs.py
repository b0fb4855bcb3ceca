"""Derivation objects, the twelve-rule checker, and proof construction.

The checker re-establishes well-formedness of every node's conclusion, then
enforces each rule's shape and side conditions exactly as declared; rejection
reports the first failing node in pre-order.  Side conditions that need
constraint validity go through the oracle, and an undecided oracle query is
surfaced as its own verdict rather than being treated as pass or fail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .equations import (
    CEError,
    CETheory,
    ConstrainedEquation,
    ConversionTrace,
    TraceStep,
    conversion_search,
    default_value_pool,
    term_key,
)
from .models import enumerate_satisfying
from .oracle import OracleBudget, check_validity
from .terms import (
    THEORY,
    App,
    Subst,
    Term,
    Variable,
    apply_subst,
    is_ground,
    sort_of,
    subterm_at,
    vars_of,
)
from .validity import (
    ValidityBudgets,
    _equality,
    _implies,
    _literal_true,
    _reachable_symbolic,
    _theory_over,
    is_trivial,
)

RULES = (
    "Refl", "Trans", "Sym", "Cong", "Rule", "TheoryInstance", "GeneralInstance",
    "Weakening", "Split", "Axiom", "Abst", "Enlarge",
)

_ARITY = {
    "Refl": 0, "Rule": 0, "Axiom": 0,
    "Sym": 1, "TheoryInstance": 1, "GeneralInstance": 1, "Weakening": 1,
    "Abst": 1, "Enlarge": 1,
    "Trans": 2, "Split": 2,
    "Cong": None,  # matches the symbol's arity
}

_NEEDS_WITNESS = {"TheoryInstance", "GeneralInstance", "Abst"}


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: ConstrainedEquation
    witness: Optional[tuple[tuple[Variable, Term], ...]] = None
    premises: tuple["Derivation", ...] = ()

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise CEError(f"unknown inference rule {self.rule}")

    def witness_subst(self) -> dict[Variable, Term]:
        return dict(self.witness or ())

    def count_nodes(self, rule: str | None = None) -> int:
        n = 1 if (rule is None or self.rule == rule) else 0
        return n + sum(p.count_nodes(rule) for p in self.premises)


@dataclass
class CheckReport:
    verdict: str  # accepted | rejected | oracle-unknown
    path: Optional[tuple[int, ...]] = None
    rule: Optional[str] = None
    code: Optional[str] = None
    detail: Optional[str] = None

    @property
    def accepted(self) -> bool:
        return self.verdict == "accepted"


class _Fail(Exception):
    def __init__(self, path, rule, code, detail):
        self.report = CheckReport("rejected", tuple(path), rule, code, detail)


class _Undecided(Exception):
    def __init__(self, path, rule, detail):
        self.report = CheckReport("oracle-unknown", tuple(path), rule,
                                  "oracle-unknown", detail)


def check_proof(theory: CETheory, d: Derivation,
                budget: OracleBudget | None = None) -> CheckReport:
    budget = budget or OracleBudget()
    try:
        _check(theory, d, (), budget)
    except _Fail as f:
        return f.report
    except _Undecided as u:
        return u.report
    return CheckReport("accepted")


def _oracle_valid(theory, phi, path, rule, what, budget) -> None:
    v = check_validity(theory.model, phi, budget)
    if v.is_valid:
        return
    if v.is_invalid:
        raise _Fail(path, rule, "side-condition-failed",
                    f"{what} is not valid (witness {_fmt_subst(v.witness)})")
    raise _Undecided(path, rule, f"oracle could not decide {what}")


def _fmt_subst(sigma) -> str:
    if not sigma:
        return "{}"
    items = sorted(sigma.items(), key=lambda kv: kv[0].name)
    return "{" + ", ".join(f"{x.name} -> {t!r}" for x, t in items) + "}"


def _check(theory: CETheory, d: Derivation, path: tuple[int, ...],
           budget: OracleBudget) -> None:
    ce = d.conclusion
    try:
        ConstrainedEquation(ce.logical_vars, ce.lhs, ce.rhs, ce.constraint)
    except CEError as e:
        raise _Fail(path, d.rule, "malformed-ce", str(e))

    arity = _ARITY[d.rule]
    if arity is not None and len(d.premises) != arity:
        raise _Fail(path, d.rule, "shape-mismatch",
                    f"{d.rule} takes {arity} premises, found {len(d.premises)}")
    if d.rule in _NEEDS_WITNESS and d.witness is None:
        raise _Fail(path, d.rule, "shape-mismatch", f"{d.rule} needs a substitution witness")

    X, s, t, phi = ce.logical_vars, ce.lhs, ce.rhs, ce.constraint

    if d.rule == "Refl":
        if s != t:
            raise _Fail(path, d.rule, "side-condition-failed", "sides are not identical")

    elif d.rule == "Trans":
        p, q = d.premises[0].conclusion, d.premises[1].conclusion
        if p.logical_vars != X or q.logical_vars != X or p.constraint != phi \
                or q.constraint != phi:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "premises must share the conclusion's variables and constraint")
        if p.lhs != s or q.rhs != t or p.rhs != q.lhs:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "premise sides do not chain through a shared middle term")

    elif d.rule == "Sym":
        p = d.premises[0].conclusion
        if p.logical_vars != X or p.constraint != phi or p.lhs != t or p.rhs != s:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "premise must be the mirrored conclusion")

    elif d.rule == "Cong":
        if not isinstance(s, App) or not isinstance(t, App) or s.fun != t.fun:
            raise _Fail(path, d.rule, "shape-mismatch",
                        "conclusion sides must share their root symbol")
        if len(d.premises) != len(s.args):
            raise _Fail(path, d.rule, "shape-mismatch",
                        f"need {len(s.args)} premises for {s.fun.name}")
        for i, p in enumerate(d.premises):
            pc = p.conclusion
            if pc.logical_vars != X or pc.constraint != phi \
                    or pc.lhs != s.args[i] or pc.rhs != t.args[i]:
                raise _Fail(path, d.rule, "side-condition-failed",
                            f"premise {i + 1} does not prove the argument pair")

    elif d.rule == "Rule":
        if not any(eq.logical_vars == X and eq.lhs == s and eq.rhs == t
                   and eq.constraint == phi for eq in theory.equations):
            raise _Fail(path, d.rule, "not-in-theory",
                        "conclusion is not literally an equation of the theory")

    elif d.rule == "TheoryInstance":
        p = d.premises[0].conclusion
        sigma = d.witness_subst()
        for y in sorted(p.logical_vars, key=lambda v: v.name):
            img = apply_subst(sigma, y)
            if not _theory_over(img, X):
                raise _Fail(path, d.rule, "side-condition-failed",
                            f"{y.name} maps to {img!r}, not a theory term over the "
                            "conclusion's variables")
        if apply_subst(sigma, p.lhs) != s or apply_subst(sigma, p.rhs) != t \
                or apply_subst(sigma, p.constraint) != phi:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "conclusion is not the premise instantiated by the witness")

    elif d.rule == "GeneralInstance":
        p = d.premises[0].conclusion
        sigma = d.witness_subst()
        if p.logical_vars != X:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "premise and conclusion must share logical variables")
        touched = {x for x, u in sigma.items() if u != x}
        if touched & X:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "witness must not move logical variables")
        if p.constraint != phi:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "constraint must be unchanged")
        if apply_subst(sigma, p.lhs) != s or apply_subst(sigma, p.rhs) != t:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "conclusion is not the premise instantiated by the witness")

    elif d.rule == "Weakening":
        p = d.premises[0].conclusion
        if p.logical_vars != X or p.lhs != s or p.rhs != t:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "only the constraint may change")
        _oracle_valid(theory, _implies(theory, phi, p.constraint), path, d.rule,
                      "the conclusion constraint entailing the premise constraint",
                      budget)

    elif d.rule == "Split":
        p, q = d.premises[0].conclusion, d.premises[1].conclusion
        if p.logical_vars != X or q.logical_vars != X or p.lhs != s or q.lhs != s \
                or p.rhs != t or q.rhs != t:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "premises must prove the same equation")
        want = App(theory.model.symbols["or"], (p.constraint, q.constraint))
        if phi != want:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "conclusion constraint must be the premise constraints "
                        "joined by a single disjunction, in order")

    elif d.rule == "Axiom":
        if not _theory_over(s, X) or not _theory_over(t, X):
            raise _Fail(path, d.rule, "side-condition-failed",
                        "both sides must be theory terms over the logical variables")
        _oracle_valid(theory, _implies(theory, phi, _equality(theory, s, t)),
                      path, d.rule, "the constraint entailing the equation", budget)

    elif d.rule == "Abst":
        p = d.premises[0].conclusion
        sigma = d.witness_subst()
        if p.logical_vars != X:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "premise and conclusion must share logical variables")
        if not (vars_of(s) | vars_of(t)) <= X:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "conclusion sides may only use logical variables")
        moved = sorted((x for x in X if apply_subst(sigma, x) != x),
                       key=lambda v: v.name)
        for x in moved:
            if not vars_of(apply_subst(sigma, x)) <= X:
                raise _Fail(path, d.rule, "side-condition-failed",
                            f"witness image of {x.name} leaves the logical variables")
        if apply_subst(sigma, s) != p.lhs or apply_subst(sigma, t) != p.rhs \
                or apply_subst(sigma, phi) != p.constraint:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "premise is not the conclusion instantiated by the witness")
        if moved:
            eqs = [_equality(theory, x, apply_subst(sigma, x)) for x in moved]
            conj = eqs[0]
            for e in eqs[1:]:
                conj = App(theory.model.symbols["and"], (conj, e))
            _oracle_valid(theory, _implies(theory, phi, conj), path, d.rule,
                          "the constraint pinning the witness values", budget)

    elif d.rule == "Enlarge":
        p = d.premises[0].conclusion
        if p.lhs != s or p.rhs != t or p.constraint != phi:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "only the logical variable set may change")
        removed = p.logical_vars - X
        if (vars_of(s) | vars_of(t)) & removed:
            raise _Fail(path, d.rule, "side-condition-failed",
                        "dropped logical variables still occur in the sides")

    for i, p in enumerate(d.premises):
        _check(theory, p, path + (i,), budget)


# -- constructive generation ---------------------------------------------------

class GenerationError(Exception):
    """The generator could not verify its own precondition."""


def _calc_joinable(model, u: Term, v: Term) -> bool:
    """Every structural difference is a pair of ground theory terms with the
    same value.  Instances at most one calculation step apart satisfy this,
    and so do nested calculations like (0+1)-1 versus 0."""
    if u == v:
        return True
    for a, b in _top_diffs(u, v):
        if not (is_ground(a) and is_ground(b)):
            return False
        if isinstance(a, Variable) or isinstance(b, Variable):
            return False
        if a.fun.kind != THEORY or b.fun.kind != THEORY:
            return False
        if model.interpret(a) != model.interpret(b):
            return False
    return True


def _top_diffs(u: Term, v: Term) -> list[tuple[Term, Term]]:
    if u == v:
        return []
    if isinstance(u, App) and isinstance(v, App) and u.fun == v.fun:
        out = []
        for a, b in zip(u.args, v.args):
            out.extend(_top_diffs(a, b))
        return out
    return [(u, v)]


def generate_calc_proof(theory: CETheory, ce: ConstrainedEquation,
                        budget: OracleBudget | None = None,
                        box: int = 8) -> Derivation:
    """Build a derivation for goals whose instances differ by at most one
    calculation step, verifying that precondition by enumeration first."""
    budget = budget or OracleBudget()
    model = theory.model

    sat = check_validity(model, App(model.symbols["not"], (ce.constraint,)), budget)
    if sat.is_valid:
        raise GenerationError("constraint is unsatisfiable")
    if sat.is_unknown:
        raise GenerationError("oracle could not confirm the constraint is satisfiable")

    count = 0
    for sigma in enumerate_satisfying(model, ce.logical_vars, ce.constraint, box=box):
        count += 1
        if count > 100_000:
            raise GenerationError("too many instances to verify the precondition")
        if not _calc_joinable(model, apply_subst(sigma, ce.lhs),
                              apply_subst(sigma, ce.rhs)):
            raise GenerationError(
                f"instance {_fmt_subst(sigma)} is not joinable by calculation alone")

    def rec(a: Term, b: Term) -> Derivation:
        goal = ConstrainedEquation(ce.logical_vars, a, b, ce.constraint)
        if a == b:
            return Derivation("Refl", goal)
        if _theory_over(a, ce.logical_vars) and _theory_over(b, ce.logical_vars):
            obligation = _implies(theory, ce.constraint, _equality(theory, a, b))
            v = check_validity(model, obligation, budget)
            if not v.is_valid:
                raise GenerationError(
                    f"equation obligation {a!r} = {b!r} not proved by the oracle")
            return Derivation("Axiom", goal)
        if isinstance(a, App) and isinstance(b, App) and a.fun == b.fun:
            return Derivation("Cong", goal,
                              premises=tuple(rec(x, y) for x, y in zip(a.args, b.args)))
        raise GenerationError(f"cannot close the gap between {a!r} and {b!r}")

    d = rec(ce.lhs, ce.rhs)
    report = check_proof(theory, d, budget)
    if not report.accepted:
        raise GenerationError(f"generated derivation was not accepted: {report.detail}")
    return d


# -- heuristic proving ----------------------------------------------------------

def _frozen(sigma: Subst) -> tuple[tuple[Variable, Term], ...]:
    return tuple(sorted(((x, u) for x, u in sigma.items() if u != x),
                        key=lambda kv: kv[0].name))


def _simulate_step(theory: CETheory, whole_before: Term, step: TraceStep,
                   X: frozenset[Variable], phi: Term) -> Derivation:
    """A derivation of <X> before ~ after [phi] for one trace step.

    The step's instantiated constraint is ground and true, so Weakening from
    it to phi always discharges; a context position is rebuilt with Cong over
    reflexivity premises.
    """
    before = step.replaced
    after = step.result
    if step.kind == "calc":
        redex, value = (before, after) if step.direction == "lr" else (after, before)
        core = Derivation("Axiom", ConstrainedEquation(
            X, redex, value, phi))
        if step.direction != "lr":
            core = Derivation("Sym", ConstrainedEquation(X, before, after, phi),
                              premises=(core,))
    else:
        eq = theory.equations[step.eq_index]  # type: ignore[index]
        sigma = dict(step.subst)
        rule = Derivation("Rule", eq)
        inst = eq.subst(sigma)
        tinst = Derivation("TheoryInstance",
                           ConstrainedEquation(X, inst.lhs, inst.rhs, inst.constraint),
                           witness=_frozen(sigma), premises=(rule,))
        weak = Derivation("Weakening",
                          ConstrainedEquation(X, inst.lhs, inst.rhs, phi),
                          premises=(tinst,))
        core = weak
        if step.direction != "lr":
            core = Derivation("Sym", ConstrainedEquation(X, before, after, phi),
                              premises=(core,))
    node = core
    # wrap outward along the position path
    for depth in range(len(step.position), 0, -1):
        prefix = step.position[:depth - 1]
        idx = step.position[depth - 1]
        parent_before = subterm_at(whole_before, prefix)
        assert isinstance(parent_before, App)
        lhs_args = list(parent_before.args)
        rhs_args = list(parent_before.args)
        rhs_args[idx - 1] = node.conclusion.rhs
        premises = []
        for i, arg in enumerate(lhs_args):
            if i == idx - 1:
                premises.append(node)
            else:
                premises.append(Derivation("Refl",
                                           ConstrainedEquation(X, arg, arg, phi)))
        node = Derivation("Cong", ConstrainedEquation(
            X, App(parent_before.fun, tuple(lhs_args)),
            App(parent_before.fun, tuple(rhs_args)), phi), premises=tuple(premises))
    return node


def simulate_trace(theory: CETheory, start: Term, trace: ConversionTrace,
                   X: frozenset[Variable], phi: Term) -> Optional[Derivation]:
    """Trans-join one derivation per trace step; None for an empty trace."""
    from .terms import replace_at

    node: Optional[Derivation] = None
    t = start
    for step in trace:
        d = _simulate_step(theory, t, step, X, phi)
        t = replace_at(t, step.position, step.result)
        if node is None:
            node = d
        else:
            node = Derivation("Trans", ConstrainedEquation(
                X, node.conclusion.lhs, d.conclusion.rhs, phi),
                premises=(node, d))
    return node


def _close_trivial(theory: CETheory, ce: ConstrainedEquation,
                   budget: OracleBudget) -> Optional[Derivation]:
    """Refl/Axiom/Cong closure for a trivial constrained equation, when the
    difference pairs are oracle-provable theory pairs."""
    def rec(a: Term, b: Term) -> Optional[Derivation]:
        goal = ConstrainedEquation(ce.logical_vars, a, b, ce.constraint)
        if a == b:
            return Derivation("Refl", goal)
        if _theory_over(a, ce.logical_vars) and _theory_over(b, ce.logical_vars):
            obligation = _implies(theory, ce.constraint, _equality(theory, a, b))
            if check_validity(theory.model, obligation, budget).is_valid:
                return Derivation("Axiom", goal)
            return None
        if isinstance(a, App) and isinstance(b, App) and a.fun == b.fun:
            premises = []
            for x, y in zip(a.args, b.args):
                p = rec(x, y)
                if p is None:
                    return None
                premises.append(p)
            return Derivation("Cong", goal, premises=tuple(premises))
        return None

    return rec(ce.lhs, ce.rhs)


def prove_heuristic(theory: CETheory, ce: ConstrainedEquation,
                    budgets: ValidityBudgets | None = None,
                    _depth: int = 0) -> Optional[Derivation]:
    """Best-effort proof search; a returned derivation is always re-checked.

    Incomplete by design: it combines the calculation-step generator, rewrite
    simulation toward a trivial gap, and finite case splitting.
    """
    budgets = budgets or ValidityBudgets()
    model = theory.model

    try:
        return generate_calc_proof(theory, ce, budgets.oracle, box=budgets.box)
    except GenerationError:
        pass

    d = _prove_by_rewriting(theory, ce, budgets)
    if d is not None and check_proof(theory, d, budgets.oracle).accepted:
        return d

    if _depth < 2:
        d = _prove_by_split(theory, ce, budgets, _depth)
        if d is not None and check_proof(theory, d, budgets.oracle).accepted:
            return d
    return None


def _prove_by_rewriting(theory, ce, budgets) -> Optional[Derivation]:
    phi = ce.constraint
    X = ce.logical_vars
    if not X and _literal_true(theory, phi):
        trace = conversion_search(theory, ce.lhs, ce.rhs, budgets.search_limits())
        if trace is not None:
            d = simulate_trace(theory, ce.lhs, trace, X, phi)
            return d or Derivation("Refl", ce)

    pool = default_value_pool(theory, [ce.lhs, ce.rhs])
    left = _reachable_symbolic(theory, ce.lhs, X, phi, budgets.rewrite_depth,
                               budgets.rewrite_width, budgets.oracle, pool)
    right = _reachable_symbolic(theory, ce.rhs, X, phi, budgets.rewrite_depth,
                                budgets.rewrite_width, budgets.oracle, pool)
    pairs = sorted(
        ((ls, rs) for ls in left for rs in right),
        key=lambda p: (len(left[p[0]]) + len(right[p[1]]),
                       p[0].size + p[1].size, term_key(p[0]), term_key(p[1])))
    for ls, rs in pairs[: budgets.max_trivial_pairs]:
        if sort_of(ls) != sort_of(rs):
            continue
        try:
            gap_ce = ConstrainedEquation(X, ls, rs, phi)
        except CEError:
            continue
        if not is_trivial(theory, gap_ce, budgets.oracle).is_valid:
            continue
        gap = None if ls == rs else _close_trivial(theory, gap_ce, budgets.oracle)
        if ls != rs and gap is None:
            continue
        fwd = simulate_trace(theory, ce.lhs, left[ls], X, phi)
        bwd_trace = tuple(st.reversed_() for st in reversed(right[rs]))
        parts = [p for p in (fwd, gap) if p is not None]
        bwd = simulate_trace(theory, rs, bwd_trace, X, phi)
        if bwd is not None:
            parts.append(bwd)
        if not parts:
            return Derivation("Refl", ce)
        node = parts[0]
        for p in parts[1:]:
            node = Derivation("Trans", ConstrainedEquation(
                X, node.conclusion.lhs, p.conclusion.rhs, phi),
                premises=(node, p))
        return node
    return None


def _prove_by_split(theory, ce, budgets, depth) -> Optional[Derivation]:
    """Case split one finite-sorted logical variable and abstract each case."""
    model = theory.model
    X = ce.logical_vars
    if not (vars_of(ce.lhs) | vars_of(ce.rhs)) <= X:
        return None
    finite = sorted((x for x in X if model.carriers[x.sort].finite
                     and x in (vars_of(ce.lhs) | vars_of(ce.rhs))),
                    key=lambda v: v.name)
    for x in finite:
        elems = model.carrier_elements(x.sort)
        if not 2 <= len(elems) <= 8:
            continue
        cases = []
        ok = True
        for e in elems:
            val = model.value_term(x.sort, e)
            case_phi = _equality(theory, x, val)
            sigma = {x: val}
            inner_goal = ConstrainedEquation(
                X, apply_subst(sigma, ce.lhs), apply_subst(sigma, ce.rhs),
                apply_subst(sigma, case_phi))
            inner = prove_heuristic(theory, inner_goal, budgets, depth + 1)
            if inner is None:
                ok = False
                break
            abst = Derivation("Abst", ConstrainedEquation(X, ce.lhs, ce.rhs, case_phi),
                              witness=_frozen(sigma), premises=(inner,))
            cases.append(abst)
        if not ok:
            continue
        node = cases[-1]
        for c in reversed(cases[:-1]):
            disj = App(model.symbols["or"],
                       (c.conclusion.constraint, node.conclusion.constraint))
            node = Derivation("Split", ConstrainedEquation(X, ce.lhs, ce.rhs, disj),
                              premises=(c, node))
        cover = _implies(theory, ce.constraint, node.conclusion.constraint)
        if not check_validity(model, cover, budgets.oracle).is_valid:
            continue
        return Derivation("Weakening", ce, premises=(node,))
    return None
