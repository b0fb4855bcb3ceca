"""Built-in underlying models: booleans, unbounded integers, and integers mod n.

A model owns the theory half of a signature: carriers, interpretation
functions, and the bijection between value constants and carrier elements.
It answers ground evaluation queries and drives calculation steps.

Division and mod are Euclidean (mod lands in [0, |n|)) and are totalized by
div(x, 0) = 0 and mod(x, 0) = x.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator

from .terms import (
    THEORY,
    App,
    FunSymbol,
    Position,
    Sort,
    Term,
    Variable,
    is_ground,
    positions_of,
    replace_at,
    sort_of,
    vars_of,
)

BOOL = Sort("Bool", THEORY)
INT = Sort("Int", THEORY)


class EvalError(Exception):
    pass


def euclidean_div(a: int, b: int) -> int:
    if b == 0:
        return 0
    return a // b if b > 0 else -(a // -b)


def euclidean_mod(a: int, b: int) -> int:
    if b == 0:
        return a
    return a - b * euclidean_div(a, b)


def _bool_ops(eq_sorts: list[Sort]) -> tuple[list[FunSymbol], dict[str, Callable]]:
    b = BOOL
    syms = [
        FunSymbol("not", (b,), b, THEORY),
        FunSymbol("and", (b, b), b, THEORY),
        FunSymbol("or", (b, b), b, THEORY),
        FunSymbol("=>", (b, b), b, THEORY),
        FunSymbol("<=>", (b, b), b, THEORY),
    ]
    interp: dict[str, Callable] = {
        "not": lambda x: not x,
        "and": lambda x, y: x and y,
        "or": lambda x, y: x or y,
        "=>": lambda x, y: (not x) or y,
        "<=>": lambda x, y: x == y,
    }
    for s in eq_sorts:
        name = f"={s.name}"
        syms.append(FunSymbol(name, (s, s), b, THEORY))
        interp[name] = lambda x, y: x == y
    return syms, interp


@dataclass(frozen=True)
class Carrier:
    """Explicit finite carrier, or the integers when elements is None."""

    elements: tuple | None

    @property
    def finite(self) -> bool:
        return self.elements is not None


class UnderlyingModel:
    def __init__(
        self,
        name: str,
        sorts: list[Sort],
        symbols: list[FunSymbol],
        interp: dict[str, Callable],
        carriers: dict[Sort, Carrier],
    ) -> None:
        self.name = name
        self.sorts = {s.name: s for s in sorts}
        self.symbols = {f.name: f for f in symbols}
        self.interp = interp
        self.carriers = carriers
        self._value_cache: dict[tuple[str, object], FunSymbol] = {}
        for s in sorts:
            if carriers[s].finite:
                for e in carriers[s].elements:  # type: ignore[union-attr]
                    self.value_symbol(s, e)

    # -- values ------------------------------------------------------------

    def value_symbol(self, sort: Sort, element: object) -> FunSymbol:
        key = (sort.name, element)
        sym = self._value_cache.get(key)
        if sym is None:
            if not self.element_in_carrier(sort, element):
                raise EvalError(f"{element!r} is not in the carrier of {sort.name}")
            sym = FunSymbol(self.value_name(element), (), sort, THEORY,
                            is_value=True, value=element)
            self._value_cache[key] = sym
        return sym

    def value_term(self, sort: Sort, element: object) -> App:
        return App(self.value_symbol(sort, element))

    @staticmethod
    def value_name(element: object) -> str:
        if isinstance(element, bool):
            return "true" if element else "false"
        return str(element)

    def element_in_carrier(self, sort: Sort, element: object) -> bool:
        car = self.carriers.get(sort)
        if car is None:
            return False
        if car.finite:
            return element in car.elements  # type: ignore[operator]
        return isinstance(element, int) and not isinstance(element, bool)

    def is_value_term(self, t: Term) -> bool:
        return isinstance(t, App) and t.fun.is_value

    def carrier_elements(self, sort: Sort) -> tuple:
        car = self.carriers[sort]
        if not car.finite:
            raise EvalError(f"carrier of {sort.name} is infinite")
        return car.elements  # type: ignore[return-value]

    @property
    def finite(self) -> bool:
        return all(c.finite for c in self.carriers.values())

    def int_sort(self) -> Sort | None:
        s = self.sorts.get("Int")
        return s

    # -- interpretation ----------------------------------------------------

    def interpret(self, t: Term) -> object:
        """Value of a ground theory term (the unique calc normal form)."""
        if isinstance(t, Variable):
            raise EvalError(f"term is not ground: variable {t.name}")
        if t.fun.kind != THEORY:
            raise EvalError(f"non-theory symbol {t.fun.name} in theory term")
        if t.fun.is_value:
            return t.fun.value
        fn = self.interp.get(t.fun.name)
        if fn is None:
            raise EvalError(f"no interpretation for {t.fun.name}")
        return fn(*(self.interpret(a) for a in t.args))

    def interpret_term(self, t: Term) -> App:
        """interpret, packaged back into the corresponding value constant."""
        return self.value_term(sort_of(t), self.interpret(t))

    def eval_constraint(self, phi: Term) -> bool:
        if not is_ground(phi):
            raise EvalError(f"constraint is not ground: {phi!r}")
        if sort_of(phi) != BOOL:
            raise EvalError(f"constraint has sort {sort_of(phi).name}, expected Bool")
        v = self.interpret(phi)
        return bool(v)

    def eval_with(self, t: Term, valuation: dict[Variable, object]) -> object:
        """Interpret a theory term under a valuation into carrier elements."""
        if isinstance(t, Variable):
            if t not in valuation:
                raise EvalError(f"valuation does not cover {t.name}")
            return valuation[t]
        if t.fun.is_value:
            return t.fun.value
        fn = self.interp.get(t.fun.name)
        if fn is None:
            raise EvalError(f"no interpretation for {t.fun.name}")
        return fn(*(self.eval_with(a, valuation) for a in t.args))

    # -- calculation steps ---------------------------------------------------

    def is_calc_redex(self, t: Term) -> bool:
        return (
            isinstance(t, App)
            and t.fun.kind == THEORY
            and not t.fun.is_value
            and all(self.is_value_term(a) for a in t.args)
        )

    def calc_step_candidates(self, t: Term) -> list[tuple[Position, Term]]:
        """All single forward calculation redexes with their contracted terms."""
        out = []
        for pos, sub in positions_of(t):
            if self.is_calc_redex(sub):
                out.append((pos, replace_at(t, pos, self.interpret_term(sub))))
        return out

    def calc_normalize(self, t: Term) -> Term:
        if isinstance(t, Variable):
            return t
        args = tuple(self.calc_normalize(a) for a in t.args)
        u = t if args == t.args else App(t.fun, args)
        if self.is_calc_redex(u):
            return self.interpret_term(u)
        return u

    def calc_normalize_steps(self, t: Term) -> tuple[Term, list[tuple[Position, Term, Term]]]:
        """Normal form plus the innermost-leftmost contraction sequence.

        Each step records (position, redex, value) against the term as it was
        just before that contraction.
        """
        steps: list[tuple[Position, Term, Term]] = []

        def go(u: Term, pos: Position) -> Term:
            if isinstance(u, Variable):
                return u
            args = tuple(go(a, pos + (i + 1,)) for i, a in enumerate(u.args))
            v = u if args == u.args else App(u.fun, args)
            if self.is_calc_redex(v):
                val = self.interpret_term(v)
                steps.append((pos, v, val))
                return val
            return v

        return go(t, ()), steps


def bool_model() -> UnderlyingModel:
    syms, interp = _bool_ops([BOOL])
    return UnderlyingModel(
        "bool", [BOOL], syms, interp, {BOOL: Carrier((False, True))})


def lia_model() -> UnderlyingModel:
    i, b = INT, BOOL
    syms, interp = _bool_ops([BOOL, INT])
    syms += [
        FunSymbol("+", (i, i), i, THEORY),
        FunSymbol("-", (i, i), i, THEORY),
        FunSymbol("neg", (i,), i, THEORY),
        FunSymbol("*", (i, i), i, THEORY),
        FunSymbol("div", (i, i), i, THEORY),
        FunSymbol("mod", (i, i), i, THEORY),
        FunSymbol("<", (i, i), b, THEORY),
        FunSymbol("<=", (i, i), b, THEORY),
        FunSymbol(">", (i, i), b, THEORY),
        FunSymbol(">=", (i, i), b, THEORY),
    ]
    interp.update({
        "+": lambda x, y: x + y,
        "-": lambda x, y: x - y,
        "neg": lambda x: -x,
        "*": lambda x, y: x * y,
        "div": euclidean_div,
        "mod": euclidean_mod,
        "<": lambda x, y: x < y,
        "<=": lambda x, y: x <= y,
        ">": lambda x, y: x > y,
        ">=": lambda x, y: x >= y,
    })
    return UnderlyingModel(
        "lia", [BOOL, INT], syms, interp,
        {BOOL: Carrier((False, True)), INT: Carrier(None)})


def intmod_model(n: int) -> UnderlyingModel:
    if not 1 <= n <= 64:
        raise ValueError("modulus must be in 1..64")
    i, b = INT, BOOL
    syms, interp = _bool_ops([BOOL, INT])
    syms += [
        FunSymbol("+", (i, i), i, THEORY),
        FunSymbol("-", (i, i), i, THEORY),
        FunSymbol("neg", (i,), i, THEORY),
        FunSymbol("*", (i, i), i, THEORY),
        FunSymbol("div", (i, i), i, THEORY),
        FunSymbol("mod", (i, i), i, THEORY),
        FunSymbol("<", (i, i), b, THEORY),
        FunSymbol("<=", (i, i), b, THEORY),
        FunSymbol(">", (i, i), b, THEORY),
        FunSymbol(">=", (i, i), b, THEORY),
    ]
    interp.update({
        "+": lambda x, y: (x + y) % n,
        "-": lambda x, y: (x - y) % n,
        "neg": lambda x: (-x) % n,
        "*": lambda x, y: (x * y) % n,
        "div": lambda x, y: euclidean_div(x, y) % n,
        "mod": lambda x, y: euclidean_mod(x, y) % n,
        "<": lambda x, y: x < y,
        "<=": lambda x, y: x <= y,
        ">": lambda x, y: x > y,
        ">=": lambda x, y: x >= y,
    })
    return UnderlyingModel(
        f"intmod {n}", [BOOL, INT], syms, interp,
        {BOOL: Carrier((False, True)), INT: Carrier(tuple(range(n)))})


def builtin_model(name: str, arg: int | None = None) -> UnderlyingModel:
    if name == "bool":
        return bool_model()
    if name == "lia":
        return lia_model()
    if name == "intmod":
        if arg is None:
            raise ValueError("intmod needs a modulus")
        return intmod_model(arg)
    raise ValueError(f"unknown model {name}")


def int_domain(box: int) -> list[int]:
    """Deterministic closest-to-zero enumeration of [-box, box]."""
    out = [0]
    for k in range(1, box + 1):
        out.append(k)
        out.append(-k)
    return out


def sort_domain(model: UnderlyingModel, sort: Sort, box: int) -> list:
    car = model.carriers[sort]
    if car.finite:
        return list(car.elements)  # type: ignore[arg-type]
    return int_domain(box)


def enumerate_satisfying(
    model: UnderlyingModel,
    xs: set[Variable] | frozenset[Variable],
    phi: Term,
    box: int = 64,
) -> Iterator[dict[Variable, Term]]:
    """X-valued substitutions over the box/carriers that satisfy phi.

    Exhaustive for finite carriers; for the integers it walks [-box, box] per
    variable, closest to zero first.  Enumeration order is deterministic.
    """
    order = sorted(xs, key=lambda v: (v.name, v.sort.name))
    if vars_of(phi) - set(order):
        raise EvalError("constraint mentions variables outside the enumeration set")
    domains = [sort_domain(model, v.sort, box) for v in order]
    for combo in itertools.product(*domains):
        sigma = {v: model.value_term(v.sort, e) for v, e in zip(order, combo)}
        if model.eval_constraint(apply_subst_ground(sigma, phi)):
            yield sigma


def apply_subst_ground(sigma: dict[Variable, Term], t: Term) -> Term:
    from .terms import apply_subst

    return apply_subst(sigma, t)
