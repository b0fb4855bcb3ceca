"""Many-sorted terms: signatures, positions, substitutions, matching, unification.

Terms are immutable values with structural equality; every operation here is a
pure function.  Variables carry their sort intrinsically, so two variables with
the same name but different sorts are distinct objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

THEORY = "theory"
TERM = "term"


@dataclass(frozen=True)
class Sort:
    name: str
    kind: str  # THEORY or TERM

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class FunSymbol:
    name: str
    arg_sorts: tuple[Sort, ...]
    result_sort: Sort
    kind: str  # THEORY or TERM
    is_value: bool = False
    value: object = None  # carrier element for value constants

    def __post_init__(self) -> None:
        if self.kind == THEORY:
            for s in self.arg_sorts + (self.result_sort,):
                if s.kind != THEORY:
                    raise SignatureError(
                        f"theory symbol {self.name} uses term sort {s.name}")
        if self.is_value and (self.kind != THEORY or self.arg_sorts):
            raise SignatureError(f"value {self.name} must be a theory constant")

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    def __repr__(self) -> str:
        return self.name


class SignatureError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class Variable:
    name: str
    sort: Sort

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash(("v", self.name, self.sort.name)))

    def __eq__(self, other: object) -> bool:
        return (
            self is other
            or isinstance(other, Variable)
            and self.name == other.name
            and self.sort == other.sort
        )

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    @property
    def size(self) -> int:
        return 1

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, eq=False)
class App:
    fun: FunSymbol
    args: tuple["Term", ...] = ()

    def __post_init__(self) -> None:
        if len(self.args) != self.fun.arity:
            raise SignatureError(
                f"{self.fun.name} expects {self.fun.arity} arguments, got {len(self.args)}")
        for a, s in zip(self.args, self.fun.arg_sorts):
            if sort_of(a) != s:
                raise SignatureError(
                    f"argument {a!r} of {self.fun.name} has sort {sort_of(a).name}, "
                    f"expected {s.name}")
        object.__setattr__(
            self, "_hash", hash(("a", self.fun.name, self.fun.result_sort.name, self.args)))
        object.__setattr__(self, "_size", 1 + sum(a.size for a in self.args))

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, App)
            and self._hash == other._hash  # type: ignore[attr-defined]
            and self.fun == other.fun
            and self.args == other.args
        )

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    @property
    def size(self) -> int:
        return self._size  # type: ignore[attr-defined]

    def __repr__(self) -> str:
        if not self.args:
            return self.fun.name
        return f"{self.fun.name}({', '.join(map(repr, self.args))})"


Term = Variable | App

#: A substitution is a finite mapping from variables to same-sorted terms.
Subst = Mapping[Variable, Term]

Position = tuple[int, ...]  # 1-based child indices


def sort_of(t: Term) -> Sort:
    return t.sort if isinstance(t, Variable) else t.fun.result_sort


def is_ground(t: Term) -> bool:
    if isinstance(t, Variable):
        return False
    return all(is_ground(a) for a in t.args)


def vars_of(t: Term, kind: str | None = None) -> set[Variable]:
    """Variables occurring in t, optionally restricted to theory or term sorts."""
    out: set[Variable] = set()
    stack: list[Term] = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Variable):
            if kind is None or u.sort.kind == kind:
                out.add(u)
        else:
            stack.extend(u.args)
    return out


def symbols_of(t: Term) -> set[FunSymbol]:
    out: set[FunSymbol] = set()
    stack: list[Term] = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, App):
            out.add(u.fun)
            stack.extend(u.args)
    return out


def subterms_of(t: Term) -> Iterator[Term]:
    stack: list[Term] = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, App):
            stack.extend(reversed(u.args))


def positions_of(t: Term) -> Iterator[tuple[Position, Term]]:
    """All positions of t with their subterms, in pre-order."""
    stack: list[tuple[Position, Term]] = [((), t)]
    while stack:
        pos, u = stack.pop()
        yield pos, u
        if isinstance(u, App):
            for i in range(len(u.args), 0, -1):
                stack.append((pos + (i,), u.args[i - 1]))


class InvalidPosition(Exception):
    pass


class SortMismatch(Exception):
    pass


def subterm_at(t: Term, pos: Position) -> Term:
    for i in pos:
        if not isinstance(t, App) or not 1 <= i <= len(t.args):
            raise InvalidPosition(f"position {list(pos)} not valid")
        t = t.args[i - 1]
    return t


def replace_at(t: Term, pos: Position, u: Term) -> Term:
    if not pos:
        if sort_of(u) != sort_of(t):
            raise SortMismatch(
                f"cannot put a {sort_of(u).name} term at a {sort_of(t).name} position")
        return u
    if not isinstance(t, App) or not 1 <= pos[0] <= len(t.args):
        raise InvalidPosition(f"position {list(pos)} not valid")
    i = pos[0] - 1
    args = list(t.args)
    args[i] = replace_at(args[i], pos[1:], u)
    return App(t.fun, tuple(args))


def apply_subst(subst: Subst, t: Term) -> Term:
    """Simultaneous application of a substitution."""
    if not subst:
        return t
    if isinstance(t, Variable):
        return subst.get(t, t)
    args = tuple(apply_subst(subst, a) for a in t.args)
    if args == t.args:
        return t
    return App(t.fun, args)


def validate_subst(subst: Subst) -> None:
    for x, u in subst.items():
        if sort_of(u) != x.sort:
            raise SortMismatch(f"{x.name} ↦ {u!r} does not preserve its sort")


def compose_subst(outer: Subst, inner: Subst) -> dict[Variable, Term]:
    """outer after inner: x maps to outer(inner(x))."""
    out = {x: apply_subst(outer, u) for x, u in inner.items()}
    for x, u in outer.items():
        out.setdefault(x, u)
    return {x: u for x, u in out.items() if u != x}


def match(pattern: Term, subject: Term) -> Optional[dict[Variable, Term]]:
    """Most general substitution with pattern*subst == subject, or None."""
    bind: dict[Variable, Term] = {}
    work = [(pattern, subject)]
    while work:
        p, s = work.pop()
        if isinstance(p, Variable):
            if p.sort != sort_of(s):
                return None
            seen = bind.get(p)
            if seen is None:
                bind[p] = s
            elif seen != s:
                return None
        else:
            if not isinstance(s, App) or p.fun != s.fun:
                return None
            work.extend(zip(p.args, s.args))
    return bind


def _occurs(x: Variable, t: Term, bind: dict[Variable, Term]) -> bool:
    stack: list[Term] = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Variable):
            if u == x:
                return True
            if u in bind:
                stack.append(bind[u])
        else:
            stack.extend(u.args)
    return False


def unify(s: Term, t: Term) -> Optional[dict[Variable, Term]]:
    """Most general unifier (idempotent, occurs check enforced), or None."""
    bind: dict[Variable, Term] = {}

    def walk(u: Term) -> Term:
        while isinstance(u, Variable) and u in bind:
            u = bind[u]
        return u

    work = [(s, t)]
    while work:
        a, b = work.pop()
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if isinstance(a, Variable):
            if sort_of(b) != a.sort or _occurs(a, b, bind):
                return None
            bind[a] = b
        elif isinstance(b, Variable):
            if sort_of(a) != b.sort or _occurs(b, a, bind):
                return None
            bind[b] = a
        else:
            if a.fun != b.fun:
                return None
            work.extend(zip(a.args, b.args))
    # resolve chains so the result is idempotent
    out: dict[Variable, Term] = {}
    for x in bind:
        u = x
        while isinstance(u, Variable) and u in bind:
            u = bind[u]
        out[x] = _resolve(u, bind)
    return {x: u for x, u in out.items() if u != x}


def _resolve(t: Term, bind: dict[Variable, Term]) -> Term:
    if isinstance(t, Variable):
        if t in bind:
            return _resolve(bind[t], bind)
        return t
    args = tuple(_resolve(a, bind) for a in t.args)
    return t if args == t.args else App(t.fun, args)


@dataclass(frozen=True, eq=False)
class Hole:
    """Placeholder inside a multi-hole context skeleton."""

    index: int
    sort: Sort

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash(("h", self.index, self.sort.name)))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Hole)
            and self.index == other.index
            and self.sort == other.sort
        )

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    @property
    def size(self) -> int:
        return 1

    def __repr__(self) -> str:
        return f"□{self.index}"


@dataclass(frozen=True)
class Context:
    """Maximal shared multi-hole context of two terms."""

    skeleton: object  # Term with Hole leaves
    holes: int

    def plug(self, fills: list[Term] | tuple[Term, ...]) -> Term:
        if len(fills) != self.holes:
            raise ValueError(f"context has {self.holes} holes, got {len(fills)} fills")

        def go(u):
            if isinstance(u, Hole):
                return fills[u.index]
            if isinstance(u, App):
                return App(u.fun, tuple(go(a) for a in u.args))
            return u

        return go(self.skeleton)


def decompose_differences(s: Term, t: Term) -> tuple[Context, list[tuple[Term, Term]]]:
    """Split s, t into their maximal shared context and the differing pairs.

    Each returned pair differs at its root or has a variable on one side;
    plugging the left (right) components back reproduces s (t) exactly.
    """
    if sort_of(s) != sort_of(t):
        raise SortMismatch("decompose_differences needs same-sorted terms")
    pairs: list[tuple[Term, Term]] = []

    def go(a: Term, b: Term):
        if a == b:
            return a
        if isinstance(a, App) and isinstance(b, App) and a.fun == b.fun:
            return _mk(a.fun, [go(x, y) for x, y in zip(a.args, b.args)])
        hole = Hole(len(pairs), sort_of(a))
        pairs.append((a, b))
        return hole

    def _mk(fun: FunSymbol, args: list):
        # skeleton nodes may contain holes, so bypass App's sort validation
        obj = object.__new__(App)
        object.__setattr__(obj, "fun", fun)
        object.__setattr__(obj, "args", tuple(args))
        object.__setattr__(obj, "_hash", hash(("a", fun.name, fun.result_sort.name, tuple(args))))
        object.__setattr__(obj, "_size", 1 + sum(getattr(a, "size", 1) for a in args))
        return obj

    skel = go(s, t)
    return Context(skel, len(pairs)), pairs


def fresh_var(base: str, sort: Sort, avoid: set[Variable]) -> Variable:
    names = {v.name for v in avoid}
    if base not in names:
        return Variable(base, sort)
    i = 0
    while f"{base}{i}" in names:
        i += 1
    return Variable(f"{base}{i}", sort)


@dataclass(frozen=True)
class Signature:
    """Declared sorts and function symbols (value constants live in the model)."""

    sorts: tuple[Sort, ...]
    symbols: tuple[FunSymbol, ...]
    _sort_index: dict = field(default_factory=dict, repr=False, compare=False)
    _sym_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_name: dict[str, Sort] = {}
        for s in self.sorts:
            if s.name in by_name:
                raise SignatureError(f"duplicate sort {s.name}")
            by_name[s.name] = s
        syms: dict[str, FunSymbol] = {}
        for f in self.symbols:
            if f.name in syms:
                raise SignatureError(f"duplicate symbol {f.name}")
            syms[f.name] = f
            for s in f.arg_sorts + (f.result_sort,):
                if by_name.get(s.name) != s:
                    raise SignatureError(f"symbol {f.name} mentions undeclared sort {s.name}")
        self._sort_index.update(by_name)
        self._sym_index.update(syms)

    def sort(self, name: str) -> Sort | None:
        return self._sort_index.get(name)

    def symbol(self, name: str) -> FunSymbol | None:
        return self._sym_index.get(name)

    def term_symbols(self) -> list[FunSymbol]:
        return [f for f in self.symbols if f.kind == TERM]
