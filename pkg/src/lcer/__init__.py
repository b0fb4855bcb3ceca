"""Constrained equational reasoning over built-in theories.

Terms and signatures, underlying models with a validity oracle, rewriting with
constrained equations, a twelve-rule proof checker with partial proof
generation, and finite-algebra counter-models.
"""

from .algebra import (
    ConsistencyReport,
    FiniteCEAlgebra,
    FiniteCongruence,
    check_is_model,
    check_refutes,
    check_value_consistency,
    quotient,
    search_counter_model,
)
from .equations import (
    CETheory,
    ConstrainedEquation,
    ConversionTrace,
    SearchLimits,
    TraceStep,
    conversion_search,
    replay_trace,
    rule_step_candidates,
)
from .models import UnderlyingModel, bool_model, enumerate_satisfying, intmod_model, lia_model
from .oracle import OracleBudget, Verdict, check_validity
from .proofs import (
    CheckReport,
    Derivation,
    check_proof,
    generate_calc_proof,
    prove_heuristic,
)
from .syntax import TheoryFile, parse_proof, parse_term, parse_theory, serialize_proof
from .terms import (
    App,
    FunSymbol,
    Position,
    Signature,
    Sort,
    Term,
    Variable,
    apply_subst,
    decompose_differences,
    match,
    replace_at,
    subterm_at,
    unify,
    vars_of,
)
from .validity import ValidityBudgets, ValidityStatus, check_ce_validity, is_trivial

__all__ = [name for name in dir() if not name.startswith("_")]
