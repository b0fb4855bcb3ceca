"""Rewriting with a constrained congruence equation.

A single equation relates wrapped integers whenever they agree modulo 12, so
rewriting simulates clock arithmetic: 7 + 31 calculates to 38, and a rule
step moves between residue representatives.
"""

from lcer import conversion_search, parse_term, parse_theory
from lcer.equations import SearchLimits, replay_trace, rule_step_candidates
from lcer.syntax import term_text

THEORY = """
(theory
  (model lia)
  (sorts Unit)
  (fun cong (Int) Unit)
  (eq (pi x y) (constraint (= (mod x 12) (mod y 12))) (cong x) (cong y)))
"""

tf = parse_theory(THEORY)
theory = tf.theory

start = parse_term(theory, "cong(+(7,31))")
goal = parse_term(theory, "cong(14)")

print("one-step successors of cong(38), values drawn from 0..20:")
pool = {theory.model.sorts["Int"]: tuple(range(21))}
for cand in rule_step_candidates(theory, parse_term(theory, "cong(38)"),
                                 value_pool=pool):
    print("  ", term_text(cand.result))

trace = conversion_search(theory, start, goal, SearchLimits(bound=3))
print(f"\nconversion from {term_text(start)} to {term_text(goal)}:")
for i, step in enumerate(trace):
    print(f"  {i + 1}. [{step.kind}] {term_text(step.replaced)} ~ {term_text(step.result)}")

assert replay_trace(theory, start, trace) == goal
print("replayed and validated.")
