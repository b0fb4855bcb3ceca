"""Refuting a constrained equation with a finite algebra.

Over the booleans, f is true on both values and g is true everywhere, yet
g(x) ~ f(x) is not a consequence: a model with one extra carrier element can
send f to false there.  The search finds that algebra; value-consistency
checking separately shows when no model can exist at all.
"""

from lcer import parse_theory
from lcer.algebra import (
    algebra_text,
    check_refutes,
    check_value_consistency,
    search_counter_model,
)
from lcer.syntax import term_text

tf = parse_theory(open("fixtures/refute_bool.th").read())
goal = tf.goals["gf"]

out = search_counter_model(tf.theory, goal, max_extra_per_theory_sort=1)
print("counter-model for g(x) ~ f(x):")
print(algebra_text(out.algebra))
rho = check_refutes(out.algebra, goal)
print("refuting valuation:", {v.name: str(e) for v, e in rho.items()})

bad = parse_theory(open("fixtures/inconsistent.th").read())
report = check_value_consistency(bad.theory, depth=2)
print("\na ~ 0 and a ~ 1 together convert two distinct values:")
print(f"  {term_text(report.left)} ~ ... ~ {term_text(report.right)} "
      f"({len(report.trace)} steps), so no model exists")
