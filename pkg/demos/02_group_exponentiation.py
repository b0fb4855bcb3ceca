"""A twelve-step conversion in a group theory with integer exponents.

The equations say: the operation associates, e is a left identity, inv is a
left inverse, and exponents add.  Bounded bidirectional search shows that
exp(x,-1) converts to inv(x); the calculation steps on exponents are folded
into the same trace.
"""

from lcer import conversion_search, parse_theory
from lcer.equations import SearchLimits, replay_trace
from lcer.syntax import term_text

tf = parse_theory(open("fixtures/group.th").read())
goal = tf.goals["expinv"]

trace = conversion_search(tf.theory, goal.lhs, goal.rhs, SearchLimits(bound=12))
print(f"{term_text(goal.lhs)} converts to {term_text(goal.rhs)} "
      f"in {len(trace)} steps:\n")
current = goal.lhs
from lcer.terms import replace_at  # noqa: E402

for i, step in enumerate(trace):
    current = replace_at(current, step.position, step.result)
    mark = "calc" if step.kind == "calc" else f"eq#{step.eq_index}"
    print(f"  {i + 1:2d}. [{mark:5s}] {term_text(current)}")

assert replay_trace(tf.theory, goal.lhs, trace) == goal.rhs
