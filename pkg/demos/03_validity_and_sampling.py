"""Semi-deciding validity of constrained equations.

Validity quantifies over value instantiations of the declared variables.
With the variable declared, abs(x) ~ abs(-x) holds on every sample; with an
empty declaration the identity instantiation already fails to convert, which
matches the distinction the explicit variable set exists to make.
"""

from lcer import check_ce_validity, parse_theory
from lcer.syntax import ce_text
from lcer.validity import ValidityBudgets

tf = parse_theory(open("fixtures/absmax.th").read())
budgets = ValidityBudgets(bound=8, box=5)

for name in ("absneg", "maxcomm", "absmax", "absneg0"):
    goal = tf.goals[name]
    status = check_ce_validity(tf.theory, goal, budgets)
    print(ce_text(goal, "goal", name))
    print(f"   -> {status.kind}"
          + (f" ({status.samples} instances)" if status.samples else ""))
    if status.failing_sample is not None:
        sample = {v.name: str(t) for v, t in status.failing_sample.items()}
        print(f"      instance without a bounded conversion: {sample or 'identity'}")
    print()
