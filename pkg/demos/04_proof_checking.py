"""Checking and generating derivations in the twelve-rule calculus.

First the shipped derivation for the group theory is checked; then a proof of
nneg(4) ~ true is generated by simulating a rewrite chain (one instance step
per counter decrement), and finally a goal that needs case analysis is proved
with Split and Abst.
"""

from lcer import check_proof, parse_proof, parse_theory, prove_heuristic, serialize_proof
from lcer.syntax import parse_goal_spec
from lcer.validity import ValidityBudgets

group = parse_theory(open("fixtures/group.th").read())
d = parse_proof(group.theory, open("fixtures/expinv.prf").read())
print("expinv.prf:", check_proof(group.theory, d).verdict)

nneg = parse_theory(open("fixtures/nneg.th").read())
goal = parse_goal_spec(nneg.theory, "nneg(4)", "true")
proof = prove_heuristic(nneg.theory, goal, ValidityBudgets(bound=12))
print("\nnneg(4) ~ true, generated derivation "
      f"({proof.count_nodes('Trans')} transitivity joins):")
print(serialize_proof(proof))
print("checker verdict:", check_proof(nneg.theory, proof).verdict)

split = parse_theory(open("fixtures/splitabst.th").read())
proof = prove_heuristic(split.theory, split.goals["all"], ValidityBudgets())
print("\nf(x) ~ 0 by case analysis on the boolean argument:")
print(serialize_proof(proof))
