import pytest

from lcer.equations import (
    IllegalStep,
    SearchLimits,
    TraceStep,
    conversion_search,
    default_value_pool,
    replay_trace,
    rule_step_candidates,
)
from lcer.syntax import parse_term


def t(tf, text, env=None):
    return parse_term(tf.theory, text, env)


def test_rule_step_candidates_with_pool(mod12):
    th = mod12.theory
    int_sort = th.model.sorts["Int"]
    pool = {int_sort: tuple(range(0, 21))}
    cands = rule_step_candidates(th, t(mod12, "cong(38)"), value_pool=pool)
    results = {c.result for c in cands}
    assert results == {t(mod12, "cong(2)"), t(mod12, "cong(14)")}


def test_rule_step_candidates_directions(group):
    th = group.theory
    cands = rule_step_candidates(th, t(group, "exp(x,0)"))
    root_rules = [c for c in cands if c.position == () and c.direction == "lr"]
    hit = [c for c in root_rules if c.result == t(group, "e")]
    assert hit and hit[0].eq_index == 3 and hit[0].subst == ()


def test_value_alone_has_no_candidates(mod12):
    assert rule_step_candidates(mod12.theory, t(mod12, "14")) == []


def test_reverse_step_is_also_found(mod12):
    th = mod12.theory
    start = t(mod12, "cong(38)")
    for cand in rule_step_candidates(th, start):
        back = rule_step_candidates(th, cand.result)
        assert any(b.result == start and b.position == cand.position for b in back)


def test_conversion_modular(mod12):
    goal = mod12.goals["clock"]
    trace = conversion_search(mod12.theory, goal.lhs, goal.rhs, SearchLimits(bound=3))
    assert trace is not None and len(trace) == 2
    assert trace[0].kind == "calc" and trace[1].kind == "rule"
    assert replay_trace(mod12.theory, goal.lhs, trace) == goal.rhs


def test_conversion_reflexive(mod12):
    term = t(mod12, "cong(3)")
    assert conversion_search(mod12.theory, term, term, SearchLimits(bound=3)) == ()


@pytest.mark.slow
def test_conversion_group(group):
    goal = group.goals["expinv"]
    trace = conversion_search(group.theory, goal.lhs, goal.rhs, SearchLimits(bound=12))
    assert trace is not None and len(trace) <= 12
    assert replay_trace(group.theory, goal.lhs, trace) == goal.rhs


def test_replay_empty_and_illegal(mod12):
    term = t(mod12, "cong(3)")
    assert replay_trace(mod12.theory, term, ()) == term
    env = {}
    x = t(mod12, "38")
    bogus = TraceStep((), "rule", "lr", 0,
                      tuple(), t(mod12, "cong(3)"), t(mod12, "cong(4)"))
    with pytest.raises(IllegalStep):
        replay_trace(mod12.theory, t(mod12, "cong(3)"), (bogus,))


def test_replay_rejects_false_constraint(mod12):
    th = mod12.theory
    eq = th.equations[0]
    x, y = sorted(eq.logical_vars, key=lambda v: v.name)
    sigma = ((x, t(mod12, "1")), (y, t(mod12, "2")))
    step = TraceStep((), "rule", "lr", 0, sigma, t(mod12, "cong(1)"), t(mod12, "cong(2)"))
    with pytest.raises(IllegalStep, match="constraint"):
        replay_trace(th, t(mod12, "cong(1)"), (step,))


def test_default_value_pool_contents(mod12):
    pool = default_value_pool(mod12.theory, [t(mod12, "cong(38)")])
    ints = pool[mod12.theory.model.sorts["Int"]]
    assert set(range(-8, 9)) <= set(ints)
    assert 12 in ints and 38 in ints


def test_conversion_absent_is_none(absmax):
    goal = absmax.goals["absneg0"]
    assert conversion_search(absmax.theory, goal.lhs, goal.rhs,
                             SearchLimits(bound=8)) is None
