import random

import pytest
from hypothesis import given, settings, strategies as st
from strategies import VARS, boolean_candidates, exprs

from lode.expr import (
    SELF,
    AnalysisError,
    Const,
    Cosg,
    EvalError,
    Mul,
    SelfRef,
    Sg,
    Sub,
    Var,
    call_form,
    canon,
    degree,
    eval_expr,
    is_boolean_shaped,
    is_limited,
    is_nonneg_shaped,
)
from lode.syntax import parse_expr

P = parse_expr("3 * x1 * x3 + 2 * x2 * x3")
P_PRIME = parse_expr("x1 * sg((x1 - x3) * x2) + x2 * x2 * x2")

var_sets = st.sets(st.sampled_from(VARS + (SELF,)))


# -- degree --------------------------------------------------------------------


@pytest.mark.parametrize(
    "e, vars, want",
    [
        (P, {"x1", "x2", "x3"}, 2),
        (P, {"x1"}, 1),
        (P, {"x2"}, 1),
        (P, {"x3"}, 1),
        (P_PRIME, {"x1"}, 1),
        (P_PRIME, {"x3"}, 0),
        (P_PRIME, {"x2"}, 3),
    ],
)
def test_degree_worked_example(e, vars, want):
    assert degree(vars, e) == want


def test_p_prime_not_linear_in_x2():
    assert degree({"x2"}, P_PRIME) != 1


@pytest.mark.parametrize(
    "text, vars, want",
    [
        ("x + y", {"x"}, 1),
        ("x * y", {"x", "y"}, 2),
        ("sg(x * y)", {"x", "y"}, 0),
        ("(k - 1) * f", {SELF}, 1),
        ("div2(f) - f", {SELF}, 1),
        ("len(x) * x", {"x"}, 1),
        ("h(x * x, y)", {"x"}, 2),
        ("h(y)", {"x"}, 0),
    ],
)
def test_degree_examples(text, vars, want):
    assert degree(vars, parse_expr(text)) == want


def test_degree_scope():
    with pytest.raises(AnalysisError):
        degree({"x"}, parse_expr("x + z"), scope={"x", "y"})
    with pytest.raises(AnalysisError):
        degree({"x"}, parse_expr("sg(z)"), scope={"x"})


@settings(max_examples=300)
@given(exprs(self_ref=True), exprs(self_ref=True), var_sets)
def test_degree_structural_rules(a, b, vars):
    da, db = degree(vars, a), degree(vars, b)
    assert degree(vars, a + b) == max(da, db)
    assert degree(vars, a - b) == max(da, db)
    assert degree(vars, a * b) == da + db
    assert degree(vars, Sg(a)) == 0
    assert degree(vars, Cosg(a)) == 0


@given(exprs(self_ref=True), var_sets)
def test_degree_ignores_foreign_variables(e, vars):
    assert degree(set(), e) == 0
    assert degree(vars, e) <= degree(set(VARS) | {SELF}, e)


# -- limitedness and call forms --------------------------------------------------


def test_limited():
    assert is_limited(parse_expr("x + div2(y) - 3"))
    assert not is_limited(parse_expr("x * y"))
    assert not is_limited(parse_expr("smash(x, y)"))


@pytest.mark.parametrize(
    "text, want",
    [
        ("-f + sg(f) * k", "General"),
        ("sg(f) * k", "Simple"),
        ("sg(f - 3) * h(x)", "Offset({3})"),
        ("sg(f) + cosg(f - 1)", "Offset({0,1})"),
        ("f + h(x)", "General"),
        ("sg(f + 1)", "General"),
        ("x + y", "NoCall"),
    ],
)
def test_call_form(text, want):
    assert str(call_form(parse_expr(text))) == want


def test_call_form_of_reset_body_after_decomposition():
    from lode.schema import decompose_linear

    dec = decompose_linear(parse_expr("-f + sg(f) * k"))
    assert dec.a_constant() == -1
    assert str(call_form(dec.B)) == "Simple"


def _offset_zero(e):
    if isinstance(e, (Sg, Cosg)) and isinstance(e.arg, SelfRef):
        return type(e)(Sub(SelfRef(), Const(0)))
    if isinstance(e, Sg | Cosg):
        return type(e)(_offset_zero(e.arg))
    kids = e.children()
    if not kids:
        return e
    rebuilt = [_offset_zero(k) for k in kids]
    if hasattr(e, "args") and not hasattr(e, "arg"):
        return type(e)(e.fun, tuple(rebuilt))
    return type(e)(*rebuilt)


@given(exprs(self_ref=True, calls=(("h", 2),)))
def test_call_form_monotone_under_zero_offset(e):
    before, after = call_form(e), call_form(_offset_zero(e))
    if before.kind == "Simple":
        assert after.kind == "Offset" and after.constants == {0}
    elif before.kind == "Offset":
        assert after.kind == "Offset" and after.constants == before.constants | {0}
    else:
        assert after == before


# -- range shapes ----------------------------------------------------------------

PARITY_STEP = parse_expr("sg(f) * cosg(bit(len(x) + 1, y)) + cosg(f) * sg(bit(len(x) + 1, y))")


def test_shape_examples():
    assert is_boolean_shaped(PARITY_STEP)
    assert not is_nonneg_shaped(parse_expr("x - y"))
    both = parse_expr("sg(x) * sg(y)")
    assert is_boolean_shaped(both) and is_nonneg_shaped(both)
    assert is_boolean_shaped(parse_expr("1 - sg(x)"))
    assert not is_boolean_shaped(parse_expr("sg(x) + sg(y)"))
    assert is_boolean_shaped(parse_expr("sg(x - 2) + cosg(x - 1)"))
    assert not is_boolean_shaped(parse_expr("sg(x - 1) + cosg(x - 1) * 2"))


def _envs(rng, count, with_self):
    for _ in range(count):
        env = {v: rng.choice((0, 1, 2, 3, rng.getrandbits(10))) for v in VARS + ("x",)}
        yield env, (rng.randint(-8, 8) if with_self else None)


def _value(e, env, me):
    try:
        return eval_expr(e, env, me)
    except EvalError:
        return None


@settings(max_examples=200)
@given(boolean_candidates(), st.randoms(use_true_random=False))
def test_boolean_shape_sound(e, rng):
    if not is_boolean_shaped(e):
        return
    for env, me in _envs(rng, 50, False):
        assert _value(e, env, me) in (0, 1, None)


@settings(max_examples=200)
@given(exprs(), st.randoms(use_true_random=False))
def test_nonneg_shape_sound(e, rng):
    if not is_nonneg_shaped(e):
        return
    for env, me in _envs(rng, 50, False):
        v = _value(e, env, me)
        assert v is None or v >= 0


def test_shapes_sound_on_ten_thousand_environments():
    rng = random.Random(7)
    shaped = [PARITY_STEP, parse_expr("sg(x1) * cosg(x2 - x3)"), parse_expr("1 - sg(x1 - y)")]
    count = 0
    for env, me in _envs(rng, 10_000, True):
        for e in shaped:
            assert eval_expr(e, env, me) in (0, 1)
        assert eval_expr(parse_expr("x1 * div2(y) + len(x2)"), env) >= 0
        count += 1
    assert count == 10_000


# -- evaluation ------------------------------------------------------------------


@pytest.mark.parametrize(
    "text, env, want",
    [
        ("sg(x - y)", {"x": 5, "y": 5}, 0),
        ("div2(x) + 1", {"x": 7}, 4),
        ("len(x) * len(y)", {"x": 3, "y": 5}, 6),
        ("-x", {"x": 3}, -3),
        ("bit(2, y) + 2 * bit(0, y)", {"y": 5}, 3),
    ],
)
def test_eval(text, env, want):
    assert eval_expr(parse_expr(text), env) == want


def test_eval_errors():
    with pytest.raises(EvalError):
        eval_expr(SelfRef(), {})
    with pytest.raises(EvalError):
        eval_expr(parse_expr("h(x)"), {"x": 1})
    with pytest.raises(EvalError):
        eval_expr(Var("q"), {})
    assert eval_expr(Mul(SelfRef(), Const(3)), {}, 5) == 15


def test_operators_build_parsed_trees():
    x, y = Var("x"), Var("y")
    assert -SelfRef() + 2 * x == parse_expr("-f + 2 * x")
    assert x * y - 1 == parse_expr("x * y - 1")


@given(exprs(), exprs())
def test_canon_commutes(a, b):
    assert canon(a + b) == canon(b + a)
    assert canon(a * b) == canon(b * a)
