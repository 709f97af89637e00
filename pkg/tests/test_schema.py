import random

import pytest
from hypothesis import given, settings, strategies as st

from lode.expr import Add, Call, EvalError, Mul, SelfRef, Var, canon, eval_expr
from lode.interp import eval_naive
from lode.schema import FAMILY_CLASS, Defn, NotLinear, Ode, classify, decompose_linear, wellformed
from lode.stdlib import stdlib_get, stdlib_list
from lode.syntax import parse_expr, parse_program


def ode(rhs, init="0", along="dl", extra=""):
    return parse_program(f"fun g(x, y) {{ init: {init}; d/{along}: {rhs}; {extra} }}")


# -- wellformed ------------------------------------------------------------------


def test_stdlib_programs_wellformed():
    for name in stdlib_list():
        assert wellformed(stdlib_get(name).program) == []


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("fun g(x) = g(x);", "cycle"),
        ("fun g(x, y) { init: x; d/dl: f; }", "scope"),
        ("fun g(x) = h(x);\nfun h(x) = x;", "later"),
        ("fun h(x) = x;\nfun g(x) = h(x, x);", "arguments"),
        ("fun g(x) = z;", "unbound"),
        ("fun g(x) = x;\nfun g(y) = y;", "duplicate"),
        ("fun g(x) { init: f; d/dl: f; }", "initial value"),
        ("fun g(x, x) = x;", "duplicate parameter"),
    ],
)
def test_wellformed_diagnostics(text, fragment):
    diags = wellformed(parse_program(text))
    assert any(fragment in d.message for d in diags), diags


# -- decompose_linear ------------------------------------------------------------


def test_decompose_reset():
    dec = decompose_linear(parse_expr("-f + k"))
    assert dec.a_constant() == -1
    assert dec.B == Var("k")


def test_decompose_gated_coefficient():
    dec = decompose_linear(parse_expr("(k(x, y) - 1) * f"))
    assert canon(dec.A) == canon(parse_expr("k(x, y) - 1"))
    assert not dec.b_terms


def test_decompose_halving():
    assert decompose_linear(parse_expr("div2(f) - f")).special == "halving"
    assert decompose_linear(parse_expr("-f + div2(f)")).special == "halving"


def test_decompose_guarded_terms_stay_in_b():
    dec = decompose_linear(parse_expr("-f + sg(f - 1) * y + x * f"))
    assert dec.guarded
    assert canon(dec.B) == canon(parse_expr("sg(f - 1) * y"))


@pytest.mark.parametrize("text", ["f * f", "sg(x) * f * f + 1", "div2(f)", "len(f)"])
def test_decompose_not_linear(text):
    assert isinstance(decompose_linear(parse_expr(text)), NotLinear)


# -- classify --------------------------------------------------------------------


@pytest.mark.parametrize(
    "rhs, init, along, family",
    [
        ("div2(f) - f", "y", "dl", "ODE3"),
        ("f + bit(len(x), y)", "1", "dl", "ODE1"),
        ("-f + bit(len(x), y)", "0", "dl", "ODE1"),
        ("(bit(len(x), y) - 1) * f", "1", "dl", "ODE0"),
        ("-bit(len(x), y) * f + bit(len(x), y) * bit(len(x) + 1, y)", "0", "dl", "KK_ACC2"),
        ("x * y + f", "0", "dl", "PODE_STRICT"),
        ("(sg(f) * bit(len(x), y) - 1) * f", "1", "dl", "ACODE"),
        ("(sg(f - 2) * bit(len(x), y) - 1) * f", "3", "dl", "ACODE_OFFSET"),
        ("-f + (sg(f) * cosg(bit(len(x), y)) + cosg(f) * sg(bit(len(x), y)))", "0", "dl", "B0ODE"),
        ("sg(f) * bit(len(x), y)", "1", "dl", "TCODE_SUM"),
        ("sg(f) * bit(len(x), y) * f", "1", "dl", "TCODE_PROD"),
        ("f + sg(f) * bit(len(x), y)", "1", "dl", "NC1_CONCAT"),
        ("-f + sg(f - 1) * y", "2", "dl", "BODE"),
        ("sg(f) * y", "1", "dl", "AC1_SUM"),
        ("x * f + sg(f) * y", "1", "dl", "FP_LINEAR"),
        ("f * f", "1", "dl", "UNKNOWN"),
        ("y + div2(x)", "y", "dl2", "L2_STRICT"),
        ("sg(f) * y", "0", "dl2", "L2_NONSTRICT"),
        ("x * f + y", "0", "dl2", "L2_LINEAR"),
    ],
)
def test_family_table(rhs, init, along, family):
    r = classify(ode(rhs, init, along), "g")
    assert (r.family, r.cls) == (family, FAMILY_CLASS[family])


def test_stdlib_examples():
    assert classify(stdlib_get("parity").program, "parity").cls == "FACC2"
    assert classify(stdlib_get("bcount").program, "bcount").family == "PODE_STRICT"
    assert classify(stdlib_get("fourbrn").program, "fourbrn").family == "BODE"


def test_unknown_family_means_unknown_class():
    r = classify(ode("f * f"), "g")
    assert r.cls == "UNKNOWN"


def test_unknown_function():
    with pytest.raises(KeyError):
        classify(ode("f"), "nope")


def test_annotation_trusted():
    r = classify(ode("f + y", extra="bool01;"), "g")
    assert r.family == "ODE1"
    assert r.annotation_trusted
    assert not classify(ode("f + bit(0, y)"), "g").annotation_trusted


def test_kk_needs_boolean_init():
    rhs = "-bit(len(x), y) * f + bit(len(x), y) * bit(len(x) + 1, y)"
    assert classify(ode(rhs, init="y"), "g").family == "PODE_STRICT"
    assert classify(ode(rhs, init="y", extra="bool01;"), "g").family == "KK_ACC2"


def test_explicit_definition_joins_callees():
    p = stdlib_get("bitp").program
    r = classify(p, "bitp")
    assert (r.family, r.cls) == ("COMPOSITION", "FAC0")
    p2 = parse_program("fun g(x, y) = x * y;")
    assert classify(p2, "g").cls == "FTC0"


def test_report_renders():
    r = classify(stdlib_get("parity").program, "parity")
    assert r.to_text().startswith("parity: B0ODE -> FACC2")
    rec = r.to_record()
    assert rec["family"] == "B0ODE" and rec["class"] == "FACC2"


# -- properties ----------------------------------------------------------------


def _ode_defns():
    out = []
    for name in stdlib_list():
        p = stdlib_get(name).program
        out += [(p, d) for d in p if d.is_ode]
    return out


ODE_DEFNS = _ode_defns()


def _map(e, fn):
    """Rebuild ``e`` bottom-up, applying ``fn`` to every node."""
    kids = e.children()
    if kids:
        new = [_map(k, fn) for k in kids]
        e = type(e)(e.fun, tuple(new)) if isinstance(e, Call) else type(e)(*new)
    return fn(e)


def _rename(d, mapping):
    def fn(n):
        return Var(mapping[n.name]) if isinstance(n, Var) else n

    ode = d.body
    body = Ode(ode.along, _map(ode.init, fn), _map(ode.rhs, fn), ode.annotations)
    return Defn(d.name, tuple(mapping[q] for q in d.params), body)


def _commute(e, rng):
    def fn(n):
        if isinstance(n, (Add, Mul)) and rng.random() < 0.5:
            return type(n)(n.right, n.left)
        return n

    return _map(e, fn)


@pytest.mark.parametrize("p, d", ODE_DEFNS, ids=lambda v: getattr(v, "name", ""))
def test_classify_stable_under_renaming_and_reordering(p, d):
    want = classify(p, d.name)
    renamed = _rename(d, {q: f"v{i}" for i, q in enumerate(d.params)})
    assert classify(p.replace(renamed), d.name).family == want.family
    rng = random.Random(d.name)
    for _ in range(5):
        shuffled = Defn(d.name, d.params, Ode(d.body.along, d.body.init, _commute(d.body.rhs, rng), d.body.annotations))
        assert classify(p.replace(shuffled), d.name).family == want.family


def test_decomposition_rebuilds_rhs():
    rng = random.Random(3)
    checked = 0
    known = [(p, d) for p, d in ODE_DEFNS if classify(p, d.name).family != "UNKNOWN"]
    per = 10_000 // len(known) + 1
    for p, d in known:
        dec = decompose_linear(d.body.rhs)
        assert dec
        rebuilt = dec.rebuild()

        def call(name, args, p=p):
            return eval_naive(p, name, args)

        for _ in range(per):
            env = {q: rng.choice((0, 1, 3, rng.getrandbits(12))) for q in d.params}
            me = rng.randint(-20, 20)
            try:
                want = eval_expr(d.body.rhs, env, me, call=call)
            except EvalError:
                continue
            assert eval_expr(rebuilt, env, me, call=call) == want
            checked += 1
    assert checked >= 10_000


def test_general_b_keeps_ftc0():
    p = stdlib_get("bcount").program
    d = p["bcount"]
    general = Defn(d.name, d.params, Ode("L", d.body.init, parse_expr("x * y + sg(y - x) * 3"), frozenset()))
    r = classify(p.replace(general), "bcount")
    assert (r.family, r.cls) == ("PODE_STRICT", "FTC0")


@settings(max_examples=50)
@given(st.sampled_from([(p, d) for p, d in ODE_DEFNS if classify(p, d.name).family == "B0ODE"]))
def test_bare_self_reference_demotes_b0ode(pd):
    p, d = pd
    worse = Defn(d.name, d.params, Ode(d.body.along, d.body.init, Add(d.body.rhs, SelfRef()), d.body.annotations))
    r = classify(p.replace(worse), d.name)
    assert r.family in ("FP_LINEAR", "UNKNOWN")
    assert r.cls != "FACC2"
