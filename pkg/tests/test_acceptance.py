"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line; pytest prints them in an
"acceptance criteria" section at the end, and running this file directly
prints them as they finish.
"""

import functools
import random
import subprocess
import sys
import time

from lode.basis import len_
from lode.circuit import (
    BACKENDS,
    Circuit,
    Gate,
    circ_eval_batch,
    compile_circuit,
    depth,
    deserialize,
    histogram,
    serialize,
    validate,
)
from lode.expr import SELF, Add, Const, Cosg, Div2, Mul, SelfRef, Sg, Sub, Var, degree
from lode.interp import GuardError, eval_fast, eval_naive, trace
from lode.schema import STRICT_FAMILIES, Defn, Ode, classify
from lode.stdlib import LODE_DIR, stdlib_get, stdlib_list
from lode.syntax import format_program, load_source, parse_expr, parse_program
from lode.verify import (
    CRN_INSTANCES,
    FOURBRN_INSTANCES,
    check_circuit,
    check_closed,
    check_fast_vs_naive,
    depth_growth,
    oracle,
)

RESULTS = {}


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                RESULTS[number] = f"FAIL criterion {number} ({title}): {exc!s:.200}"
                print(RESULTS[number])
                raise
            RESULTS[number] = f"PASS criterion {number} ({title}): {detail} [{time.perf_counter() - t0:.1f}s]"
            print(RESULTS[number])

        return run

    return wrap


@criterion(1, "evaluator coherence")
def test_evaluator_coherence():
    t0 = time.perf_counter()
    cases = closed = 0
    for name in stdlib_list():
        p = stdlib_get(name).program
        rep = check_fast_vs_naive(p, name, x_bound=4096, y_samples=64, seed=2024)
        assert rep.passed, rep.to_text()
        cases += rep.cases
        if classify(p, name).family in STRICT_FAMILIES:
            rep = check_closed(p, name, x_bound=4096, y_samples=64, seed=2024)
            assert rep.passed, rep.to_text()
            closed += 1
    seconds = time.perf_counter() - t0
    assert seconds < 60, f"took {seconds:.1f}s"
    return f"14 entries, {cases} fast/naive cases, closed form on {closed} strict entries"


@criterion(2, "paper-example correctness")
def test_paper_examples():
    parity = stdlib_get("parity").program
    bcount = stdlib_get("bcount").program
    for x in range(1 << 12):
        assert eval_fast(parity, "parity", [x, x]) == oracle("parity", (x,)), x
        assert eval_fast(bcount, "bcount", [x, x]) == oracle("popcount", (x,)), x
    rsh = stdlib_get("rsh").program
    for x in range(1 << 10):
        for y in range(1 << 10):
            assert eval_fast(rsh, "rsh", [x, y]) == oracle("shift", (x, y)), (x, y)
    crn = stdlib_get("crn").program
    for inst in CRN_INSTANCES:
        for x in range(1 << 10):
            for w in (0, 1, 2, 3, 5, 1023):
                assert eval_fast(crn, inst, [x, x, w]) == oracle("crn_direct", (x, w), inst), (inst, x, w)
    fourbrn = stdlib_get("fourbrn").program
    for inst in FOURBRN_INSTANCES:
        for x in range(1 << 10):
            assert eval_fast(fourbrn, inst, [x, x]) == oracle("fourbrn_direct", (x,), inst), (inst, x)
    return "parity, bcount, rsh, 3 crn and 3 fourbrn instances match their oracles"


@criterion(3, "classification fidelity")
def test_classification():
    hits = 0
    for name in stdlib_list():
        e = stdlib_get(name)
        r = classify(e.program, name)
        assert (r.family, r.cls) == (e.family, e.cls), name
        hits += 1
    demoted = []
    for name in stdlib_list():
        p = stdlib_get(name).program
        for d in p:
            if d.is_ode and classify(p, d.name).family == "B0ODE":
                rhs = Add(d.body.rhs, SelfRef())
                worse = p.replace(Defn(d.name, d.params, Ode(d.body.along, d.body.init, rhs, d.body.annotations)))
                r = classify(worse, d.name)
                assert r.family in ("FP_LINEAR", "UNKNOWN") and r.cls != "FACC2", r
                demoted.append(r.family)
    assert demoted
    return f"{hits}/14 entries, B0ODE + bare f -> {','.join(demoted)}"


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.2:
            return Const(rng.randint(0, 5))
        if r < 0.3:
            return SelfRef()
        return Var(rng.choice(("x1", "x2", "x3", "y")))
    kind = rng.randrange(6)
    if kind == 0:
        return Add(_random_expr(rng, depth - 1), _random_expr(rng, depth - 1))
    if kind == 1:
        return Sub(_random_expr(rng, depth - 1), _random_expr(rng, depth - 1))
    if kind == 2:
        return Mul(_random_expr(rng, depth - 1), _random_expr(rng, depth - 1))
    if kind == 3:
        return Div2(_random_expr(rng, depth - 1))
    if kind == 4:
        return Sg(_random_expr(rng, depth - 1))
    return Cosg(_random_expr(rng, depth - 1))


@criterion(4, "degree calculus")
def test_degree():
    p = parse_expr("3 * x1 * x3 + 2 * x2 * x3")
    q = parse_expr("x1 * sg((x1 - x3) * x2) + x2 * x2 * x2")
    assert degree({"x1", "x2", "x3"}, p) == 2
    assert [degree({v}, p) for v in ("x1", "x2", "x3")] == [1, 1, 1]
    assert degree({"x1"}, q) == 1
    assert degree({"x2"}, q) != 1
    assert degree({"x3"}, q) == 0
    rng = random.Random(4)
    universe = ["x1", "x2", "x3", "y", SELF]
    checks = 0
    while checks < 10_000:
        a, b = _random_expr(rng, 4), _random_expr(rng, 4)
        vs = set(rng.sample(universe, rng.randint(1, len(universe))))
        da, db = degree(vs, a), degree(vs, b)
        rule = checks % 3
        if rule == 0:
            assert degree(vs, Add(a, b)) == max(da, db)
        elif rule == 1:
            assert degree(vs, Mul(a, b)) == da + db
        else:
            assert degree(vs, Sg(a)) == 0
        checks += 1
    return "Example 1 values reproduced, 10000 structural checks"


MAIN_COMPILED = ["parity", "bcount", "bsearch", "kk_mod2", "logitadd", "concat1", "fourbrn"]


@criterion(5, "circuit/interpreter agreement")
def test_circuit_agreement():
    t0 = time.perf_counter()
    cases = 0
    for name in MAIN_COMPILED:
        p = stdlib_get(name).program
        for n in list(range(1, 13)) + [16, 20]:
            rep = check_circuit(p, name, n, exhaustive_bits=12, samples=10_000, seed=n)
            assert rep.passed, rep.to_text()
            cases += rep.cases
    seconds = time.perf_counter() - t0
    assert seconds < 300, f"took {seconds:.1f}s"
    return f"7 entries, n=1..12 exhaustive and n=16,20 sampled, {cases} cases"


CONSTANT_DEPTH = [n for n in stdlib_list() if stdlib_get(n).cls in ("FAC0", "FACC2", "FTC0")]
STEP_BOUND = 12


@criterion(6, "depth witnesses")
def test_depth_witnesses():
    flat, skipped = [], []
    for name in CONSTANT_DEPTH:
        p = stdlib_get(name).program
        if classify(p, name).family in ("L2_NONSTRICT", "L2_LINEAR"):
            skipped.append(name)
            continue
        rep = depth_growth(p, name, [4, 8, 16, 32, 64])
        assert rep.shape == "constant" and rep.flat and rep.passed, rep.to_text()
        flat.append(f"{name}={rep.depths[0]}")
    steps = []
    for name in ("concat1", "fourbrn"):
        rep = depth_growth(stdlib_get(name).program, name, [8, 16, 32, 64])
        assert rep.shape == "log"
        assert all(s <= STEP_BOUND for s in rep.doubling_steps()), rep.to_text()
        steps.append(f"{name} steps {rep.doubling_steps()}")
    for name in CONSTANT_DEPTH + ["concat1", "fourbrn"]:
        p = stdlib_get(name).program
        if name in skipped:
            continue
        for backend, (mode, ops, accepts) in BACKENDS.items():
            if classify(p, name).cls not in accepts:
                continue
            c = compile_circuit(p, name, 16, backend=backend)
            assert validate(c, mode, ops) == [], (name, backend)
            h = histogram(c)
            assert "XOR" not in h or backend == "acc2"
            assert "TH" not in h or backend == "tc0"
            if backend == "nc1":
                assert all(len(g.args) <= 2 for g in c.gates)
    return f"flat: {', '.join(flat)}; {'; '.join(steps)} (C={STEP_BOUND}); not compiled: {', '.join(skipped)}"


@criterion(7, "jump-evaluator scaling")
def test_jump_scaling():
    p = stdlib_get("parity").program
    x = 2**1000 - 1
    t0 = time.perf_counter()
    value = eval_fast(p, "parity", [x, x])
    seconds = time.perf_counter() - t0
    assert value == oracle("parity", (x,))
    assert seconds < 1.0, f"{seconds:.3f}s"
    assert len(trace(p, "parity", [x, x]).steps) == len_(x) == 1000
    try:
        eval_naive(p, "parity", [x, x])
    except GuardError:
        pass
    else:
        raise AssertionError("naive evaluator was not guarded")
    return f"1000 steps in {seconds * 1000:.1f} ms, naive guarded"


def _random_circuit(rng):
    mode = rng.choice(("bounded2", "unbounded"))
    n = rng.randint(1, 6)
    gates = [Gate("IN", i) for i in range(n)] + [Gate("CONST", rng.randint(0, 1))]
    for _ in range(rng.randint(0, 30)):
        op = rng.choice(("NOT", "AND", "OR", "XOR", "TH") if mode == "unbounded" else ("NOT", "AND", "OR", "XOR"))
        if op == "NOT":
            args = (rng.randrange(len(gates)),)
        else:
            args = tuple(rng.randrange(len(gates)) for _ in range(rng.randint(1, 2 if mode == "bounded2" else 6)))
        gates.append(Gate(op, rng.randint(0, len(args)) if op == "TH" else None, args))
    return Circuit(n, gates, [rng.randrange(len(gates)) for _ in range(rng.randint(1, 3))], mode)


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "lode", *argv], capture_output=True, text=True)


@criterion(8, "format stability")
def test_format_stability(tmp_path):
    rng = random.Random(8)
    for _ in range(100):
        c = _random_circuit(rng)
        data = serialize(c)
        back = deserialize(data)
        assert back == c and serialize(back) == data
        probe = [rng.getrandbits(c.n_inputs) for _ in range(8)]
        assert circ_eval_batch(back, probe) == circ_eval_batch(c, probe)
    files = sorted(LODE_DIR.glob("*.lode"))
    for path in files:
        prog = load_source(path).program
        text = format_program(prog)
        assert parse_program(text) == prog and format_program(parse_program(text)) == text, path.name
    parity = str(stdlib_get("parity").path)
    circ = str(tmp_path / "p8.circ")
    bad = tmp_path / "bad.lode"
    bad.write_text("fun g(x) = x +;\n")
    runs = [
        (("eval", parity, "--fun", "parity", "--args", "11,11"), 0, "1\n"),
        (("compile", parity, "--fun", "parity", "--n", "8", "--out", circ), 0, None),
        (("simulate", "--circ", circ, "--input", "00101101"), 0, "0\n"),
        (("eval", parity, "--fun", "parity", "--args", "11,11", "--mode", "closed"), 1, None),
        (("eval", parity, "--fun", "parity", "--args", "11"), 2, None),
        (("check", str(bad)), 3, None),
    ]
    for argv, code, out in runs:
        proc = _cli(*argv)
        assert proc.returncode == code, (argv, proc.returncode, proc.stderr)
        if out is not None:
            assert proc.stdout == out, (argv, proc.stdout)
    return f"100 circuits, {len(files)} .lode files, {len(runs)} CLI invocations"


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    tests = [
        test_evaluator_coherence,
        test_paper_examples,
        test_classification,
        test_degree,
        test_circuit_agreement,
        test_depth_witnesses,
        test_jump_scaling,
    ]
    failed = 0
    for t in tests:
        try:
            t()
        except Exception:
            failed += 1
    with tempfile.TemporaryDirectory() as tmp:
        try:
            test_format_stability(Path(tmp))
        except Exception:
            failed += 1
    sys.exit(1 if failed else 0)
