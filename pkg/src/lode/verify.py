"""Reference oracles and the checks that compare evaluators, circuits and classes.

The oracles below are written straight from the recursions they encode and
use nothing from the interpreter or the circuit compiler.
"""

import json
import math
import random
import statistics
import time
from dataclasses import dataclass, field

from .basis import alpha
from .circuit import CompileError, circ_eval_batch, compile_circuit, depth, histogram, size
from .expr import EvalError
from .interp import eval_closed_strict, eval_fast, naive_values
from .schema import STRICT_FAMILIES, classify

# -- oracles ---------------------------------------------------------------------


def _bits_msb_first(x):
    """Binary digits of ``x`` from the top, each with the prefix before it."""
    out = []
    prefix = 0
    for ch in bin(x)[2:] if x else "":
        out.append((prefix, int(ch)))
        prefix = 2 * prefix + int(ch)
    return out


def _bit(i, w):
    return (w >> i) & 1 if i >= 0 else 0


# CRN instances: (h0, h1, g) as plain functions of the prefix and w.
CRN_INSTANCES = {
    "crn": (
        lambda p, w: _bit(p.bit_length(), w),
        lambda p, w: 1 - _bit(p.bit_length(), w),
        lambda w: 1,
    ),
    "crn_copy": (lambda p, w: 0, lambda p, w: 1, lambda w: 0),
    "crn_mix": (
        lambda p, w: 1,
        lambda p, w: (1 if p.bit_length() > 2 else 0) * _bit(0, w),
        lambda w: _bit(1, w),
    ),
}

# 4-BRN instances: (h0, h1, g); h_i gets the length of the prefix and the value so far.
FOURBRN_INSTANCES = {
    "fourbrn": (lambda t, v: (v + 4) // 2, lambda t, v: v // 2 + 2 * (t & 1), 0),
    "fourbrn_b": (
        lambda t, v: v + 1 if v <= 3 else 0,
        lambda t, v: _bit(1, v) + 3 * _bit(2, v) + (t & 1),
        3,
    ),
    "fourbrn_c": (
        lambda t, v: 4 if v > 0 else 0,
        lambda t, v: (1 if v <= 1 else 0) + 2 * (t.bit_length() & 1),
        1,
    ),
}


def _crn_direct(x, w, instance="crn"):
    """f(0) = g(w); f(2p + i) = 2 f(p) + h_i(p, w)."""
    h0, h1, g = CRN_INSTANCES[instance]
    f = g(w)
    for prefix, i in _bits_msb_first(x):
        f = 2 * f + (h1 if i else h0)(prefix, w)
    return f


def _fourbrn_direct(x, instance="fourbrn"):
    """f(0) = g; f(2p + i) = h_i(len(p), f(p)), values kept in 0..4."""
    h0, h1, g = FOURBRN_INSTANCES[instance]
    f = g
    for prefix, i in _bits_msb_first(x):
        f = (h1 if i else h0)(prefix.bit_length(), f)
        if not 0 <= f <= 4:
            f = 0
    return f


def _logadd_direct(x, y):
    """(y mod 2) plus, for each u below len(len(x)), y // 2 plus bit 2**u - 1 of y."""
    total = y & 1
    for u in range(x.bit_length().bit_length()):
        total += y // 2 + ((y >> ((1 << u) - 1)) & 1)
    return total


ORACLES = {
    "popcount": lambda x: bin(x).count("1"),
    "parity": lambda x: bin(x).count("1") % 2,
    "shift": lambda x, y: y >> x.bit_length(),
    "crn_direct": _crn_direct,
    "fourbrn_direct": _fourbrn_direct,
    "logadd_direct": _logadd_direct,
}


def oracle(name, args, instance=None):
    """Reference value of oracle ``name`` on ``args``."""
    if name not in ORACLES:
        raise KeyError(f"unknown oracle {name!r}")
    if instance is not None:
        return ORACLES[name](*args, instance=instance)
    return ORACLES[name](*args)


# -- reports ---------------------------------------------------------------------


@dataclass
class CheckReport:
    name: str
    population: str
    cases: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0
    seed: int = None
    notes: list = field(default_factory=list)
    max_failures: int = 20
    omitted: int = 0

    @property
    def passed(self):
        return not self.failures and self.cases > 0

    def fail(self, inputs, expected, got):
        if len(self.failures) < self.max_failures:
            self.failures.append({"inputs": list(inputs), "expected": expected, "got": got})
        else:
            self.omitted += 1

    def to_text(self):
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{status} {self.name}: {self.cases} cases ({self.population}), seed={self.seed}, {self.seconds:.2f}s"]
        for fl in self.failures:
            lines.append(f"  inputs={fl['inputs']} expected={fl['expected']} got={fl['got']}")
        if self.omitted:
            lines.append(f"  ... {self.omitted} more failures")
        lines += [f"  note: {n}" for n in dict.fromkeys(self.notes)]
        return "\n".join(lines)

    def to_record(self):
        return {
            "check": self.name,
            "population": self.population,
            "cases": self.cases,
            "failures": self.failures,
            "omitted": self.omitted,
            "seed": self.seed,
            "passed": self.passed,
            "seconds": round(self.seconds, 3),
            "notes": list(dict.fromkeys(self.notes)),
        }

    def to_json(self):
        return json.dumps(self.to_record(), default=str)


def _outcome(fn, *args):
    try:
        return fn(*args)
    except EvalError as exc:
        return f"error: {type(exc).__name__}"


# -- sampling --------------------------------------------------------------------


def corner_values(bits):
    """All-zero, all-one, single-bit and alternating patterns of ``bits`` bits."""
    ones = (1 << bits) - 1
    alt = int("01" * bits, 2) & ones
    out = [0, ones, alt, alt ^ ones]
    out += [1 << i for i in range(bits)]
    return list(dict.fromkeys(out))


def sample_args(rng, count, params, bits):
    """``count`` tuples for ``params`` parameters: corners first, then uniform bits."""
    corners = corner_values(bits)
    out = []
    for c in corners:
        out.append(tuple(c for _ in range(params)))
    for i, c in enumerate(corners):
        out.append(tuple(c if j == i % max(params, 1) else rng.getrandbits(bits) for j in range(params)))
    out = list(dict.fromkeys(out))[: count // 2]
    while len(out) < count:
        out.append(tuple(rng.getrandbits(bits) for _ in range(params)))
    return out[:count]


# -- evaluator checks ------------------------------------------------------------


def check_fast_vs_naive(p, fun, x_bound=4096, y_samples=64, seed=0, y_bits=16):
    """``eval_fast`` against the step-by-step evaluator, every x up to ``x_bound``."""
    t0 = time.perf_counter()
    rep = CheckReport(f"fast-vs-naive {fun}", f"x<={x_bound}, {y_samples} sampled y", seed=seed)
    rng = random.Random(seed)
    arity = len(p[fun].params) - 1
    for ys in sample_args(rng, y_samples, arity, y_bits):
        try:
            naive = naive_values(p, fun, ys, x_bound)
        except EvalError:
            naive = None
        for x in range(x_bound + 1):
            want = naive[x] if naive is not None else _outcome(_naive_one, p, fun, x, ys)
            got = _outcome(eval_fast, p, fun, [x, *ys])
            rep.cases += 1
            if got != want:
                rep.fail([x, *ys], want, got)
    rep.seconds = time.perf_counter() - t0
    return rep


def _naive_one(p, fun, x, ys):
    return naive_values(p, fun, ys, x)[x]


def check_closed(p, fun, x_bound=4096, y_samples=64, seed=0, y_bits=16):
    """Closed-form solution against ``eval_fast`` for strict families."""
    t0 = time.perf_counter()
    rep = CheckReport(f"closed-form {fun}", f"x<={x_bound}, {y_samples} sampled y", seed=seed)
    rng = random.Random(seed)
    arity = len(p[fun].params) - 1
    # The value only changes at jump points, so checking x in {0} and each
    # alpha(u) covers every distinct case up to the bound.
    xs = [0] + [alpha(u) for u in range(1, x_bound.bit_length() + 1) if alpha(u) <= x_bound]
    for ys in sample_args(rng, y_samples, arity, y_bits):
        for x in xs:
            want = _outcome(eval_fast, p, fun, [x, *ys])
            got = _outcome(eval_closed_strict, p, fun, [x, *ys])
            rep.cases += 1
            if got != want:
                rep.fail([x, *ys], want, got)
    rep.seconds = time.perf_counter() - t0
    return rep


def check_class(p, fun, family, cls):
    t0 = time.perf_counter()
    rep = CheckReport(f"class {fun}", f"expected {family}/{cls}")
    r = classify(p, fun)
    rep.cases = 1
    if (r.family, r.cls) != (family, cls):
        rep.fail([fun], f"{family}/{cls}", f"{r.family}/{r.cls}")
    rep.seconds = time.perf_counter() - t0
    return rep


def check_cases(name, population, cases, expected, actual, seed=None):
    """Compare two functions over an iterable of argument tuples."""
    t0 = time.perf_counter()
    rep = CheckReport(name, population, seed=seed)
    for args in cases:
        want = expected(*args)
        got = _outcome(actual, *args)
        rep.cases += 1
        if got != want:
            rep.fail(args, want, got)
    rep.seconds = time.perf_counter() - t0
    return rep


def check_oracle(p, fun, oracle_name, cases, instance=None):
    """``fun`` against an oracle; ``cases`` are the oracle's argument tuples.

    The function's own arguments follow from the oracle: one-argument
    oracles read ``fun(x, x)``, ``crn_direct`` reads ``fun(x, x, w)`` and the
    rest pass their arguments through.
    """
    if oracle_name in ("popcount", "parity", "fourbrn_direct"):
        def to_args(x):
            return [x, x]
    elif oracle_name == "crn_direct":
        def to_args(x, w):
            return [x, x, w]
    else:
        def to_args(*a):
            return list(a)

    def expected(*a):
        return oracle(oracle_name, a, instance)

    def actual(*a):
        return eval_fast(p, fun, to_args(*a))

    return check_cases(f"oracle {oracle_name} {fun}", "given cases", cases, expected, actual)


# -- circuits --------------------------------------------------------------------


def _decode(c, out):
    w = len(c.outputs)
    if c.meta.get("signed") and w and out >> (w - 1):
        return out - (1 << w)
    return out


def check_circuit(p, fun, n, exhaustive_bits=12, samples=10_000, seed=0, backend=None, width=64):
    """Compiled circuit against ``eval_fast`` on all inputs, or on a seeded sample."""
    t0 = time.perf_counter()
    c = compile_circuit(p, fun, n, backend=backend, width=width)
    arity = len(p[fun].params) - 1
    total = n * arity
    if total <= exhaustive_bits:
        inputs = list(range(1 << total))
        pop = f"all {len(inputs)} inputs"
    else:
        rng = random.Random(seed)
        inputs = [_pack(a, n) for a in sample_args(rng, samples, arity, n)]
        pop = f"{samples} sampled inputs"
    rep = CheckReport(f"circuit {fun} n={n} ({c.meta['backend']})", pop, seed=seed)
    rep.notes += c.meta.get("notes", [])
    if any(g.op == "MACRO" for g in c.gates):
        rep.notes.append("circuit contains MACRO gates and cannot be evaluated")
        rep.seconds = time.perf_counter() - t0
        return rep
    outs = circ_eval_batch(c, inputs)
    x = alpha(n)
    mask = (1 << n) - 1
    overflow = 0
    for i, out in zip(inputs, outs):
        ys = [(i >> (j * n)) & mask for j in range(arity)]
        want = _outcome(eval_fast, p, fun, [x, *ys])
        got = _decode(c, out)
        rep.cases += 1
        if got != want:
            if isinstance(want, int) and not c.meta["lo"] <= want <= c.meta["hi"]:
                overflow += 1
            rep.fail(ys, want, got)
    if overflow:
        rep.notes.append(f"{overflow} values overflow the {len(c.outputs)}-bit output")
    rep.seconds = time.perf_counter() - t0
    return rep


def _pack(args, n):
    return sum(a << (j * n) for j, a in enumerate(args))


@dataclass
class DepthReport:
    fun: str
    backend: str
    rows: list  # (n, depth, size, histogram)
    shape: str  # "constant" or "log"
    step_bound: int = 12

    @property
    def depths(self):
        return [r[1] for r in self.rows]

    @property
    def macros(self):
        return any("MACRO" in r[3] for r in self.rows)

    @property
    def flat(self):
        return len(set(self.depths)) == 1

    def doubling_steps(self):
        """``depth(2n) - depth(n)`` for each consecutive doubling among the sizes."""
        by_n = {r[0]: r[1] for r in self.rows}
        return [by_n[2 * n] - by_n[n] for n in sorted(by_n) if 2 * n in by_n]

    def log_fit(self):
        """``(c, d)`` with slope from least squares and ``d`` the smallest offset covering every row."""
        xs = [math.log2(r[0]) for r in self.rows]
        ys = self.depths
        if len(set(xs)) < 2:
            return 0.0, float(max(ys))
        c, _ = statistics.linear_regression(xs, ys)
        d = max(y - c * x for x, y in zip(xs, ys))
        return c, d

    @property
    def passed(self):
        if self.macros:
            return False
        if self.shape == "constant":
            return self.flat
        return all(s <= self.step_bound for s in self.doubling_steps())

    def to_text(self):
        lines = [f"{'n':>4} {'depth':>6} {'size':>8}  gates"]
        for n, d, s, h in self.rows:
            hist = " ".join(f"{k}:{v}" for k, v in sorted(h.items()))
            lines.append(f"{n:>4} {d:>6} {s:>8}  {hist}")
        if self.shape == "constant":
            verdict = "flat" if self.flat else "NOT flat"
        else:
            c, d = self.log_fit()
            verdict = f"doubling steps {self.doubling_steps()}, depth <= {c:.2f}*log2(n) + {d:.2f}"
        if self.macros:
            verdict += "; contains MACRO gates"
        lines.append(f"{'PASS' if self.passed else 'FAIL'} {self.fun} ({self.backend}): {verdict}")
        return "\n".join(lines)

    def to_record(self):
        return {
            "check": f"depth {self.fun}",
            "backend": self.backend,
            "shape": self.shape,
            "rows": [{"n": n, "depth": d, "size": s, "gates": h} for n, d, s, h in self.rows],
            "passed": self.passed,
        }


def depth_growth(p, fun, sizes, backend=None, width=64):
    rows = []
    used = None
    for n in sizes:
        c = compile_circuit(p, fun, n, backend=backend, width=width)
        used = c.meta["backend"]
        rows.append((n, depth(c), size(c), histogram(c)))
    shape = "log" if used == "nc1" else "constant"
    return DepthReport(fun, used, rows, shape)


# -- whole programs --------------------------------------------------------------


def verify_program(p, funs=None, seed=0, exhaustive_bits=10, x_bound=512, y_samples=16, expectations=None):
    """Every applicable check for the ODE functions of ``p``.

    ``expectations`` maps function names to ``(family, class)`` pairs.
    Returns a list of CheckReport and DepthReport objects.
    """
    reports = []
    expectations = expectations or {}
    names = funs or [d.name for d in p if d.is_ode]
    for fun in names:
        if fun in expectations:
            reports.append(check_class(p, fun, *expectations[fun]))
        if not p[fun].is_ode:
            continue
        reports.append(check_fast_vs_naive(p, fun, x_bound, y_samples, seed))
        report = classify(p, fun)
        if report.family in STRICT_FAMILIES:
            reports.append(check_closed(p, fun, x_bound, y_samples, seed))
        try:
            compile_circuit(p, fun, 2)
        except CompileError:
            continue
        arity = len(p[fun].params) - 1
        n = max(1, exhaustive_bits // max(arity, 1))
        reports.append(check_circuit(p, fun, n, exhaustive_bits, seed=seed))
        reports.append(depth_growth(p, fun, [4, 8, 16]))
    return reports
