"""Exact evaluators for programs.

Three routes compute the same values:

* :func:`eval_naive` walks the step recurrence ``t = 0 .. x-1`` with a tree
  interpreter.  It is the oracle and refuses large ``x``.
* :func:`eval_fast` only visits the jump points ``alpha(u)`` (or
  ``alpha2(u)``), so it takes ``len(x)`` (or ``len2(x)``) steps.  Right-hand
  sides are translated to Python source once per program.
* :func:`eval_closed_strict` evaluates the sum-of-products solution of a
  strict linear definition.

Annotations (``nonneg``, ``bool01``) are checked by every route:
``nonneg`` requires the initial value, the ``B`` part of each step and every
intermediate value to be nonnegative; ``bool01`` requires the initial value
and each ``B`` to be 0 or 1.
"""

from dataclasses import dataclass, field

from . import basis
from .expr import (
    Add,
    Bit,
    Call,
    Const,
    Cosg,
    Div2,
    EvalError,
    Len,
    Len2,
    Mul,
    SelfRef,
    Sg,
    Smash,
    Sub,
    Var,
    eval_expr,
)
from .schema import STRICT_FAMILIES, classify, decompose_linear

DEFAULT_NAIVE_GUARD = 1 << 20


class AssertionViolation(EvalError):
    def __init__(self, fun, annotation, step, value):
        super().__init__(
            f"{fun}: {annotation} annotation violated at step {step} (value {value})"
        )
        self.fun = fun
        self.annotation = annotation
        self.step = step
        self.value = value


class GuardError(EvalError):
    """The naive evaluator refused an input that is too large."""


@dataclass
class Step:
    u: int
    jump_point: int
    f_before: int
    f_after: int


@dataclass
class EvalTrace:
    along: str
    steps: list = field(default_factory=list)
    assertions: list = field(default_factory=list)

    @property
    def value(self):
        return self.steps[-1].f_after if self.steps else self.initial

    initial: int = 0

    def to_text(self):
        lines = [f"along {self.along}, {len(self.steps)} steps, f(0) = {self.initial}"]
        for s in self.steps:
            lines.append(f"  u={s.u} at {s.jump_point}: {s.f_before} -> {s.f_after}")
        for ann, where, ok in self.assertions:
            lines.append(f"  assert {ann} {where}: {'ok' if ok else 'VIOLATED'}")
        return "\n".join(lines)


def _b_part(p, d):
    """Expression whose value the annotations constrain at each step."""
    key = ("b_part", d.name)
    cache = p._cache
    if key not in cache:
        dec = decompose_linear(d.body.rhs)
        cache[key] = dec.B if dec and dec.special == "none" else d.body.rhs
    return cache[key]


def _check_init(fun, annotations, g):
    if "nonneg" in annotations and g < 0:
        raise AssertionViolation(fun, "nonneg", "init", g)
    if "bool01" in annotations and g not in (0, 1):
        raise AssertionViolation(fun, "bool01", "init", g)


def _check_step(fun, annotations, step, b, f_after):
    if "nonneg" in annotations:
        if b < 0:
            raise AssertionViolation(fun, "nonneg", step, b)
        if f_after < 0:
            raise AssertionViolation(fun, "nonneg", step, f_after)
    if "bool01" in annotations and b not in (0, 1):
        raise AssertionViolation(fun, "bool01", step, b)


def _lookup(p, fun, args):
    try:
        d = p[fun]
    except KeyError:
        raise EvalError(f"call to undefined function {fun!r}") from None
    if len(args) != len(d.params):
        raise EvalError(f"{fun} expects {len(d.params)} arguments, got {len(args)}")
    return d


# -- naive route ---------------------------------------------------------------


class _Naive:
    def __init__(self, p, guard):
        self.p = p
        self.guard = guard
        self.memo = {}
        self.prefixes = {}

    def call(self, fun, args):
        key = (fun, tuple(args))
        if key not in self.memo:
            d = _lookup(self.p, fun, args)
            if d.is_ode:
                self.memo[key] = self.prefix(d, args[0], args[1:])[args[0]]
            else:
                env = dict(zip(d.params, args))
                self.memo[key] = eval_expr(d.body, env, prog=self.p, call=self.call)
        return self.memo[key]

    def prefix(self, d, x, ys):
        """Values f(0..m) for some m >= x, grown by doubling and kept per ``ys``."""
        key = (d.name, tuple(ys))
        vals = self.prefixes.get(key)
        if vals is None or len(vals) <= x:
            m = max(x, 2 * len(vals) if vals else 0)
            if d.body.annotations:
                # running past x could report a violation that x never reaches
                m = x
            elif self.guard is not None:
                m = max(x, min(m, self.guard))
            vals = self.prefixes[key] = self.run(d, [m, *ys], keep=True)
        return vals

    def run(self, d, args, keep=False):
        """Values f(t) for t = 0..x (only the last one unless ``keep``)."""
        x, ys = args[0], list(args[1:])
        if x < 0:
            raise EvalError(f"{d.name}: negative derivation argument {x}")
        if self.guard is not None and x > self.guard:
            raise GuardError(f"{d.name}: x = {x} exceeds the naive guard {self.guard}")
        ode = d.body
        lam = basis.len2 if ode.along == "L2" else basis.len_
        env = dict(zip(d.params[1:], ys))
        f = eval_expr(ode.init, env, prog=self.p, call=self.call)
        ann = ode.annotations
        if ann:
            _check_init(d.name, ann, f)
            b_part = _b_part(self.p, d)
        out = [f]
        xname = d.params[0]
        prev = lam(0)
        for t in range(x):
            nxt = lam(t + 1)
            delta = nxt - prev
            prev = nxt
            if delta:
                # rhs is only needed when lambda moves; otherwise the product is 0
                env[xname] = t
                h = eval_expr(ode.rhs, env, self_value=f, prog=self.p, call=self.call)
                new = f + delta * h
                if ann:
                    b = eval_expr(b_part, env, self_value=f, prog=self.p, call=self.call)
                    _check_step(d.name, ann, t, b, new)
                f = new
            if keep:
                out.append(f)
        if not keep:
            out = [f]
        return out


def eval_naive(p, fun, args, guard=DEFAULT_NAIVE_GUARD):
    """Evaluate by the step recurrence f(t+1) = f(t) + (lam(t+1) - lam(t)) * rhs."""
    args = [int(a) for a in args]
    _lookup(p, fun, args)
    return _Naive(p, guard).call(fun, args)


def naive_values(p, fun, args, x_max, guard=DEFAULT_NAIVE_GUARD):
    """List of ``eval_naive(p, fun, [t] + args)`` for t = 0..x_max, in one pass."""
    d = _lookup(p, fun, [x_max] + list(args))
    naive = _Naive(p, guard)
    if not d.is_ode:
        return [naive.call(fun, [t, *args]) for t in range(x_max + 1)]
    return naive.run(d, [x_max] + list(args), keep=True)


# -- fast route ------------------------------------------------------------------


_FOLDABLE = {
    Add: lambda a, b: a + b,
    Sub: lambda a, b: a - b,
    Mul: lambda a, b: a * b,
    Div2: basis.div2,
    Sg: basis.sg,
    Cosg: basis.cosg,
    Len: basis.len_,
    Len2: basis.len2,
    Bit: basis.bit,
    Smash: basis.smash,
}

_INLINE_LIMIT = 400


def _size(e):
    return 1 + sum(_size(c) for c in e.children())


def _substitute(e, env):
    t = type(e)
    if t is Var:
        return env.get(e.name, e)
    if t in (Const, SelfRef):
        return e
    if t is Call:
        return Call(e.fun, tuple(_substitute(a, env) for a in e.args))
    if t is Bit:
        return Bit(_substitute(e.index, env), _substitute(e.value, env))
    return t(*(_substitute(c, env) for c in e.children()))


def _simplify(e, p, bodies):
    """Inline explicit callees and fold constant subterms.

    Folding never hides an error: a subterm whose evaluation raises is left
    alone and raises at run time.
    """
    t = type(e)
    if t in (Const, Var, SelfRef):
        return e
    kids = [_simplify(c, p, bodies) for c in e.children()]
    if t is Call:
        body = bodies.get(e.fun)
        if body is not None:
            d = p[e.fun]
            return _simplify(_substitute(body, dict(zip(d.params, kids))), p, {})
        return Call(e.fun, tuple(kids))
    if all(type(k) is Const for k in kids):
        try:
            return Const(_FOLDABLE[t](*(k.value for k in kids)))
        except ValueError:
            pass
    if t is Bit:
        return Bit(*kids)
    return t(*kids)


class _Emitter:
    """Python source for an expression, sharing repeated subterms via walrus temps."""

    def __init__(self, fnames):
        self.fnames = fnames
        self.counter = 0

    def emit(self, e):
        counts = {}
        self._count(e, counts)
        self.shared = {k for k, c in counts.items() if c > 1}
        self.names = {}
        return self._go(e)

    def _count(self, e, counts):
        if type(e) in (Const, Var, SelfRef):
            return
        counts[e] = counts.get(e, 0) + 1
        if counts[e] == 1:
            for c in e.children():
                self._count(c, counts)

    def _go(self, e):
        if e in self.names:
            return self.names[e]
        code = self._code(e)
        if e in self.shared:
            self.counter += 1
            name = f"_c{self.counter}"
            self.names[e] = name
            return f"({name} := {code})"
        return code

    def _code(self, e):
        t = type(e)
        go = self._go
        if t is Const:
            return repr(e.value)
        if t is Var:
            return "v_" + e.name
        if t is SelfRef:
            return "f"
        if t is Add:
            return f"({go(e.left)} + {go(e.right)})"
        if t is Sub:
            return f"({go(e.left)} - {go(e.right)})"
        if t is Mul:
            return f"({go(e.left)} * {go(e.right)})"
        if t is Div2:
            return f"({go(e.arg)} >> 1)"
        if t is Sg:
            return f"(1 if {go(e.arg)} > 0 else 0)"
        if t is Cosg:
            return f"(0 if {go(e.arg)} > 0 else 1)"
        if t is Len:
            return f"_len({go(e.arg)})"
        if t is Len2:
            return f"_len2({go(e.arg)})"
        if t is Bit:
            return f"_bit({go(e.index)}, {go(e.value)})"
        if t is Smash:
            return f"_smash({go(e.left)}, {go(e.right)})"
        if t is Call:
            if e.fun not in self.fnames:
                raise EvalError(f"call to undefined function {e.fun!r}")
            return f"{self.fnames[e.fun]}(" + ", ".join(go(a) for a in e.args) + ")"
        raise EvalError(f"unknown node {e!r}")


_STEP_CHECK = {
    "nonneg": "        if _b < 0 or f < 0: _check_step({name!r}, {ann!r}, _u, _b, f)",
    "bool01": "        if _b != 0 and _b != 1: _check_step({name!r}, {ann!r}, _u, _b, f)",
}


class _Compiled:
    """Python translations of every definition in a program."""

    def __init__(self, p):
        self.p = p
        self.fnames = {}
        self.bodies = {}
        em = _Emitter(self.fnames)
        lines = []
        for i, d in enumerate(p.defns):
            if d.name in self.fnames:
                continue
            simp = lambda e: _simplify(e, p, self.bodies)  # noqa: E731
            params = ", ".join("v_" + q for q in d.params)
            if not d.is_ode:
                body = simp(d.body)
                if _size(body) <= _INLINE_LIMIT:
                    self.bodies[d.name] = body
                lines += [f"def F{i}({params}):", f"    return {em.emit(body)}"]
                self.fnames[d.name] = f"F{i}"
                continue
            ode = d.body
            ys = ", ".join("v_" + q for q in d.params[1:])
            xv = "v_" + d.params[0]
            init = em.emit(simp(ode.init))
            rhs = em.emit(simp(ode.rhs))
            if ode.along == "L2":
                lam, jump = "_len2", "(1 << ((1 << _u) - 1)) - 1"
            else:
                lam, jump = "_len", "(1 << _u) - 1"
            lines += [f"def I{i}({ys}):", f"    return {init}"]
            lines += [f"def S{i}({params}, f):", f"    return {rhs}"]
            body = [
                f"def F{i}({params}):",
                f"    _n = {lam}({xv})",
                f"    f = {init}",
                "    for _u in range(_n):",
                f"        {xv} = {jump}",
            ]
            if ode.annotations:
                ann = ode.annotations
                b = em.emit(simp(_b_part(p, d)))
                lines += [f"def B{i}({params}, f):", f"    return {b}"]
                body.insert(3, f"    _check_init({d.name!r}, {ann!r}, f)")
                body += [f"        _b = {b}", f"        f = f + {rhs}"]
                body += [_STEP_CHECK[a].format(name=d.name, ann=ann) for a in sorted(ann)]
            else:
                body += [f"        f = f + {rhs}"]
            lines += body + ["    return f"]
            self.fnames[d.name] = f"F{i}"
        ns = {
            "_len": basis.len_,
            "_len2": basis.len2,
            "_bit": basis.bit,
            "_smash": basis.smash,
            "_check_init": _check_init,
            "_check_step": _check_step,
        }
        self.source = "\n".join(lines) + "\n"
        exec(compile(self.source, "<lode>", "exec"), ns)
        self.ns = ns

    def fn(self, name, prefix="F"):
        return self.ns[prefix + self.fnames[name][1:]]

    def expr_fn(self, params, e):
        """Python function of ``params`` (plus ``f``) computing ``e``."""
        args = ", ".join(["v_" + q for q in params] + ["f=None"])
        code = _Emitter(self.fnames).emit(_simplify(e, self.p, self.bodies))
        return eval(f"lambda {args}: {code}", self.ns)


def compiled(p):
    cache = p._cache
    if "compiled" not in cache:
        cache["compiled"] = _Compiled(p)
    return cache["compiled"]


def _guarded(fn, *args):
    try:
        return fn(*args)
    except ValueError as exc:
        raise EvalError(str(exc)) from None
    except RecursionError:
        raise EvalError("expression nesting too deep") from None


def eval_fast(p, fun, args):
    """Evaluate by jumping between the points where ``len`` (or ``len2``) changes."""
    args = [int(a) for a in args]
    d = _lookup(p, fun, args)
    if d.is_ode and args[0] < 0:
        raise EvalError(f"{fun}: negative derivation argument {args[0]}")
    return _guarded(compiled(p).fn(fun), *args)


def trace(p, fun, args):
    """Jump-by-jump record of a fast evaluation, including annotation checks."""
    args = [int(a) for a in args]
    d = _lookup(p, fun, args)
    if not d.is_ode:
        raise EvalError(f"{fun} is not defined by an ODE")
    c = compiled(p)
    x, ys = args[0], args[1:]
    if x < 0:
        raise EvalError(f"{fun}: negative derivation argument {x}")
    ode = d.body
    lam, jump = (basis.len2, basis.alpha2) if ode.along == "L2" else (basis.len_, basis.alpha)
    step = c.fn(fun, "S")
    f = _guarded(c.fn(fun, "I"), *ys)
    tr = EvalTrace(ode.along, initial=f)
    ann = sorted(ode.annotations)
    bfn = c.fn(fun, "B") if ann else None

    def log(a, where, ok, value):
        tr.assertions.append((a, where, ok))
        if not ok:
            raise AssertionViolation(fun, a, where, value)

    for a in ann:
        ok = f >= 0 if a == "nonneg" else f in (0, 1)
        log(a, "init", ok, f)
    for u in range(lam(x)):
        j = jump(u)
        new = f + _guarded(step, j, *ys, f)
        if ann:
            b = _guarded(bfn, j, *ys, f)
            for a in ann:
                ok = (b >= 0 and new >= 0) if a == "nonneg" else b in (0, 1)
                log(a, f"step {u}", ok, b)
        tr.steps.append(Step(u, j, f, new))
        f = new
    return tr


def eval_closed_strict(p, fun, args):
    """Sum-of-products solution of a strict linear definition.

    ``f = sum_u prod_{t > u} (1 + A(alpha(t))) * B(alpha(u))`` with the
    ``u = -1`` summand equal to the initial value.
    """
    args = [int(a) for a in args]
    d = _lookup(p, fun, args)
    report = classify(p, fun)
    if report.family not in STRICT_FAMILIES:
        raise EvalError(f"{fun} is {report.family}, not a strict family")
    ode = d.body
    x, ys = args[0], args[1:]
    if x < 0:
        raise EvalError(f"{fun}: negative derivation argument {x}")
    c = compiled(p)
    g = _guarded(c.fn(fun, "I"), *ys)
    lam, jump = (basis.len2, basis.alpha2) if ode.along == "L2" else (basis.len_, basis.alpha)
    n = lam(x)
    dec = report.decomposition
    if dec.special == "halving":
        return g >> n
    key = ("closed", fun)
    if key not in p._cache:
        p._cache[key] = (c.expr_fn(d.params, dec.A), c.expr_fn(d.params, dec.B))
    afn, bfn = p._cache[key]
    a_vals = [_guarded(afn, jump(t), *ys) for t in range(n)]
    b_vals = [_guarded(bfn, jump(u), *ys) for u in range(n)]
    ann = ode.annotations
    if ann:
        _check_init(fun, ann, g)
        for u, b in enumerate(b_vals):
            _check_step(fun, ann, u, b, 0)
    total, prod = 0, 1
    for u in range(n - 1, -2, -1):
        total += prod * (g if u < 0 else b_vals[u])
        if u >= 0:
            prod *= 1 + a_vals[u]
    return total
