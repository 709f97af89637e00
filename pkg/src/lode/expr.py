"""Expression trees and the syntactic analyses run over them.

Expressions are immutable dataclasses, so structural equality and hashing
come for free.  The analyses here are purely syntactic: they never evaluate
anything except in :func:`eval_expr`.
"""

from dataclasses import dataclass
from typing import Optional

from . import basis

#: Marker used inside a variable set to stand for the function being defined.
SELF = "f"


class AnalysisError(Exception):
    """Raised when an analysis meets an ill-formed expression."""


class EvalError(Exception):
    """Raised when an expression cannot be evaluated."""


class Expr:
    __slots__ = ()

    def children(self):
        return ()

    def __str__(self):
        from .syntax import format_expr

        return format_expr(self)

    # Operators build the same trees the parser does, so Python code such as
    # ``-f + 2 * x`` mirrors the surface syntax exactly.
    def __add__(self, other):
        return Add(self, lift(other))

    def __radd__(self, other):
        return Add(lift(other), self)

    def __sub__(self, other):
        return Sub(self, lift(other))

    def __rsub__(self, other):
        return Sub(lift(other), self)

    def __mul__(self, other):
        return Mul(self, lift(other))

    def __rmul__(self, other):
        return Mul(lift(other), self)

    def __neg__(self):
        return Sub(Const(0), self)


def lift(v):
    """Wrap a Python int as :class:`Const`; pass expressions through."""
    if isinstance(v, Expr):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return Const(v)
    raise TypeError(f"cannot use {v!r} in an expression")


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class SelfRef(Expr):
    pass


@dataclass(frozen=True)
class Call(Expr):
    fun: str
    args: tuple

    def children(self):
        return self.args


@dataclass(frozen=True)
class _Binary(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class _Unary(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


class Add(_Binary):
    pass


class Sub(_Binary):
    pass


class Mul(_Binary):
    pass


class Smash(_Binary):
    pass


class Div2(_Unary):
    pass


class Sg(_Unary):
    pass


class Cosg(_Unary):
    pass


class Len(_Unary):
    pass


class Len2(_Unary):
    pass


@dataclass(frozen=True)
class Bit(Expr):
    index: Expr
    value: Expr

    def children(self):
        return (self.index, self.value)


# dataclass(frozen=True) on the base gives eq/hash that compare the class too,
# so Add(a, b) != Sub(a, b) even though they share fields.
for _cls in (Add, Sub, Mul, Smash, Div2, Sg, Cosg, Len, Len2):
    dataclass(frozen=True)(_cls)
del _cls


ONE = Const(1)
ZERO = Const(0)


def walk(e):
    """Yield every node of ``e`` in pre-order."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def free_vars(e):
    return {n.name for n in walk(e) if isinstance(n, Var)}


def has_self(e):
    return any(isinstance(n, SelfRef) for n in walk(e))


def called_functions(e):
    return [n.fun for n in walk(e) if isinstance(n, Call)]


def add_all(terms):
    """Left-nested sum of ``(sign, term)`` pairs; the empty sum is ``0``."""
    out = None
    for sign, t in terms:
        if out is None:
            out = t if sign > 0 else Sub(ZERO, t)
        else:
            out = Add(out, t) if sign > 0 else Sub(out, t)
    return ZERO if out is None else out


def mul_all(factors):
    out = None
    for f in factors:
        out = f if out is None else Mul(out, f)
    return ONE if out is None else out


def flatten_sum(e, sign=1):
    """Flatten nested Add/Sub into a list of ``(sign, term)`` pairs.

    ``0 - t`` (the parsed form of unary minus) contributes just ``-t``.
    """
    if isinstance(e, Add):
        return flatten_sum(e.left, sign) + flatten_sum(e.right, sign)
    if isinstance(e, Sub):
        if e.left == ZERO:
            return flatten_sum(e.right, -sign)
        return flatten_sum(e.left, sign) + flatten_sum(e.right, -sign)
    return [(sign, e)]


def flatten_product(e):
    if isinstance(e, Mul):
        return flatten_product(e.left) + flatten_product(e.right)
    return [e]


def signed_factors(term):
    """Split a product into a sign and its factors, pulling out unary minus.

    ``(0 - a) * b`` becomes ``(-1, [a, b])``.
    """
    sign, out = 1, []
    for f in flatten_product(term):
        parts = flatten_sum(f)
        if len(parts) == 1 and parts[0][0] < 0:
            sign = -sign
            out.extend(flatten_product(parts[0][1]))
        else:
            out.append(f)
    return sign, out


def canon(e):
    """Canonical string for ``e`` modulo associativity and commutativity of + and *.

    Two expressions with equal canonical strings are equal as polynomials up to
    reordering; unequal strings mean nothing.
    """
    if isinstance(e, (Add, Sub)):
        terms = sorted(("+" if s > 0 else "-") + canon(t) for s, t in flatten_sum(e))
        return "(+ " + " ".join(terms) + ")"
    if isinstance(e, Mul):
        sign, factors = signed_factors(e)
        body = "(* " + " ".join(sorted(canon(f) for f in factors)) + ")"
        return body if sign > 0 else "(+ -" + body + ")"
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, SelfRef):
        return "@f"
    if isinstance(e, Call):
        return "(" + e.fun + "! " + " ".join(canon(a) for a in e.args) + ")"
    tag = type(e).__name__.lower()
    return "(" + tag + " " + " ".join(canon(c) for c in e.children()) + ")"


# -- degree ---------------------------------------------------------------


def degree(vars, e, scope=None):
    """Degree of the variable set ``vars`` in ``e``.

    ``vars`` may contain :data:`SELF` to stand for the self reference.  When
    ``scope`` is given, any variable outside it raises :class:`AnalysisError`.

    >>> x1, x2, x3 = Var("x1"), Var("x2"), Var("x3")
    >>> degree({"x1", "x2", "x3"}, Add(Mul(Mul(Const(3), x1), x3), Mul(Mul(Const(2), x2), x3)))
    2
    """
    vars = frozenset(vars)

    def go(n):
        if isinstance(n, Var):
            if scope is not None and n.name not in scope:
                raise AnalysisError(f"unbound variable {n.name!r}")
            return 1 if n.name in vars else 0
        if isinstance(n, SelfRef):
            return 1 if SELF in vars else 0
        if isinstance(n, Const):
            return 0
        if isinstance(n, (Add, Sub)):
            return max(go(n.left), go(n.right))
        if isinstance(n, Mul):
            return go(n.left) + go(n.right)
        if isinstance(n, Div2):
            return go(n.arg)
        if isinstance(n, Call):
            return max((go(a) for a in n.args), default=0)
        # Sg, Cosg, Len, Len2, Bit, Smash: the children are still scope-checked
        for c in n.children():
            go(c)
        return 0

    return go(e)


# -- limitedness and call forms ---------------------------------------------


def is_limited(e):
    """True when ``e`` uses neither multiplication nor smash."""
    return not any(isinstance(n, (Mul, Smash)) for n in walk(e))


def is_sg_free(e):
    return not any(isinstance(n, (Sg, Cosg)) for n in walk(e))


@dataclass(frozen=True)
class CallForm:
    """How the self reference occurs: ``NoCall``, ``Simple``, ``Offset`` or ``General``."""

    kind: str
    constants: frozenset = frozenset()

    @property
    def is_simple(self):
        return self.kind == "Simple" or (self.kind == "Offset" and self.constants == {0})

    @property
    def is_guarded(self):
        return self.kind in ("Simple", "Offset")

    def __str__(self):
        if self.kind == "Offset":
            return "Offset({" + ",".join(map(str, sorted(self.constants))) + "})"
        return self.kind


NO_CALL = CallForm("NoCall")
SIMPLE = CallForm("Simple")
GENERAL = CallForm("General")


def _guard_offset(arg):
    """Offset ``c`` when ``arg`` is ``f`` (None) or ``f - c`` with literal c >= 0."""
    if isinstance(arg, SelfRef):
        return None
    if isinstance(arg, Sub) and isinstance(arg.left, SelfRef) and isinstance(arg.right, Const):
        if arg.right.value >= 0:
            return arg.right.value
    raise ValueError


def call_form(e):
    """Classify the occurrences of the self reference in ``e``."""
    plain = False
    offsets = set()
    general = False

    def go(n):
        nonlocal plain, general
        if isinstance(n, (Sg, Cosg)) and has_self(n.arg):
            try:
                c = _guard_offset(n.arg)
            except ValueError:
                general = True
                return
            if c is None:
                plain = True
            else:
                offsets.add(c)
            return
        if isinstance(n, SelfRef):
            general = True
            return
        for c in n.children():
            go(c)

    go(e)
    if general:
        return GENERAL
    if not plain and not offsets:
        return NO_CALL
    if not offsets:
        return SIMPLE
    if plain:
        offsets.add(0)
    return CallForm("Offset", frozenset(offsets))


def sign_guarded(e):
    """True when every self reference sits under some Sg or Cosg."""

    def go(n):
        if isinstance(n, (Sg, Cosg)):
            return True
        if isinstance(n, SelfRef):
            return False
        return all(go(c) for c in n.children())

    return go(e)


# -- range shapes ------------------------------------------------------------


def _guard(f):
    """Interpret a factor as a guard ``base in interval``.

    Returns ``(canon(base), lo, hi)`` with ``None`` for an open end, or None.
    """
    neg = False
    if isinstance(f, Sub) and f.left == ONE and isinstance(f.right, (Sg, Cosg)):
        f, neg = f.right, True
    if not isinstance(f, (Sg, Cosg)):
        return None
    positive = isinstance(f, Sg) != neg
    arg, c = f.arg, 0
    if isinstance(arg, Sub) and isinstance(arg.right, Const):
        arg, c = arg.left, arg.right.value
    # sg(E - c) = 1 iff E >= c + 1
    if positive:
        return canon(arg), c + 1, None
    return canon(arg), None, c


def _disjoint(g1, g2):
    if g1[0] != g2[0]:
        return False
    lo1, hi1 = g1[1], g1[2]
    lo2, hi2 = g2[1], g2[2]
    if hi1 is not None and lo2 is not None and hi1 < lo2:
        return True
    if hi2 is not None and lo1 is not None and hi2 < lo1:
        return True
    return False


def _exclusive(t1, t2):
    g1 = [g for g in map(_guard, flatten_product(t1)) if g is not None]
    g2 = [g for g in map(_guard, flatten_product(t2)) if g is not None]
    return any(_disjoint(a, b) for a in g1 for b in g2)


def _callee(prog, name):
    if prog is None:
        return None
    try:
        return prog[name]
    except KeyError:
        return None


def is_boolean_shaped(e, prog=None):
    """Sound syntactic witness that ``e`` always evaluates to 0 or 1.

    Calls are looked through when ``prog`` is given and the callee is an
    explicit definition.
    """
    if isinstance(e, Const):
        return e.value in (0, 1)
    if isinstance(e, (Sg, Cosg, Bit)):
        return True
    if isinstance(e, Mul):
        return all(is_boolean_shaped(f, prog) for f in flatten_product(e))
    if isinstance(e, Call):
        d = _callee(prog, e.fun)
        return d is not None and not d.is_ode and is_boolean_shaped(d.body, prog)
    if isinstance(e, (Add, Sub)):
        terms = [(s, t) for s, t in flatten_sum(e) if t != ZERO]
        if len(terms) == 2 and sorted(s for s, _ in terms) == [-1, 1]:
            pos = next(t for s, t in terms if s > 0)
            neg = next(t for s, t in terms if s < 0)
            if pos == ONE and is_boolean_shaped(neg, prog):
                return True
        if any(s < 0 for s, _ in terms):
            return False
        if not all(is_boolean_shaped(t, prog) for _, t in terms):
            return False
        return all(
            _exclusive(terms[i][1], terms[j][1])
            for i in range(len(terms))
            for j in range(i + 1, len(terms))
        )
    return False


def is_nonneg_shaped(e, prog=None):
    """Sound syntactic witness that ``e`` never evaluates below zero.

    Variables are parameters and therefore natural numbers; the self
    reference is not.  An ODE callee counts as nonnegative only when it
    carries the ``nonneg`` annotation, which the interpreter enforces.
    """
    if isinstance(e, Const):
        return e.value >= 0
    if isinstance(e, Var):
        return True
    if isinstance(e, (Sg, Cosg, Len, Len2, Bit, Smash)):
        return True
    if isinstance(e, (Add, Mul)):
        return is_nonneg_shaped(e.left, prog) and is_nonneg_shaped(e.right, prog)
    if isinstance(e, Div2):
        return is_nonneg_shaped(e.arg, prog)
    if isinstance(e, Call):
        d = _callee(prog, e.fun)
        if d is None:
            return False
        if d.is_ode:
            return "nonneg" in d.annotations
        return is_nonneg_shaped(d.body, prog)
    return is_boolean_shaped(e, prog)


# -- evaluation --------------------------------------------------------------


def eval_expr(e, env, self_value: Optional[int] = None, prog=None, call=None):
    """Evaluate ``e`` exactly.

    Calls go through ``call(name, args)`` when given, otherwise through the
    naive interpreter on ``prog``.

    >>> eval_expr(Add(Div2(Var("x")), Const(1)), {"x": 7})
    4
    """
    if call is None:

        def call(name, args):
            if prog is None:
                raise EvalError(f"call to {name!r} without a program")
            from .interp import eval_naive

            return eval_naive(prog, name, args)

    def go(n):
        t = type(n)
        if t is Const:
            return n.value
        if t is Var:
            try:
                return env[n.name]
            except KeyError:
                raise EvalError(f"unbound variable {n.name!r}") from None
        if t is SelfRef:
            if self_value is None:
                raise EvalError("self reference outside an ODE right-hand side")
            return self_value
        if t is Add:
            return go(n.left) + go(n.right)
        if t is Sub:
            return go(n.left) - go(n.right)
        if t is Mul:
            return go(n.left) * go(n.right)
        if t is Div2:
            return basis.div2(go(n.arg))
        if t is Sg:
            return basis.sg(go(n.arg))
        if t is Cosg:
            return basis.cosg(go(n.arg))
        if t is Len:
            return _checked(basis.len_, go(n.arg))
        if t is Len2:
            return _checked(basis.len2, go(n.arg))
        if t is Bit:
            return basis.bit(go(n.index), go(n.value))
        if t is Smash:
            return _checked(basis.smash, go(n.left), go(n.right))
        if t is Call:
            return call(n.fun, [go(a) for a in n.args])
        raise EvalError(f"unknown node {n!r}")

    return go(e)


def _checked(fn, *args):
    try:
        return fn(*args)
    except ValueError as exc:
        raise EvalError(str(exc)) from None
