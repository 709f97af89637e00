"""Programs, linear decomposition of right-hand sides, and the schema classifier."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

from .expr import (
    ONE,
    SELF,
    ZERO,
    AnalysisError,
    Call,
    Const,
    Div2,
    Expr,
    Mul,
    SelfRef,
    Smash,
    add_all,
    call_form,
    canon,
    degree,
    flatten_product,
    flatten_sum,
    free_vars,
    has_self,
    is_boolean_shaped,
    is_limited,
    is_nonneg_shaped,
    mul_all,
    sign_guarded,
    signed_factors,
    walk,
)

ANNOTATIONS = ("nonneg", "bool01")
BUILTIN_NAMES = ("sg", "cosg", "div2", "len", "len2", "bit", "smash")

FAMILY_CLASS = {
    "ODE1": "FAC0",
    "ODE3": "FAC0",
    "ODE0": "FAC0",
    "ACODE": "FAC0",
    "ACODE_OFFSET": "FAC0",
    "KK_ACC2": "FACC2",
    "B0ODE": "FACC2",
    "PODE_STRICT": "FTC0",
    "TCODE_SUM": "FTC0",
    "TCODE_PROD": "FTC0",
    "NC1_CONCAT": "FNC1",
    "BODE": "FNC1",
    "AC1_SUM": "FAC1",
    "L2_STRICT": "FAC0",
    "L2_NONSTRICT": "FTC0",
    "L2_LINEAR": "FNC1",
    "FP_LINEAR": "FP",
    "UNKNOWN": "UNKNOWN",
}

# Explicit definitions are compositions; their class is the join of what they use.
COMPOSITION = "COMPOSITION"

CLASS_ORDER = ("FAC0", "FACC2", "FTC0", "FNC1", "FAC1", "FP", "UNKNOWN")

STRICT_FAMILIES = frozenset(
    {"ODE1", "ODE3", "ODE0", "KK_ACC2", "PODE_STRICT", "L2_STRICT"}
)


def join_class(*labels):
    return max(labels, key=CLASS_ORDER.index, default="FAC0")


@dataclass(frozen=True)
class Ode:
    along: str
    init: Expr
    rhs: Expr
    annotations: frozenset = frozenset()


@dataclass(frozen=True)
class Defn:
    name: str
    params: tuple
    body: Union[Expr, Ode]

    @property
    def is_ode(self):
        return isinstance(self.body, Ode)

    @property
    def annotations(self):
        return self.body.annotations if self.is_ode else frozenset()


@dataclass(frozen=True)
class Program:
    defns: tuple = ()

    @cached_property
    def _index(self):
        out = {}
        for d in self.defns:
            out.setdefault(d.name, d)
        return out

    @cached_property
    def _cache(self):
        return {}

    def __getitem__(self, name):
        return self._index[name]

    def __contains__(self, name):
        return name in self._index

    def __iter__(self):
        return iter(self.defns)

    def __len__(self):
        return len(self.defns)

    @property
    def names(self):
        return [d.name for d in self.defns]

    def extend(self, *defns):
        return Program(self.defns + tuple(defns))

    def replace(self, defn):
        """Copy with the definition of the same name swapped for ``defn``."""
        return Program(tuple(defn if d.name == defn.name else d for d in self.defns))


@dataclass(frozen=True)
class Diagnostic:
    defn: str
    message: str

    def __str__(self):
        return f"{self.defn}: {self.message}"


def wellformed(p):
    """Diagnostics for ``p``; an empty list means the program is well formed."""
    out = []
    seen = {}
    for pos, d in enumerate(p.defns):
        diag = lambda msg, d=d: out.append(Diagnostic(d.name, msg))  # noqa: E731
        if d.name in seen:
            diag("duplicate definition")
        if d.name in BUILTIN_NAMES or d.name == SELF:
            diag("name shadows a builtin")
        if len(set(d.params)) != len(d.params):
            diag("duplicate parameter")
        for q in d.params:
            if q == SELF or q in BUILTIN_NAMES:
                diag(f"parameter {q!r} is reserved")
        params = set(d.params)
        if d.is_ode:
            ode = d.body
            if not d.params:
                diag("an ODE definition needs a derivation parameter")
                continue
            if ode.along not in ("L", "L2"):
                diag(f"unknown derivation {ode.along!r}")
            for a in ode.annotations:
                if a not in ANNOTATIONS:
                    diag(f"unknown annotation {a!r}")
            if has_self(ode.init):
                diag("self reference in initial value")
            if d.params[0] in free_vars(ode.init):
                diag(f"initial value mentions the derivation variable {d.params[0]!r} (scope)")
            exprs = [ode.init, ode.rhs]
        else:
            if has_self(d.body):
                diag("self reference in explicit body")
            exprs = [d.body]
        for e in exprs:
            for v in sorted(free_vars(e) - params):
                diag(f"unbound variable {v!r}")
            for n in walk(e):
                if not isinstance(n, Call):
                    continue
                if n.fun == d.name:
                    diag(f"recursive call to {n.fun!r} (cycle)")
                elif n.fun not in seen:
                    later = any(x.name == n.fun for x in p.defns[pos:])
                    diag(f"call to {'later' if later else 'undefined'} function {n.fun!r}")
                elif len(seen[n.fun].params) != len(n.args):
                    diag(
                        f"call to {n.fun!r} with {len(n.args)} arguments, "
                        f"expected {len(seen[n.fun].params)}"
                    )
        seen.setdefault(d.name, d)
    return out


# -- linear decomposition ------------------------------------------------------


@dataclass(frozen=True)
class LinearDecomposition:
    """``rhs == A*f + B`` as a syntactic sum of terms.

    ``a_terms``/``b_terms`` keep the flattened signed terms; like terms are
    never merged.  With ``special == "halving"`` the rhs is ``div2(f) - f``
    and both term lists are empty.
    """

    a_terms: tuple
    b_terms: tuple
    special: str = "none"
    guarded: bool = False

    @property
    def A(self):
        return add_all(self.a_terms)

    @property
    def B(self):
        return add_all(self.b_terms)

    def a_constant(self):
        return _single_constant(self.a_terms)

    def rebuild(self):
        if self.special == "halving":
            from .expr import Sub

            return Sub(Div2(SelfRef()), SelfRef())
        from .expr import Add

        return Add(Mul(self.A, SelfRef()), self.B)


class NotLinear:
    """Returned by :func:`decompose_linear` when the rhs is not linear in ``f``."""

    def __init__(self, reason):
        self.reason = reason

    def __bool__(self):
        return False

    def __repr__(self):
        return f"NotLinear({self.reason!r})"


def _single_constant(terms):
    if len(terms) == 1 and isinstance(terms[0][1], Const):
        s, c = terms[0]
        return s * c.value
    return None


def _drop_zero(terms):
    return tuple((s, t) for s, t in terms if t != ZERO)


def decompose_linear(rhs):
    """Split ``rhs`` into ``A*f + B``, or return :class:`NotLinear`."""
    terms = flatten_sum(rhs)
    halving = {(1, canon(Div2(SelfRef()))), (-1, canon(SelfRef()))}
    if len(terms) == 2 and {(s, canon(t)) for s, t in terms} == halving:
        return LinearDecomposition((), (), "halving")
    a_terms, b_terms = [], []
    guarded = False
    for sign, t in terms:
        if sign_guarded(t):
            guarded = guarded or has_self(t)
            b_terms.append((sign, t))
            continue
        s2, factors = signed_factors(t)
        bare = [f for f in factors if isinstance(f, SelfRef)]
        rest = [f for f in factors if not isinstance(f, SelfRef)]
        if len(bare) != 1 or not all(sign_guarded(f) for f in rest):
            return NotLinear(f"term {t} is not linear in f")
        guarded = guarded or any(has_self(f) for f in rest)
        s = sign * s2
        if not rest:
            a_terms.append((s, ONE))
        elif len(rest) == 1:
            a_terms.extend((s * s3, u) for s3, u in flatten_sum(rest[0]))
        else:
            a_terms.append((s, mul_all(rest)))
    if not a_terms and not b_terms and degree({SELF}, rhs) != 0:
        return NotLinear("no linear structure")
    return LinearDecomposition(_drop_zero(a_terms), _drop_zero(b_terms), "none", guarded)


# -- classification ------------------------------------------------------------


@dataclass
class ClassReport:
    fun: str
    family: str
    cls: str
    evidence: list = field(default_factory=list)
    decomposition: Optional[LinearDecomposition] = None

    @property
    def annotation_trusted(self):
        return any(name == "annotation-trusted" for name, _ in self.evidence)

    def to_text(self):
        lines = [f"{self.fun}: {self.family} -> {self.cls}"]
        lines += [f"  {name}: {outcome}" for name, outcome in self.evidence]
        return "\n".join(lines)

    def to_record(self):
        return {
            "fun": self.fun,
            "family": self.family,
            "class": self.cls,
            "evidence": [[n, o] for n, o in self.evidence],
        }


def _minus_one_plus(terms):
    """If ``terms`` is exactly ``-1`` plus positive terms, return the positive rest."""
    ones = [i for i, (s, t) in enumerate(terms) if isinstance(t, Const) and s * t.value == -1]
    if len(ones) != 1:
        return None
    rest = [st for i, st in enumerate(terms) if i != ones[0]]
    if not rest or any(s < 0 or isinstance(t, Const) for s, t in rest):
        return None
    return add_all(rest)


def _kk_split(dec):
    """``(k, k')`` when ``A == -k`` and ``B == k*k'``."""
    if len(dec.a_terms) != 1 or len(dec.b_terms) != 1:
        return None
    (sa, k), (sb, prod) = dec.a_terms[0], dec.b_terms[0]
    if sa > 0 or sb < 0 or isinstance(k, Const):
        return None
    s, factors = signed_factors(prod)
    if s < 0:
        return None
    key = canon(k)
    kfactors = flatten_product(k)
    # k may itself be a product; remove its factors from the B term.
    remaining = list(factors)
    for kf in kfactors:
        ck = canon(kf)
        idx = next((i for i, f in enumerate(remaining) if canon(f) == ck), None)
        if idx is None:
            return None
        remaining.pop(idx)
    if canon(mul_all(kfactors)) != key:
        return None
    return k, mul_all(remaining)


def classify(p, fun):
    """Match ``fun`` against the schema families, tightest first."""
    cache = p._cache
    if ("classify", fun) in cache:
        return cache[("classify", fun)]
    try:
        d = p[fun]
    except KeyError:
        raise KeyError(f"unknown function {fun!r}") from None
    if d.is_ode:
        report = _classify_ode(p, d)
    else:
        report = _classify_explicit(p, d)
    cache[("classify", fun)] = report
    return report


def _classify_explicit(p, d):
    ev = [("kind", "explicit definition")]
    labels = []
    for n in walk(d.body):
        if isinstance(n, Mul) and not (isinstance(n.left, Const) or isinstance(n.right, Const)):
            labels.append("FTC0")
            ev.append(("multiplication", "non-constant product"))
        if isinstance(n, Call) and n.fun in p:
            sub = classify(p, n.fun)
            labels.append(sub.cls)
            ev.append((f"call {n.fun}", sub.cls))
    return ClassReport(d.name, COMPOSITION, join_class(*labels), ev)


def _report(d, family, ev, dec):
    return ClassReport(d.name, family, FAMILY_CLASS[family], ev, dec)


def _classify_ode(p, d):
    ode = d.body
    ann = ode.annotations
    ev = [("along", ode.along)]
    dec = decompose_linear(ode.rhs)
    if not dec:
        ev.append(("linear", dec.reason))
        return _report(d, "UNKNOWN", ev, None)
    ev.append(("linear", "halving" if dec.special == "halving" else f"A={dec.A}; B={dec.B}"))
    cf_a, cf_b = call_form(dec.A), call_form(dec.B)
    strict = dec.special == "halving" or (cf_a.kind == "NoCall" and cf_b.kind == "NoCall")
    ev.append(("call form", f"A:{cf_a} B:{cf_b}"))
    ev.append(("strict", str(strict)))

    trusted = []

    def b_boolean():
        if is_boolean_shaped(dec.B, p):
            return True
        if "bool01" in ann:
            trusted.append("bool01")
            return True
        return False

    def b_nonneg():
        if is_nonneg_shaped(dec.B, p):
            return True
        if "nonneg" in ann:
            trusted.append("nonneg")
            return True
        return False

    a_const = dec.a_constant()
    a_zero = not dec.a_terms
    b_zero = not dec.b_terms

    def done(family):
        if trusted:
            ev.append(("annotation-trusted", ",".join(sorted(set(trusted)))))
        return _report(d, family, ev, dec)

    if ode.along == "L2":
        if strict and a_zero and is_limited(dec.B):
            return done("L2_STRICT")
        if a_zero and sign_guarded(dec.B):
            return done("L2_NONSTRICT")
        return done("L2_LINEAR")

    if dec.special == "halving":
        return done("ODE3")

    if strict:
        if a_const == 1 and b_boolean():
            return done("ODE1")
        if a_const == -1 and b_boolean():
            ev.append(("shape", "-f + k"))
            return done("ODE1")
        k = _minus_one_plus(dec.a_terms)
        if k is not None and b_zero and is_boolean_shaped(k, p):
            return done("ODE0")
        kk = _kk_split(dec)
        if kk is not None and is_boolean_shaped(kk[0], p) and is_boolean_shaped(kk[1], p):
            if is_boolean_shaped(ode.init, p):
                return done("KK_ACC2")
            if "bool01" in ann:
                trusted.append("bool01")
                return done("KK_ACC2")
            ev.append(("KK_ACC2", "initial value not known to be 0/1"))
        return done("PODE_STRICT")

    k = _minus_one_plus(dec.a_terms)
    if k is not None and b_zero and cf_a.is_guarded and is_boolean_shaped(k, p):
        return done("ACODE" if cf_a.is_simple else "ACODE_OFFSET")
    if a_const == -1 and sign_guarded(dec.B) and b_boolean():
        return done("B0ODE")
    if a_zero and cf_b.is_simple and b_boolean():
        return done("TCODE_SUM")
    if b_zero and cf_a.is_simple and is_boolean_shaped(dec.A, p):
        return done("TCODE_PROD")
    if a_const == 1 and cf_b.is_guarded and b_boolean():
        return done("NC1_CONCAT")
    if a_const == -1 and cf_b.is_guarded and b_nonneg():
        return done("BODE")
    if a_zero and cf_b.is_simple and b_nonneg():
        return done("AC1_SUM")
    trusted.clear()
    return done("FP_LINEAR")


def ode_defns(p):
    return [d for d in p.defns if d.is_ode]


def scope_check(p):
    """Raise :class:`AnalysisError` on the first diagnostic, if any."""
    diags = wellformed(p)
    if diags:
        raise AnalysisError("; ".join(map(str, diags)))
