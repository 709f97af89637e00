"""Backends turning classified programs into circuit families.

A circuit for input length ``n`` fixes the derivation variable to
``alpha(n) = 2**n - 1`` and reads every other parameter from ``n`` input
bits, parameter by parameter, least significant bit first.
"""

from ..basis import alpha, alpha2, len2, len_
from ..expr import (
    Add,
    Bit,
    Call,
    Const,
    Cosg,
    Div2,
    Len,
    Len2,
    Mul,
    SelfRef,
    Sg,
    Smash,
    Sub,
    Var,
    call_form,
    flatten_sum,
)
from ..schema import _kk_split, _minus_one_plus, classify
from .builder import Builder, CompileError, Word, width_for
from .ir import AC0, ACC2, NC1, TC0

BACKENDS = {
    "fac0": ("unbounded", AC0, ("FAC0",)),
    "acc2": ("unbounded", ACC2, ("FAC0", "FACC2")),
    "tc0": ("unbounded", TC0, ("FAC0", "FACC2", "FTC0")),
    "nc1": ("bounded2", NC1, ("FAC0", "FACC2", "FNC1")),
}

# Backend used by default for each class.
DEFAULT_BACKEND = {"FAC0": "fac0", "FACC2": "acc2", "FTC0": "tc0", "FNC1": "nc1"}

_MAX_SELECT = 4096
_MAX_UNARY = 1 << 14


class _Compiler:
    def __init__(self, prog, backend, n, width=None):
        if backend not in BACKENDS:
            raise CompileError(f"unknown backend {backend!r}")
        self.prog = prog
        self.backend = backend
        self.mode, self.ops, self.accepts = BACKENDS[backend]
        self.n = n
        self.width = width
        self.notes = []
        self.b = None

    # -- expressions ------------------------------------------------------

    def fit(self, w):
        if self.width is None or w.width <= self.width:
            return w
        self.notes.append(f"value range [{w.lo}, {w.hi}] truncated to {self.width} bits")
        W = self.width
        bits = w.bits[:W]
        if w.signed:
            return Word(bits, -(1 << (W - 1)), (1 << (W - 1)) - 1)
        return Word(bits, 0, (1 << W) - 1)

    def expr(self, e, env, me=None):
        b = self.b
        if isinstance(e, Const):
            return b.const_word(e.value)
        if isinstance(e, Var):
            if e.name not in env:
                raise CompileError(f"unbound variable {e.name}")
            return env[e.name]
        if isinstance(e, SelfRef):
            if me is None:
                raise CompileError("self reference outside a derivation")
            return me
        if isinstance(e, Add):
            return self.fit(b.add(self.expr(e.left, env, me), self.expr(e.right, env, me)))
        if isinstance(e, Sub):
            return self.fit(b.sub(self.expr(e.left, env, me), self.expr(e.right, env, me)))
        if isinstance(e, Mul):
            x, y = self.expr(e.left, env, me), self.expr(e.right, env, me)
            return self.fit(b.mul(x, y, allow_general=self.backend == "tc0"))
        if isinstance(e, Div2):
            return b.div2(self.expr(e.arg, env, me))
        if isinstance(e, Sg):
            return b.bool_word(b.positive(self.expr(e.arg, env, me)))
        if isinstance(e, Cosg):
            return b.bool_word(b.NOT(b.positive(self.expr(e.arg, env, me))))
        if isinstance(e, Len):
            return self.length(self.expr(e.arg, env, me))
        if isinstance(e, Len2):
            return self.length(self.length(self.expr(e.arg, env, me)))
        if isinstance(e, Bit):
            base, shift = self.index(e.index, env, me)
            return self.bit(base, self.expr(e.value, env, me), shift)
        if isinstance(e, Smash):
            return self.fit(self.smash(self.expr(e.left, env, me), self.expr(e.right, env, me)))
        if isinstance(e, Call):
            args = [self.expr(a, env, me) for a in e.args]
            d = self.prog[e.fun]
            if not d.is_ode:
                return self.expr(d.body, dict(zip(d.params, args)))
            x = args[0].constant
            if x is None:
                raise CompileError(f"call to {e.fun} needs a constant first argument")
            return self.ode(e.fun, x, args[1:])
        raise CompileError(f"cannot compile {type(e).__name__}")

    def length(self, x):
        b = self.b
        if x.lo < 0:
            raise CompileError("len of a possibly negative value")
        if x.constant is not None:
            return b.const_word(len_(x.constant))
        w = x.width
        top = [b.AND(x.bits[i], *(b.NOT(x.bits[j]) for j in range(i + 1, w))) for i in range(w)]
        lo, hi = len_(x.lo), len_(x.hi)
        bits = [
            b.OR(*(top[i] for i in range(w) if ((i + 1) >> r) & 1))
            for r in range(width_for(lo, hi))
        ]
        return Word(bits, lo, hi)

    def _bit_at(self, y, j):
        if j < y.width:
            return y.bits[j]
        return y.bits[-1] if y.signed else self.b.zero

    def index(self, e, env, me):
        """A bit position as ``word + shift``, keeping constant terms out of any adder."""
        shift = 0
        rest = []
        for sign, t in flatten_sum(e):
            w = self.expr(t, env, me)
            if w.constant is not None:
                shift += sign * w.constant
            else:
                rest.append((sign, w))
        if len(rest) == 1 and rest[0][0] > 0:
            return rest[0][1], shift
        b = self.b
        total = b.const_word(shift)
        for sign, w in rest:
            total = self.fit(b.add(total, w) if sign > 0 else b.sub(total, w))
        return total, 0

    def bit(self, i, y, shift=0):
        """Bit ``i + shift`` of ``y``."""
        b = self.b
        if i.constant is not None:
            c = i.constant + shift
            return b.bool_word(b.zero if c < 0 else self._bit_at(y, c))
        lo, hi = max(i.lo + shift, 0), i.hi + shift
        if hi - lo > _MAX_SELECT:
            raise CompileError("bit position ranges over too many values")
        terms = [b.AND(b.equals(i, j - shift), self._bit_at(y, j)) for j in range(lo, hi + 1)]
        return b.bool_word(b.OR(*terms))

    def smash(self, x, y):
        b = self.b
        if x.lo < 0 or y.lo < 0:
            raise CompileError("smash of a possibly negative value")
        lx, ly = self.length(x), self.length(y)
        lo, hi = 1 << (lx.lo * ly.lo), 1 << (lx.hi * ly.hi)
        if hi.bit_length() > _MAX_SELECT:
            raise CompileError("smash result too wide")
        bits = [b.zero] * width_for(lo, hi)
        for p in range(lx.lo, lx.hi + 1):
            for q in range(ly.lo, ly.hi + 1):
                hit = b.AND(b.equals(lx, p), b.equals(ly, q))
                bits[p * q] = b.OR(bits[p * q], hit)
        return Word(bits, lo, hi)

    def boolean(self, w):
        """Wire of a value the classifier proved to be 0 or 1."""
        if w.lo > 1 or w.hi < 0:
            raise CompileError(f"value range [{w.lo}, {w.hi}] excludes 0 and 1")
        return w.bits[0] if w.bits else self.b.zero

    # -- derivations ------------------------------------------------------

    def ode(self, name, x, ys):
        rep = classify(self.prog, name)
        if rep.cls not in self.accepts:
            raise CompileError(
                f"{name}: class {rep.cls} ({rep.family}) is outside the {self.backend} backend"
            )
        method = getattr(self, "_" + rep.family.lower(), None)
        if method is None:
            raise CompileError(f"{name}: no {self.backend} construction for family {rep.family}")
        d = self.prog[name]
        ode = d.body
        if ode.along == "L2":
            steps, jump = len2(x), alpha2
        else:
            steps, jump = len_(x), alpha
        base = dict(zip(d.params[1:], ys))
        g = self.expr(ode.init, base)
        envs = []
        for u in range(steps):
            env = dict(base)
            env[d.params[0]] = self.b.const_word(jump(u))
            envs.append(env)
        if not envs:
            return g
        return method(rep.decomposition, g, envs)

    def _words(self, e, envs, me=None):
        return [self.expr(e, env, me) for env in envs]

    def _bools(self, e, envs, me=None):
        return [self.boolean(w) for w in self._words(e, envs, me)]

    def _concat(self, g, ks):
        """``g * 2**n`` followed by the bits ``ks`` (first step most significant)."""
        b, n = self.b, len(ks)
        lo, hi = g.lo << n, (g.hi << n) + (1 << n) - 1
        w = width_for(lo, hi)
        return Word(list(reversed(ks)) + b.resize(g, w - n), lo, hi)

    def _ode3(self, dec, g, envs):
        n = len(envs)
        full = self.b.resize(g, max(g.width, n) + 1)
        return self.b.make(full[n:], g.lo >> n, g.hi >> n)

    def _ode1(self, dec, g, envs):
        if dec.a_constant() == -1:
            return self.expr(dec.B, envs[-1])
        return self._concat(g, self._bools(dec.B, envs))

    def _ode0(self, dec, g, envs):
        k = _minus_one_plus(dec.a_terms)
        ks = self._bools(k, envs, g)
        return self.b.gate_word(self.b.AND(*ks), g)

    _acode = _ode0
    _acode_offset = _ode0

    def _l2_strict(self, dec, g, envs):
        return self.fit(self.b.sum_words([g] + self._words(dec.B, envs)))

    def _kk_acc2(self, dec, g, envs):
        b = self.b
        k, k2 = _kk_split(dec)
        ks = self._bools(k, envs)
        k2s = self._bools(k2, envs)
        n = len(ks)
        pairs = []
        for u in range(n):
            last = b.AND(ks[u], *(b.NOT(ks[v]) for v in range(u + 1, n)))
            pairs.append((last, b.bool_word(k2s[u])))
        pairs.append((b.AND(*(b.NOT(kv) for kv in ks)), g))
        return b.select(pairs)

    def _b0ode(self, dec, g, envs):
        """Each step after the first maps {0,1} to {0,1}: constant, identity or negation.

        The result is the value written by the last constant step, flipped by
        the parity of the negations after it.
        """
        b = self.b
        n = len(envs)
        first = self.boolean(self.expr(dec.B, envs[0], g))
        zero, one = b.const_word(0), b.const_word(1)
        k0 = [None] + [self.boolean(self.expr(dec.B, envs[u], zero)) for u in range(1, n)]
        k1 = [None] + [self.boolean(self.expr(dec.B, envs[u], one)) for u in range(1, n)]
        fixed = [b.one] + [b.NOT(b.XOR(k0[u], k1[u])) for u in range(1, n)]
        flips = [b.zero] + [b.AND(k0[u], b.NOT(k1[u])) for u in range(1, n)]
        value = [first] + k0[1:]
        terms = []
        for u in range(n):
            last = b.AND(fixed[u], *(b.NOT(fixed[v]) for v in range(u + 1, n)))
            parity = b.XOR(*flips[u + 1 :])
            terms.append(b.AND(last, b.XOR(value[u], parity)))
        return b.bool_word(b.OR(*terms))

    # -- TC0 --------------------------------------------------------------

    def threshold_sum(self, words):
        """Sum via unary counting: TH gates give ``total >= v``, then binary by OR."""
        b = self.b
        offset = sum(w.lo for w in words)
        multiset = []
        total = 0
        for w in words:
            if w.constant is not None:
                continue
            s = b.sub(w, b.const_word(w.lo))
            total += s.hi
            for j, bit in enumerate(s.bits):
                multiset += [bit] * (1 << j)
        if total > _MAX_UNARY:
            raise CompileError(f"sum ranges over {total} values, too many for unary counting")
        ge = [b.TH(v, multiset) for v in range(total + 2)]
        lo, hi = offset, offset + total
        W = width_for(lo, hi)
        eq = [b.AND(ge[v], b.NOT(ge[v + 1])) for v in range(total + 1)]
        mask = (1 << W) - 1
        bits = [
            b.OR(*(eq[v] for v in range(total + 1) if (((v + offset) & mask) >> r) & 1))
            for r in range(W)
        ]
        return Word(bits, lo, hi)

    def _pode_strict(self, dec, g, envs):
        if not dec.a_terms:
            return self.threshold_sum([g] + self._words(dec.B, envs))
        return self._itmult(dec, g, envs, [self._words(dec.A, envs)])

    def _tcode_sum(self, dec, g, envs):
        b = self.b
        if g.lo < 0:
            raise CompileError("counting construction needs a nonnegative initial value")
        zero, one = b.const_word(0), b.const_word(1)
        k0 = self._bools(dec.B, envs, zero)
        k1 = self._bools(dec.B, envs, one)
        start = b.positive(g)
        contrib = []
        for u in range(len(envs)):
            pos = b.OR(start, *k0[:u])
            contrib.append(b.bool_word(b.MUX(pos, k1[u], k0[u])))
        return self.threshold_sum([g] + contrib)

    def _tcode_prod(self, dec, g, envs):
        b = self.b
        a0 = self._words(dec.A, envs, b.const_word(0))
        a1 = self._words(dec.A, envs, b.const_word(1))
        return self._itmult(dec, g, envs, [a0, a1])

    def _itmult(self, dec, g, envs, a_streams):
        """Iterated multiplication left as a named macro block."""
        b = self.b
        bs = self._words(dec.B, envs) if dec.b_terms else []
        lo, hi = g.lo, g.hi
        for u in range(len(envs)):
            alo = min(s[u].lo for s in a_streams)
            ahi = max(s[u].hi for s in a_streams)
            ends = [v * (1 + a) for v in (lo, hi) for a in (alo, ahi)]
            lo, hi = min(ends), max(ends)
            if bs:
                lo, hi = lo + bs[u].lo, hi + bs[u].hi
            if width_for(lo, hi) > _MAX_SELECT:
                raise CompileError("iterated product too wide")
        args = list(g.bits)
        for u in range(len(envs)):
            for s in a_streams:
                args += s[u].bits
            if bs:
                args += bs[u].bits
        bits = [b.MACRO(f"ITMULT#{j}", args) for j in range(width_for(lo, hi))]
        return Word(bits, lo, hi)

    # -- NC1 --------------------------------------------------------------

    def _classes(self, offsets, word):
        """One-hot position of ``word`` among ``(-inf, c1], (c1, c2], ..., (ck, inf)``."""
        b = self.b
        above = [b.greater(word, c) for c in offsets]
        out = [b.NOT(above[0])]
        for i in range(1, len(offsets)):
            out.append(b.AND(above[i - 1], b.NOT(above[i])))
        out.append(above[-1])
        return out

    def _compose(self, m1, m2):
        b = self.b
        k = len(m1)
        return [[b.OR(*(b.AND(m1[s][t], m2[t][r]) for t in range(k))) for r in range(k)] for s in range(k)]

    def _nc1_concat(self, dec, g, envs):
        """Doubling steps: track the exact value while it is at most the largest offset."""
        b = self.b
        cf = call_form(dec.B)
        cmax = max(cf.constants) if cf.kind == "Offset" else 0
        # states: NEG, 0..cmax, BIG
        reps = [-1] + list(range(cmax + 1)) + [cmax + 1]
        S = len(reps)
        big = S - 1

        def state_of(v):
            if v < 0:
                return 0
            return v + 1 if v <= cmax else big

        kbits = [[self.boolean(self.expr(dec.B, env, b.const_word(r))) for r in reps] for env in envs]
        maps = []
        for u in range(len(envs) - 1):
            m = [[b.zero] * S for _ in range(S)]
            for s, r in enumerate(reps):
                if s in (0, big):
                    m[s][s] = b.one
                    continue
                k = kbits[u][s]
                m[s][state_of(2 * r)] = b.OR(m[s][state_of(2 * r)], b.NOT(k))
                m[s][state_of(2 * r + 1)] = b.OR(m[s][state_of(2 * r + 1)], k)
            maps.append(m)
        prefix = _prefix(maps, self._compose)
        start = [b.positive(b.neg(g))]
        start += [b.equals(g, v) for v in range(cmax + 1)]
        start.append(b.greater(g, cmax))
        ks = []
        for u in range(len(envs)):
            if u == 0:
                state = start
            else:
                p = prefix[u - 1]
                state = [b.OR(*(b.AND(start[s], p[s][t]) for s in range(S))) for t in range(S)]
            ks.append(b.OR(*(b.AND(state[s], kbits[u][s]) for s in range(S))))
        return self._concat(g, ks)

    def _bode(self, dec, g, envs):
        """Replacement steps composed by a balanced tree of class transitions."""
        b = self.b
        cf = call_form(dec.B)
        offsets = sorted(cf.constants) if cf.kind == "Offset" else [0]
        reps = offsets + [offsets[-1] + 1]
        leaves = []
        for env in envs:
            vals = [self.expr(dec.B, env, b.const_word(r)) for r in reps]
            leaves.append(([self._classes(offsets, v) for v in vals], vals))

        def combine(left, right):
            le, lv = left
            re_, rv = right
            k = len(reps)
            edges = [[b.OR(*(b.AND(le[i][j], re_[j][r]) for j in range(k))) for r in range(k)] for i in range(k)]
            vals = [b.select([(le[i][j], rv[j]) for j in range(k)]) for i in range(k)]
            return edges, vals

        while len(leaves) > 1:
            nxt = [combine(leaves[i], leaves[i + 1]) for i in range(0, len(leaves) - 1, 2)]
            if len(leaves) % 2:
                nxt.append(leaves[-1])
            leaves = nxt
        _, vals = leaves[0]
        start = self._classes(offsets, g)
        return self.fit(b.select(list(zip(start, vals))))

    # -- top level --------------------------------------------------------

    def compile(self, fun):
        d = self.prog[fun]
        rep = classify(self.prog, fun)
        if rep.cls not in self.accepts:
            raise CompileError(f"{fun}: class {rep.cls} ({rep.family}) is outside the {self.backend} backend")
        n = self.n
        self.b = b = Builder(n * (len(d.params) - 1), self.mode, self.ops)
        ys = [b.input_word(i * n, n) for i in range(len(d.params) - 1)]
        x = alpha(n)
        if d.is_ode:
            out = self.ode(fun, x, ys)
        else:
            env = dict(zip(d.params[1:], ys))
            env[d.params[0]] = b.const_word(x)
            out = self.expr(d.body, env)
        c = b.finish(out.bits)
        c.meta.update(
            fun=fun,
            n=n,
            backend=self.backend,
            family=rep.family,
            cls=rep.cls,
            lo=out.lo,
            hi=out.hi,
            signed=out.signed,
            notes=sorted(set(self.notes)),
        )
        return c


def _prefix(items, combine):
    """All prefix combinations ``items[0] . ... . items[i]`` in logarithmic depth."""
    pre = list(items)
    step = 1
    while step < len(pre):
        for i in range(len(pre)):
            if (i // step) % 2 == 1:
                pre[i] = combine(pre[(i // step) * step - 1], pre[i])
        step *= 2
    return pre


def compile_fac0(prog, fun, n):
    """Unbounded fan-in NOT/AND/OR circuit for input length ``n``."""
    return _Compiler(prog, "fac0", n).compile(fun)


def compile_acc2(prog, fun, n):
    """Unbounded fan-in circuit that may also use XOR (parity) gates."""
    return _Compiler(prog, "acc2", n).compile(fun)


def compile_tc0(prog, fun, n):
    """Unbounded fan-in circuit with threshold gates."""
    return _Compiler(prog, "tc0", n).compile(fun)


def compile_nc1(prog, fun, n, width=64):
    """Fan-in two NOT/AND/OR circuit; arithmetic is truncated to ``width`` bits."""
    return _Compiler(prog, "nc1", n, width).compile(fun)


def compile_circuit(prog, fun, n, backend=None, width=64):
    """Compile with ``backend``, or with the default backend for the function's class."""
    if backend is None:
        cls = classify(prog, fun).cls
        if cls not in DEFAULT_BACKEND:
            raise CompileError(f"{fun}: no circuit backend for class {cls}")
        backend = DEFAULT_BACKEND[cls]
    return _Compiler(prog, backend, n, width if backend == "nc1" else None).compile(fun)
