"""Hash-consed gate construction and word-level arithmetic.

A ``Word`` is a list of wires (least significant first) together with an
interval ``[lo, hi]`` known to contain its value.  Words whose interval
dips below zero are read in two's complement; all others are unsigned.
Widths are at least what the interval needs, so arithmetic works modulo
``2**width`` and never loses information.
"""

from dataclasses import dataclass
from itertools import product

from .ir import Circuit, CircuitError, Gate


class CompileError(CircuitError):
    pass


def width_for(lo, hi):
    if lo >= 0:
        return hi.bit_length()
    return max(hi.bit_length(), (-lo - 1).bit_length()) + 1


@dataclass
class Word:
    bits: list
    lo: int
    hi: int

    @property
    def signed(self):
        return self.lo < 0

    @property
    def width(self):
        return len(self.bits)

    @property
    def constant(self):
        return self.lo if self.lo == self.hi else None


# Largest column height handled by a single two-level counting round.
_COUNT_LIMIT = 12
# Constant-depth sums work on at least this many bits, so short sums reach
# the same depth as long ones.
_MIN_SUM_WIDTH = 8


class Builder:
    """Gate factory with constant folding, duplicate sharing and fan-in control."""

    def __init__(self, n_inputs, mode="unbounded", ops=frozenset({"NOT", "AND", "OR"})):
        self.mode = mode
        self.ops = frozenset(ops)
        self.gates = []
        self._index = {}
        self._not = {}
        self.n_inputs = n_inputs
        self.inputs = [self._add("IN", i, ()) for i in range(n_inputs)]
        self.zero = self._add("CONST", 0, ())
        self.one = self._add("CONST", 1, ())

    @property
    def bounded(self):
        return self.mode == "bounded2"

    def _add(self, op, param, args):
        key = (op, param, args)
        gid = self._index.get(key)
        if gid is None:
            gid = len(self.gates)
            self.gates.append(Gate(op, param, args))
            self._index[key] = gid
        return gid

    def const(self, b):
        return self.one if b else self.zero

    def is_const(self, a):
        return a in (self.zero, self.one)

    # -- gates ------------------------------------------------------------

    def NOT(self, a):
        if a == self.zero:
            return self.one
        if a == self.one:
            return self.zero
        if a in self._not:
            return self._not[a]
        r = self._add("NOT", None, (a,))
        self._not[r] = a
        self._not[a] = r
        return r

    def _assoc(self, op, args, unit, absorb):
        seen = set()
        keep = []
        for a in args:
            if a == absorb:
                return absorb
            if a == unit or a in seen:
                continue
            seen.add(a)
            keep.append(a)
        if any(self._not.get(a) in seen for a in keep):
            return absorb
        if not keep:
            return unit
        if len(keep) == 1:
            return keep[0]
        keep.sort()
        if not self.bounded:
            # AND(a, AND(a, b)) is just the inner gate
            for a in keep:
                g = self.gates[a]
                if g.op == op and seen <= set(g.args) | {a}:
                    return a
        if self.bounded:
            return self._tree(op, keep)
        return self._add(op, None, tuple(keep))

    def _tree(self, op, args):
        while len(args) > 1:
            nxt = [self._add(op, None, (args[i], args[i + 1])) for i in range(0, len(args) - 1, 2)]
            if len(args) % 2:
                nxt.append(args[-1])
            args = nxt
        return args[0]

    def AND(self, *args):
        return self._assoc("AND", args, self.one, self.zero)

    def OR(self, *args):
        return self._assoc("OR", args, self.zero, self.one)

    def XOR(self, *args):
        flip = 0
        odd = {}
        for a in args:
            if a == self.one:
                flip ^= 1
            elif a != self.zero:
                odd[a] = odd.get(a, 0) ^ 1
        live = sorted(a for a, c in odd.items() if c)
        # a ^ not(a) is 1
        for a in list(live):
            b = self._not.get(a)
            if b is not None and a < b and b in live:
                live.remove(a)
                live.remove(b)
                flip ^= 1
        r = self._xor(live)
        return self.NOT(r) if flip else r

    def _xor(self, live):
        if not live:
            return self.zero
        if len(live) == 1:
            return live[0]
        if "XOR" in self.ops:
            return self._tree("XOR", live) if self.bounded else self._add("XOR", None, tuple(live))
        if "TH" in self.ops and not self.bounded and len(live) > 3:
            # odd count: exactly k ones for some odd k
            exact = [self.AND(self.TH(k, live), self.NOT(self.TH(k + 1, live))) for k in range(1, len(live) + 1, 2)]
            return self.OR(*exact)
        if self.bounded:
            while len(live) > 1:
                nxt = [self._xor_dnf(live[i : i + 2]) for i in range(0, len(live) - 1, 2)]
                if len(live) % 2:
                    nxt.append(live[-1])
                live = nxt
            return live[0]
        while len(live) > 1:
            nxt = [self._xor_dnf(live[i : i + 3]) for i in range(0, len(live), 3)]
            live = nxt
        return live[0]

    def _xor_dnf(self, args):
        if len(args) == 1:
            return args[0]
        terms = []
        for assign in product((0, 1), repeat=len(args)):
            if sum(assign) % 2:
                terms.append(self.AND(*(a if v else self.NOT(a) for a, v in zip(args, assign))))
        return self.OR(*terms)

    def TH(self, k, args):
        if "TH" not in self.ops or self.bounded:
            raise CompileError("threshold gates are not available in this backend")
        live = []
        for a in args:
            if a == self.one:
                k -= 1
            elif a != self.zero:
                live.append(a)
        if k <= 0:
            return self.one
        if k > len(live):
            return self.zero
        if k == len(live):
            return self.AND(*live)
        if k == 1:
            return self.OR(*live)
        return self._add("TH", k, tuple(sorted(live)))

    def MACRO(self, name, args):
        return self._add("MACRO", name, tuple(args))

    def MUX(self, s, a, b):
        """``a`` when ``s`` else ``b``."""
        return self.OR(self.AND(s, a), self.AND(self.NOT(s), b))

    # -- words ------------------------------------------------------------

    def const_word(self, c):
        w = width_for(c, c)
        return Word([self.const((c >> i) & 1) for i in range(w)], c, c)

    def input_word(self, start, count):
        return Word(self.inputs[start : start + count], 0, (1 << count) - 1)

    def bool_word(self, a):
        if a == self.zero:
            return self.const_word(0)
        if a == self.one:
            return self.const_word(1)
        return Word([a], 0, 1)

    def resize(self, x, w):
        """``x`` modulo ``2**w``, sign-extended when signed."""
        bits = list(x.bits[:w])
        fill = x.bits[-1] if x.signed and x.bits else self.zero
        bits += [fill] * (w - len(bits))
        return bits

    def make(self, bits, lo, hi):
        """Word for ``bits`` read at the width fixed by ``[lo, hi]``."""
        w = width_for(lo, hi)
        if len(bits) < w:
            raise CompileError("internal: word narrower than its range")
        return Word(list(bits[:w]), lo, hi)

    def as_bool(self, x):
        """The single wire of a 0/1 word."""
        if x.lo < 0 or x.hi > 1:
            raise CompileError(f"expected a 0/1 value, range is [{x.lo}, {x.hi}]")
        return x.bits[0] if x.bits else self.zero

    def _adder(self, a, b, cin):
        """Sum bits of ``a + b + cin`` (equal widths, result modulo 2**width)."""
        w = len(a)
        g = [self.AND(a[i], b[i]) for i in range(w)]
        p = [self.OR(a[i], b[i]) for i in range(w)]
        if self.bounded:
            carry = self._prefix_carries(g, p, cin)
        else:
            carry = [cin]
            for i in range(1, w):
                terms = [self.AND(cin, *p[:i])]
                for j in range(i):
                    terms.append(self.AND(g[j], *p[j + 1 : i]))
                carry.append(self.OR(*terms))
        return [self.XOR(a[i], b[i], carry[i]) for i in range(w)]

    def _prefix_carries(self, g, p, cin):
        """Carry into each position by a parallel prefix (logarithmic depth)."""
        G = [cin] + g
        P = [self.zero] + p
        n = len(G)
        step = 1
        while step < n:
            G2, P2 = list(G), list(P)
            for i in range(n):
                if (i // step) % 2 == 1:
                    j = (i // step) * step - 1
                    G2[i] = self.OR(G[i], self.AND(P[i], G[j]))
                    P2[i] = self.AND(P[i], P[j])
            G, P = G2, P2
            step *= 2
        return G[: len(g)]

    def add(self, x, y):
        lo, hi = x.lo + y.lo, x.hi + y.hi
        w = width_for(lo, hi)
        if x.constant == 0:
            return Word(self.resize(y, w), lo, hi)
        if y.constant == 0:
            return Word(self.resize(x, w), lo, hi)
        return Word(self._adder(self.resize(x, w), self.resize(y, w), self.zero), lo, hi)

    def sub(self, x, y):
        lo, hi = x.lo - y.hi, x.hi - y.lo
        w = width_for(lo, hi)
        if y.constant == 0:
            return Word(self.resize(x, w), lo, hi)
        nb = [self.NOT(b) for b in self.resize(y, w)]
        return Word(self._adder(self.resize(x, w), nb, self.one), lo, hi)

    def neg(self, x):
        return self.sub(self.const_word(0), x)

    def shl(self, x, k):
        return Word([self.zero] * k + list(x.bits), x.lo << k, x.hi << k)

    def div2(self, x):
        lo, hi = x.lo >> 1, x.hi >> 1
        return self.make(list(x.bits[1:]) + ([x.bits[-1]] if x.signed else []), lo, hi)

    def gate_word(self, s, x):
        """``x`` when the wire ``s`` is 1, else 0."""
        lo, hi = min(0, x.lo), max(0, x.hi)
        return Word([self.AND(s, b) for b in self.resize(x, width_for(lo, hi))], lo, hi)

    def mul(self, x, y, allow_general=False):
        if x.constant is None and y.constant is not None:
            x, y = y, x
        if x.constant is not None:
            return self._mul_const(x.constant, y)
        if y.lo >= 0 and y.hi <= 1:
            x, y = y, x
        if x.lo >= 0 and x.hi <= 1:
            return self.gate_word(self.as_bool(x), y)
        if not allow_general:
            raise CompileError("product of two variable values needs iterated addition")
        if x.signed and y.signed:
            raise CompileError("product of two signed values is not supported")
        if x.signed:
            x, y = y, x
        parts = [self.shl(self.gate_word(b, y), j) for j, b in enumerate(x.bits)]
        lo = min(x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi)
        hi = max(x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi)
        total = self.sum_words(parts)
        return Word(self.resize(total, width_for(lo, hi)), lo, hi)

    def _mul_const(self, c, y):
        if c == 0 or y.constant == 0:
            return self.const_word(0)
        if y.constant is not None:
            return self.const_word(c * y.constant)
        parts = [self.shl(y, j) for j in range(abs(c).bit_length()) if (abs(c) >> j) & 1]
        total = self.sum_words(parts)
        return self.neg(total) if c < 0 else total

    def sum_words(self, words):
        """Iterated addition: counting rounds in unbounded mode, an adder tree otherwise."""
        words = [w for w in words if w.constant != 0]
        if not words:
            return self.const_word(0)
        if len(words) == 1:
            return words[0]
        if self.bounded:
            while len(words) > 1:
                nxt = [self.add(words[i], words[i + 1]) for i in range(0, len(words) - 1, 2)]
                if len(words) % 2:
                    nxt.append(words[-1])
                words = nxt
            return words[0]
        return self.count_sum(words)

    def count_sum(self, words, rounds=3):
        """Constant-depth sum of a few words.

        Each round replaces every column by the binary count of its bits;
        the count bits are two-level formulas over the column, so a round
        has fixed depth.  Running a fixed minimum number of rounds keeps the
        depth independent of how many words came in.
        """
        lo = sum(w.lo for w in words)
        hi = sum(w.hi for w in words)
        W = max(width_for(lo, hi), _MIN_SUM_WIDTH)
        cols = [[] for _ in range(W)]
        offset = 0
        for wd in words:
            for i, b in enumerate(self.resize(wd, W)):
                if b == self.one:
                    offset += 1 << i
                elif b != self.zero:
                    cols[i].append(b)
        done = 0
        while done < rounds or max(len(c) for c in cols) > 2:
            height = max(len(c) for c in cols)
            if height > _COUNT_LIMIT:
                raise CompileError(f"too many addends ({height}) for a constant-depth sum")
            new = [[] for _ in range(W)]
            for i, col in enumerate(cols):
                for r, b in enumerate(self._count_bits(col)):
                    if i + r < W:
                        new[i + r].append(b)
            cols = new
            done += 1
        a = [c[0] if len(c) > 0 else self.zero for c in cols]
        b = [c[1] if len(c) > 1 else self.zero for c in cols]
        bits = self._adder(a, b, self.zero)
        if offset:
            bits = self._adder(bits, self.resize(self.const_word(offset % (1 << W)), W), self.zero)
        return Word(bits, lo, hi)

    def _count_bits(self, col):
        """Binary digits of the number of ones among ``col``, as DNF formulas."""
        m = len(col)
        if m == 0:
            return []
        if m == 1:
            return [col[0]]
        terms = {}
        for assign in product((0, 1), repeat=m):
            cnt = sum(assign)
            if cnt:
                lits = [a if v else self.NOT(a) for a, v in zip(col, assign)]
                terms.setdefault(cnt, []).append(self.AND(*lits))
        out = []
        for r in range(m.bit_length()):
            out.append(self.OR(*(t for cnt, ts in terms.items() if (cnt >> r) & 1 for t in ts)))
        return out

    # -- predicates -------------------------------------------------------

    def nonzero(self, x):
        return self.OR(*x.bits)

    def positive(self, x):
        if x.lo > 0:
            return self.one
        if x.hi <= 0:
            return self.zero
        if x.signed:
            return self.AND(self.NOT(x.bits[-1]), self.OR(*x.bits[:-1]))
        return self.OR(*x.bits)

    def equals(self, x, c):
        """Wire for ``x == c``."""
        if not x.lo <= c <= x.hi:
            return self.zero
        bits = self.resize(self.const_word(c), x.width) if x.width else []
        lits = [b if cb == self.one else self.NOT(b) for b, cb in zip(x.bits, bits)]
        return self.AND(*lits)

    def greater(self, x, c):
        """Wire for ``x > c``."""
        return self.positive(self.sub(x, self.const_word(c)))

    def select(self, pairs):
        """OR of ``guard AND word`` over one-hot guards."""
        pairs = [(s, x) for s, x in pairs if s != self.zero]
        if not pairs:
            return self.const_word(0)
        lo = min(x.lo for _, x in pairs)
        hi = max(x.hi for _, x in pairs)
        if len(pairs) > 1:
            lo, hi = min(lo, 0), max(hi, 0)
        w = width_for(lo, hi)
        cols = [self.resize(x, w) for _, x in pairs]
        bits = [self.OR(*(self.AND(s, c[i]) for (s, _), c in zip(pairs, cols))) for i in range(w)]
        return Word(bits, lo, hi)

    # -- output -----------------------------------------------------------

    def finish(self, outputs):
        """Circuit with the inputs first and only the gates feeding ``outputs``."""
        live = set(range(self.n_inputs)) | set(outputs)
        for gid in range(len(self.gates) - 1, -1, -1):
            if gid in live:
                live.update(self.gates[gid].args)
        remap = {}
        gates = []
        for gid, g in enumerate(self.gates):
            if gid in live:
                remap[gid] = len(gates)
                gates.append(Gate(g.op, g.param, tuple(remap[a] for a in g.args)))
        return Circuit(self.n_inputs, gates, [remap[o] for o in outputs], self.mode)
