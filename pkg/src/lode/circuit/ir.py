"""Gate-level circuits: evaluation, metrics, validation and the text format."""

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import reduce
from operator import and_, or_, xor

OPS = ("IN", "CONST", "NOT", "AND", "OR", "XOR", "TH", "MACRO")
MODES = ("bounded2", "unbounded")

AC0 = frozenset({"NOT", "AND", "OR"})
ACC2 = AC0 | {"XOR"}
TC0 = AC0 | {"TH"}
NC1 = AC0


class CircuitError(Exception):
    pass


class FormatError(CircuitError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Gate:
    op: str
    param: object = None
    args: tuple = ()


@dataclass
class Circuit:
    n_inputs: int
    gates: list
    outputs: list
    mode: str = "unbounded"
    # Not serialized: value range of the output word and compiler notes.
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise CircuitError(f"unknown fan-in mode {self.mode!r}")


def circ_eval(c, bits):
    """Evaluate on one input (a sequence of 0/1) and return the output bits."""
    if len(bits) != c.n_inputs:
        raise CircuitError(f"circuit has {c.n_inputs} inputs, got {len(bits)}")
    packed = sum((b & 1) << i for i, b in enumerate(bits))
    out = circ_eval_batch(c, [packed])[0]
    return [(out >> i) & 1 for i in range(len(c.outputs))]


def _threshold(args, k, mask):
    """Lane-wise ``popcount(args) >= k`` on bit-sliced integers."""
    if k <= 0:
        return mask
    if k > len(args):
        return 0
    counter = []
    for a in args:
        carry = a
        for j in range(len(counter)):
            if not carry:
                break
            counter[j], carry = counter[j] ^ carry, counter[j] & carry
        if carry:
            counter.append(carry)
    if k.bit_length() > len(counter):
        return 0
    gt, eq = 0, mask
    for j in range(len(counter) - 1, -1, -1):
        cj = counter[j]
        if (k >> j) & 1:
            eq &= cj
        else:
            gt |= eq & cj
            eq &= ~cj & mask
    return gt | eq


def circ_eval_batch(c, inputs):
    """Evaluate many inputs at once; each input and output is an int, bit i = wire i.

    Every wire holds one Python integer whose bit ``k`` is its value on
    input ``k``, so a gate costs one big-integer operation for the whole batch.
    """
    lanes = len(inputs)
    if not lanes:
        return []
    mask = (1 << lanes) - 1
    cols = []
    for i in range(c.n_inputs):
        s = "".join("1" if (v >> i) & 1 else "0" for v in reversed(inputs))
        cols.append(int(s, 2))
    val = [0] * len(c.gates)
    for gid, g in enumerate(c.gates):
        op = g.op
        if op == "IN":
            val[gid] = cols[g.param]
        elif op == "CONST":
            val[gid] = mask if g.param else 0
        elif op == "NOT":
            val[gid] = val[g.args[0]] ^ mask
        elif op == "AND":
            val[gid] = reduce(and_, (val[a] for a in g.args), mask)
        elif op == "OR":
            val[gid] = reduce(or_, (val[a] for a in g.args), 0)
        elif op == "XOR":
            val[gid] = reduce(xor, (val[a] for a in g.args), 0)
        elif op == "TH":
            val[gid] = _threshold([val[a] for a in g.args], g.param, mask)
        elif op == "MACRO":
            raise CircuitError(f"gate g{gid} is a {g.param} macro and cannot be evaluated")
        else:
            raise CircuitError(f"unknown op {op!r}")
    outs = [val[o] for o in c.outputs]
    result = []
    for k in range(lanes):
        result.append(sum(((w >> k) & 1) << j for j, w in enumerate(outs)))
    return result


def gate_depths(c):
    d = [0] * len(c.gates)
    for gid, g in enumerate(c.gates):
        if g.op in ("IN", "CONST"):
            continue
        d[gid] = 1 + max((d[a] for a in g.args), default=0)
    return d


def depth(c):
    """Longest path to an output, counting every gate except inputs and constants."""
    d = gate_depths(c)
    return max((d[o] for o in c.outputs), default=0)


def size(c):
    return sum(1 for g in c.gates if g.op not in ("IN", "CONST"))


def histogram(c):
    return dict(Counter(g.op for g in c.gates if g.op not in ("IN", "CONST")))


def validate(c, mode=None, allowed=None):
    """Diagnostics for fan-in, gate kinds and structure; empty means valid.

    ``allowed`` names the permitted logic gates (IN and CONST are always
    allowed).  MACRO gates are always reported.
    """
    mode = mode or c.mode
    out = []
    for gid, g in enumerate(c.gates):
        where = f"g{gid}"
        if g.op not in OPS:
            out.append(f"{where}: unknown op {g.op}")
            continue
        if any(a >= gid or a < 0 for a in g.args):
            out.append(f"{where}: argument is not an earlier gate")
        if g.op in ("IN", "CONST"):
            if g.args:
                out.append(f"{where}: {g.op} takes no arguments")
            continue
        if g.op == "MACRO":
            out.append(f"{where}: non-primitive MACRO {g.param}")
            continue
        if allowed is not None and g.op not in allowed:
            out.append(f"{where}: {g.op} gate not allowed")
        if g.op == "NOT" and len(g.args) != 1:
            out.append(f"{where}: NOT takes one argument")
        if mode == "bounded2":
            if g.op == "TH":
                out.append(f"{where}: TH gate in bounded fan-in mode")
            elif len(g.args) > 2:
                out.append(f"{where}: fan-in {len(g.args)} exceeds 2")
    for o in c.outputs:
        if not 0 <= o < len(c.gates):
            out.append(f"output g{o} does not exist")
    return out


# -- text format -----------------------------------------------------------------


def _param_text(g):
    return "" if g.param is None else f"[{g.param}]"


def serialize(c):
    lines = [f"circ v1 inputs={c.n_inputs} mode={c.mode}"]
    for gid, g in enumerate(c.gates):
        args = ", ".join(f"g{a}" for a in g.args)
        args = f"( {args} )" if args else "()"
        lines.append(f"g{gid} = {g.op}{_param_text(g)}{args}")
    lines.append("outputs = " + ",".join(f"g{o}" for o in c.outputs))
    return ("\n".join(lines) + "\n").encode("utf-8")


_HEADER = re.compile(r"circ v1 inputs=(\d+) mode=(bounded2|unbounded)$")
_GATE = re.compile(r"g(\d+) = ([A-Z]+)(?:\[([^\]]*)\])?\((.*)\)$")


def deserialize(data):
    """Parse the text format; forward references and id gaps are errors."""
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty input", 1)
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise FormatError("bad header", 1)
    n_inputs, mode = int(m.group(1)), m.group(2)
    gates, first_in, first_const = [], {}, {}
    outputs = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if outputs is not None:
            raise FormatError("text after the outputs line", lineno)
        if line.startswith("outputs ="):
            body = line[len("outputs =") :].strip()
            names = [s.strip() for s in body.split(",")] if body else []
            outputs = [_ref(s, len(gates), first_in, first_const, lineno) for s in names]
            continue
        m = _GATE.match(line)
        if m is None:
            raise FormatError(f"cannot parse gate line {line!r}", lineno)
        gid, op, param, argtext = int(m.group(1)), m.group(2), m.group(3), m.group(4)
        if gid != len(gates):
            raise FormatError(f"expected id g{len(gates)}, found g{gid}", lineno)
        if op not in OPS:
            raise FormatError(f"unknown op {op}", lineno)
        argtext = argtext.strip()
        names = [s.strip() for s in argtext.split(",")] if argtext else []
        args = tuple(_ref(s, gid, first_in, first_const, lineno) for s in names)
        if op in ("IN", "CONST", "TH"):
            if param is None or not param.isdigit():
                raise FormatError(f"{op} needs a numeric parameter", lineno)
            param = int(param)
            if op == "IN" and param >= n_inputs:
                raise FormatError(f"input index {param} out of range", lineno)
            if op == "CONST" and param not in (0, 1):
                raise FormatError("CONST must be 0 or 1", lineno)
        elif op == "MACRO":
            if not param:
                raise FormatError("MACRO needs a name", lineno)
        elif param is not None:
            raise FormatError(f"{op} takes no parameter", lineno)
        if op == "IN":
            first_in.setdefault(param, gid)
        if op == "CONST":
            first_const.setdefault(param, gid)
        gates.append(Gate(op, param, args))
    if outputs is None:
        raise FormatError("missing outputs line", len(lines) + 1)
    return Circuit(n_inputs, gates, outputs, mode)


def _ref(name, limit, first_in, first_const, lineno):
    if name.startswith("g") and name[1:].isdigit():
        ref = int(name[1:])
        if ref >= limit:
            raise FormatError(f"forward reference {name}", lineno)
        return ref
    if name.startswith("in") and name[2:].isdigit():
        if int(name[2:]) not in first_in:
            raise FormatError(f"{name} used before any IN[{name[2:]}] gate", lineno)
        return first_in[int(name[2:])]
    if name in ("const0", "const1"):
        if int(name[5]) not in first_const:
            raise FormatError(f"{name} used before any CONST gate", lineno)
        return first_const[int(name[5])]
    raise FormatError(f"bad argument {name!r}", lineno)
