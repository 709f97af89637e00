"""Surface syntax for ``.lode`` files: tokenizer, recursive-descent parser, printer.

A file is a sequence of definitions::

    # comments run to the end of the line
    fun rsh(x, y) { init: y; d/dl: div2(f) - f; }
    fun bitp(x, y) = rsh(x, y) - 2 * rsh(x + 1, y);

Unary minus binds tighter than ``*``, which binds tighter than ``+``/``-``;
``-e`` is read as ``0 - e``.
"""

import re
from dataclasses import dataclass, field

from .expr import (
    ZERO,
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
)
from .schema import Defn, Ode, Program

_UNARY = {"sg": Sg, "cosg": Cosg, "div2": Div2, "len": Len, "len2": Len2}
_BINARY = {"bit": Bit, "smash": Smash}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<deriv>d/dl2?)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(),;{}=+\-*:])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text):
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


@dataclass
class SourceFile:
    path: str
    text: str
    program: Program
    spans: dict = field(default_factory=dict)


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind != "eof":
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")

    def ident(self):
        t = self.tok
        if t.kind != "ident":
            self.error(f"expected a name, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def program(self):
        defns, spans = [], {}
        while self.tok.kind != "eof":
            start = self.tok
            d = self.defn()
            defns.append(d)
            spans.setdefault(d.name, (start.line, self.toks[self.i - 1].line))
        return Program(tuple(defns)), spans

    def defn(self):
        if self.tok.text != "fun":
            self.error(f"expected 'fun', found {self.tok.text or 'end of input'!r}")
        self.i += 1
        name = self.ident()
        self.expect("(")
        params = [self.ident()]
        while self.accept(","):
            params.append(self.ident())
        self.expect(")")
        if self.accept("="):
            body = self.expr()
            self.expect(";")
            return Defn(name, tuple(params), body)
        self.expect("{")
        if self.tok.text != "init":
            self.error("expected 'init:'")
        self.i += 1
        self.expect(":")
        init = self.expr()
        self.expect(";")
        if self.tok.kind != "deriv":
            self.error("expected 'd/dl:' or 'd/dl2:'")
        along = "L2" if self.tok.text == "d/dl2" else "L"
        self.i += 1
        self.expect(":")
        rhs = self.expr()
        self.expect(";")
        annotations = []
        while self.tok.text in ("nonneg", "bool01"):
            annotations.append(self.tok.text)
            self.i += 1
            self.expect(";")
        self.expect("}")
        return Defn(name, tuple(params), Ode(along, init, rhs, frozenset(annotations)))

    def expr(self):
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            r = self.term()
            e = Add(e, r) if op == "+" else Sub(e, r)
        return e

    def term(self):
        e = self.unary()
        while self.accept("*"):
            e = Mul(e, self.unary())
        return e

    def unary(self):
        if self.accept("-"):
            return Sub(ZERO, self.unary())
        return self.atom()

    def atom(self):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return Const(int(t.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "ident":
            self.error(f"expected an expression, found {t.text or 'end of input'!r}")
        self.i += 1
        if t.text == "f":
            if self.tok.text == "(":
                self.error("'f' names the function being defined and takes no arguments")
            return SelfRef()
        if self.tok.text != "(":
            if t.text in _UNARY or t.text in _BINARY:
                self.error(f"builtin {t.text!r} needs arguments", t)
            return Var(t.text)
        self.i += 1
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        if t.text in _UNARY:
            if len(args) != 1:
                self.error(f"{t.text} takes one argument", t)
            return _UNARY[t.text](args[0])
        if t.text in _BINARY:
            if len(args) != 2:
                self.error(f"{t.text} takes two arguments", t)
            return _BINARY[t.text](*args)
        return Call(t.text, tuple(args))


def parse_program(text):
    """Parse ``.lode`` source into a :class:`Program`; raises :class:`ParseError`."""
    return _Parser(text).program()[0]


def parse_expr(text):
    p = _Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return e


def load_source(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    program, spans = _Parser(text).program()
    return SourceFile(str(path), text, program, spans)


# -- printing ----------------------------------------------------------------

_NAMES = {Sg: "sg", Cosg: "cosg", Div2: "div2", Len: "len", Len2: "len2"}


def format_expr(e, level=0):
    """Render ``e`` so that parsing the text gives ``e`` back."""
    t = type(e)
    if t is Add or (t is Sub and e.left != ZERO):
        op = " + " if t is Add else " - "
        s = format_expr(e.left, 0) + op + format_expr(e.right, 1)
        return f"({s})" if level > 0 else s
    if t is Sub:
        s = "-" + format_expr(e.right, 2)
        return f"({s})" if level > 2 else s
    if t is Mul:
        s = format_expr(e.left, 1) + " * " + format_expr(e.right, 2)
        return f"({s})" if level > 1 else s
    if t is Const:
        return str(e.value) if e.value >= 0 else f"(0 - {-e.value})"
    if t is Var:
        return e.name
    if t is SelfRef:
        return "f"
    if t in _NAMES:
        return f"{_NAMES[t]}({format_expr(e.arg)})"
    if t is Bit:
        return f"bit({format_expr(e.index)}, {format_expr(e.value)})"
    if t is Smash:
        return f"smash({format_expr(e.left)}, {format_expr(e.right)})"
    if t is Call:
        return f"{e.fun}(" + ", ".join(format_expr(a) for a in e.args) + ")"
    raise TypeError(f"cannot format {e!r}")


def format_defn(d):
    head = f"fun {d.name}(" + ", ".join(d.params) + ")"
    if not d.is_ode:
        return f"{head} = {format_expr(d.body)};"
    ode = d.body
    deriv = "d/dl2" if ode.along == "L2" else "d/dl"
    lines = [
        head + " {",
        f"  init: {format_expr(ode.init)};",
        f"  {deriv}: {format_expr(ode.rhs)};",
    ]
    lines += [f"  {a};" for a in sorted(ode.annotations)]
    lines.append("}")
    return "\n".join(lines)


def format_program(p):
    return "\n".join(format_defn(d) for d in p.defns) + "\n"
