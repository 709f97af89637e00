"""Command line driver: ``lode check|eval|compile|simulate|verify|bench``.

Exit codes: 0 success, 1 a check or evaluation failed, 2 usage error,
3 the input file could not be parsed.
"""

import argparse
import json
import sys

from .circuit import (
    BACKENDS,
    CircuitError,
    CompileError,
    circ_eval,
    compile_circuit,
    depth,
    deserialize,
    serialize,
    size,
)
from .expr import EvalError
from .interp import eval_closed_strict, eval_fast, eval_naive, trace
from .schema import classify, wellformed
from .stdlib import stdlib_get, stdlib_list
from .syntax import ParseError, load_source
from .verify import check_oracle, depth_growth, verify_program

OK, FAILED, USAGE, PARSE = 0, 1, 2, 3


class _Exit(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load(path):
    try:
        src = load_source(path)
    except OSError as exc:
        raise _Exit(USAGE, f"{path}: {exc.strerror}") from None
    except ParseError as exc:
        raise _Exit(PARSE, f"{path}:{exc.line}:{exc.col}: {exc.message}") from None
    diags = wellformed(src.program)
    if diags:
        lines = []
        for d in diags:
            line = src.spans.get(d.defn, (0, 0))[0]
            lines.append(f"{path}:{line}: {d}")
        raise _Exit(PARSE, "\n".join(lines))
    return src


def _fun(program, name):
    if name not in program:
        raise _Exit(USAGE, f"no function named {name!r}")
    return name


def _ints(text, what):
    try:
        return [int(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise _Exit(USAGE, f"{what} must be comma-separated integers") from None


def _stdlib_match(program):
    for name in stdlib_list():
        entry = stdlib_get(name)
        if entry.program == program:
            return entry
    return None


def _emit(args, records, text):
    if args.json:
        for r in records:
            print(json.dumps(r, default=str))
    else:
        print(text)


def cmd_check(args):
    src = _load(args.file)
    p = src.program
    names = [_fun(p, args.fun)] if args.fun else p.names
    reports = [classify(p, n) for n in names]
    _emit(args, [r.to_record() for r in reports], "\n".join(r.to_text() for r in reports))
    unknown = [r.fun for r in reports if r.family == "UNKNOWN"]
    if unknown and not args.allow_unknown:
        print(f"unrecognized: {', '.join(unknown)}", file=sys.stderr)
        return FAILED
    return OK


def cmd_eval(args):
    p = _load(args.file).program
    fun = _fun(p, args.fun)
    vals = _ints(args.args, "--args")
    if len(vals) != len(p[fun].params):
        raise _Exit(USAGE, f"{fun} takes {len(p[fun].params)} arguments, got {len(vals)}")
    try:
        if args.trace:
            tr = trace(p, fun, vals)
            print(tr.to_text())
            return OK
        if args.mode == "naive":
            value = eval_naive(p, fun, vals)
        elif args.mode == "closed":
            value = eval_closed_strict(p, fun, vals)
        else:
            value = eval_fast(p, fun, vals)
    except EvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILED
    print(value)
    return OK


def cmd_compile(args):
    p = _load(args.file).program
    fun = _fun(p, args.fun)
    if args.n < 0:
        raise _Exit(USAGE, "--n must be nonnegative")
    try:
        c = compile_circuit(p, fun, args.n, backend=args.backend, width=args.width)
    except CompileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILED
    with open(args.out, "wb") as fh:
        fh.write(serialize(c))
    print(
        f"{fun} n={args.n} backend={c.meta['backend']} inputs={c.n_inputs} "
        f"outputs={len(c.outputs)} depth={depth(c)} size={size(c)}"
    )
    for note in c.meta.get("notes", []):
        print(f"note: {note}")
    return OK


def cmd_simulate(args):
    try:
        with open(args.circ, "rb") as fh:
            c = deserialize(fh.read())
    except OSError as exc:
        raise _Exit(USAGE, f"{args.circ}: {exc.strerror}") from None
    except CircuitError as exc:
        raise _Exit(PARSE, f"{args.circ}: {exc}") from None
    bits = args.input.strip()
    if any(ch not in "01" for ch in bits):
        raise _Exit(USAGE, "--input must be a string of 0 and 1")
    if len(bits) != c.n_inputs:
        raise _Exit(USAGE, f"circuit has {c.n_inputs} inputs, got {len(bits)} bits")
    try:
        out = circ_eval(c, [int(ch) for ch in bits])
    except CircuitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILED
    print("".join(map(str, out)))
    return OK


def cmd_verify(args):
    p = _load(args.file).program
    funs = [_fun(p, args.fun)] if args.fun else None
    entry = _stdlib_match(p)
    expectations = {}
    if entry is not None:
        expectations = {v.fun: (v.family, v.cls) for v in entry.variants}
    reports = verify_program(
        p, funs, seed=args.seed, exhaustive_bits=args.exhaustive_bits, expectations=expectations
    )
    if entry is not None and entry.oracle:
        for v in entry.variants:
            if funs and v.fun not in funs:
                continue
            reports.append(_oracle_report(entry, v))
    _emit(args, [r.to_record() for r in reports], "\n".join(r.to_text() for r in reports))
    return OK if all(r.passed for r in reports) else FAILED


def _oracle_report(entry, variant):
    name = entry.oracle
    if name == "crn_direct":
        cases = [(x, w) for x in range(256) for w in (0, 1, 2, 5)]
    elif name in ("shift", "logadd_direct"):
        cases = [(x, y) for x in range(0, 256, 5) for y in range(256)]
    else:
        cases = [(x,) for x in range(1024)]
    instance = variant.instance if name in ("crn_direct", "fourbrn_direct") else None
    return check_oracle(entry.program, variant.fun, name, cases, instance)


def cmd_bench(args):
    p = _load(args.file).program
    fun = _fun(p, args.fun)
    sizes = _ints(args.sizes, "--sizes")
    try:
        rep = depth_growth(p, fun, sizes, backend=args.backend, width=args.width)
    except CompileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILED
    _emit(args, [rep.to_record()], rep.to_text())
    return OK if rep.passed else FAILED


def build_parser():
    ap = argparse.ArgumentParser(
        prog="lode",
        description="Evaluate, classify and compile functions defined by length-derivation ODEs.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", help="classify definitions")
    s.add_argument("file")
    s.add_argument("--fun")
    s.add_argument("--json", action="store_true")
    s.add_argument("--allow-unknown", action="store_true")
    s.set_defaults(run=cmd_check)

    s = sub.add_parser("eval", help="evaluate a function")
    s.add_argument("file")
    s.add_argument("--fun", required=True)
    s.add_argument("--args", required=True, help="comma-separated integers")
    s.add_argument("--mode", choices=("fast", "naive", "closed"), default="fast")
    s.add_argument("--trace", action="store_true", help="print every jump point")
    s.set_defaults(run=cmd_eval)

    s = sub.add_parser("compile", help="write a circuit for one input length")
    s.add_argument("file")
    s.add_argument("--fun", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--width", type=int, default=64, help="word width for the nc1 backend")
    s.add_argument("--backend", choices=sorted(BACKENDS))
    s.add_argument("--out", required=True)
    s.set_defaults(run=cmd_compile)

    s = sub.add_parser(
        "simulate",
        help="run a circuit file",
        description="Bit strings are least significant first: character i is input i, "
        "and output character i is output bit i.",
    )
    s.add_argument("--circ", required=True)
    s.add_argument("--input", required=True, help="input bits, LSB first")
    s.set_defaults(run=cmd_simulate)

    s = sub.add_parser("verify", help="run every applicable check")
    s.add_argument("file")
    s.add_argument("--fun")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--exhaustive-bits", type=int, default=10)
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_verify)

    s = sub.add_parser("bench", help="depth and size across input lengths")
    s.add_argument("file")
    s.add_argument("--fun", required=True)
    s.add_argument("--sizes", default="4,8,16,32,64")
    s.add_argument("--backend", choices=sorted(BACKENDS))
    s.add_argument("--width", type=int, default=64)
    s.add_argument("--json", action="store_true")
    s.set_defaults(run=cmd_bench)
    return ap


def run(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.run(args)
    except _Exit as exc:
        print(f"error: {exc}" if exc.code == USAGE else str(exc), file=sys.stderr)
        return exc.code


def main():
    sys.exit(run())
