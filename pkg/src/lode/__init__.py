"""Functions defined by ordinary differential equations along the bit length.

Programs are written in a small ``.lode`` language (or built from the
``expr`` constructors), evaluated exactly, classified into schema families
with their circuit classes, and compiled into Boolean circuits.
"""

from .expr import AnalysisError, EvalError, degree
from .interp import eval_closed_strict, eval_fast, eval_naive, trace
from .schema import Program, classify, decompose_linear, wellformed
from .syntax import ParseError, format_program, load_source, parse_expr, parse_program

__all__ = [
    "AnalysisError",
    "EvalError",
    "ParseError",
    "Program",
    "classify",
    "decompose_linear",
    "degree",
    "eval_closed_strict",
    "eval_fast",
    "eval_naive",
    "format_program",
    "load_source",
    "parse_expr",
    "parse_program",
    "trace",
    "wellformed",
]
