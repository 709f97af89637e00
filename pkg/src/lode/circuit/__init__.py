"""Circuit families for classified programs."""

from .builder import Builder, CompileError, Word
from .compile import (
    BACKENDS,
    DEFAULT_BACKEND,
    compile_acc2,
    compile_circuit,
    compile_fac0,
    compile_nc1,
    compile_tc0,
)
from .ir import (
    AC0,
    ACC2,
    NC1,
    TC0,
    Circuit,
    CircuitError,
    FormatError,
    Gate,
    circ_eval,
    circ_eval_batch,
    depth,
    deserialize,
    histogram,
    serialize,
    size,
    validate,
)

__all__ = [
    "AC0",
    "ACC2",
    "BACKENDS",
    "Builder",
    "Circuit",
    "CircuitError",
    "CompileError",
    "DEFAULT_BACKEND",
    "FormatError",
    "Gate",
    "NC1",
    "TC0",
    "Word",
    "circ_eval",
    "circ_eval_batch",
    "compile_acc2",
    "compile_circuit",
    "compile_fac0",
    "compile_nc1",
    "compile_tc0",
    "depth",
    "deserialize",
    "histogram",
    "serialize",
    "size",
    "validate",
]
