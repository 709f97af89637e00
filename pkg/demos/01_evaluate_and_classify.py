"""
Evaluating and classifying an ODE
=================================

Parity written as a derivation along the length of ``x``.  The value only
changes where ``len`` jumps, so the fast evaluator visits one point per bit.
"""

from lode import classify, eval_fast, eval_naive, parse_program, trace

src = """
fun parity(x, y) {
  init: bit(0, y);
  d/dl: -f + sg(f) * cosg(bit(len(x) + 1, y)) + cosg(f) * sg(bit(len(x) + 1, y));
}
"""
prog = parse_program(src)

# both evaluators agree on small inputs
for x in (0, 1, 5, 22, 180):
    print(x, eval_naive(prog, "parity", [x, x]), eval_fast(prog, "parity", [x, x]))

# jump points of the derivation
print(trace(prog, "parity", [45, 45]).to_text())

# the classifier names the schema and the circuit class it lands in
print(classify(prog, "parity").to_text())

# a thousand-bit input is instant for the jump evaluator
big = 2**1000 - 1
print(eval_fast(prog, "parity", [big, big]))
