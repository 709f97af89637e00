"""
From ODEs to circuits
=====================

Each stdlib entry compiles to a circuit family.  Constant-depth classes stay
flat as the input grows; the NC1 entries gain a fixed amount per doubling.
"""

from lode.circuit import circ_eval, compile_circuit, depth, histogram, size
from lode.stdlib import stdlib_get
from lode.verify import depth_growth

parity = stdlib_get("parity").program
c = compile_circuit(parity, "parity", 8)
print(c.meta["backend"], depth(c), size(c), histogram(c))

# inputs are LSB first: 10110100 is 45
print(circ_eval(c, [1, 0, 1, 1, 0, 1, 0, 0]))

for name in ("bcount", "bsearch", "logitadd", "concat1", "fourbrn"):
    rep = depth_growth(stdlib_get(name).program, name, [4, 8, 16, 32])
    print(rep.to_text())
