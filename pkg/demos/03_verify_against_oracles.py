"""
Checking an entry end to end
============================

``verify_program`` runs the evaluator cross-checks, the closed form for
strict schemas, the class check and circuit agreement.  A mutated program
shows what a failure looks like.
"""

from lode import parse_program
from lode.stdlib import stdlib_get
from lode.verify import check_oracle, verify_program

bcount = stdlib_get("bcount").program
for rep in verify_program(bcount, exhaustive_bits=8):
    print(rep.to_text())

print(check_oracle(bcount, "bcount", "popcount", [(x,) for x in range(512)]).to_text())

# flip the init bit of parity and the oracle notices
bad = parse_program("""
fun parity(x, y) {
  init: 1 - bit(0, y);
  d/dl: -f + sg(f) * cosg(bit(len(x) + 1, y)) + cosg(f) * sg(bit(len(x) + 1, y));
}
""")
print(check_oracle(bad, "parity", "parity", [(x,) for x in range(64)]).to_text())
