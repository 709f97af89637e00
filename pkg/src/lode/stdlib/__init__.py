"""Worked examples shipped as ready-made programs.

Every entry is built here from expression constructors and also ships as a
``.lode`` file next to this module; the test suite checks that both forms
are the same program.  Parameterized entries carry several instantiations
(``variants``), each with its own expected classification.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..expr import Bit, Call, Const, Cosg, Div2, Len, Len2, SelfRef, Sg, Var
from ..schema import Defn, Ode, Program

LODE_DIR = Path(__file__).with_name("lode")

f = SelfRef()
x, y, w, t, v = (Var(n) for n in "xywtv")


def sg(e):
    return Sg(e)


def cosg(e):
    return Cosg(e)


def div2(e):
    return Div2(e)


def len_(e):
    return Len(e)


def len2(e):
    return Len2(e)


def bit(i, e):
    return Bit(_c(i), _c(e))


def _c(e):
    return Const(e) if isinstance(e, int) else e


def call(name, *args):
    return Call(name, tuple(_c(a) for a in args))


def explicit(name, params, body):
    return Defn(name, tuple(params.split()), _c(body))


def ode(name, params, init, rhs, *annotations, along="L"):
    return Defn(name, tuple(params.split()), Ode(along, _c(init), rhs, frozenset(annotations)))


@dataclass(frozen=True)
class Variant:
    fun: str
    family: str
    cls: str
    instance: Optional[str] = None


@dataclass(frozen=True)
class StdEntry:
    name: str
    program: Program
    family: str
    cls: str
    oracle: Optional[str] = None
    variants: tuple = field(default=())

    @property
    def fun(self):
        return self.name

    @property
    def path(self):
        return LODE_DIR / f"{self.name}.lode"


def _entry(name, defns, family, cls, oracle=None, variants=()):
    variants = (Variant(name, family, cls, name),) + tuple(variants)
    return StdEntry(name, Program(tuple(defns)), family, cls, oracle, variants)


def _rsh():
    return ode("rsh", "x y", y, div2(f) - f)


def _build():
    entries = []

    entries.append(_entry("rsh", [_rsh()], "ODE3", "FAC0", "shift"))

    entries.append(
        _entry(
            "bitp",
            [_rsh(), explicit("bitp", "x y", call("rsh", x, y) - 2 * call("rsh", x + 1, y))],
            "COMPOSITION",
            "FAC0",
        )
    )

    # CRN: f(0) = g(w); f gains one bit per step, chosen by the bit of y read
    # from the top, so crn(x, x, w) replays the recursion on notation.
    z = bit(len_(y) - len_(x) - 1, y)
    crn = []
    crn_variants = []
    for name, h0, h1, g in (
        ("crn", bit(len_(x), w), cosg(bit(len_(x), w)), 1),
        ("crn_copy", 0, 1, 0),
        ("crn_mix", 1, sg(len_(x) - 2) * bit(0, w), bit(1, w)),
    ):
        crn += [
            explicit(f"{name}_h0", "x w", h0),
            explicit(f"{name}_h1", "x w", h1),
            explicit(f"{name}_g", "w", g),
            ode(
                name,
                "x y w",
                call(f"{name}_g", w),
                f + call(f"{name}_h0", x, w) * cosg(z) + call(f"{name}_h1", x, w) * sg(z),
            ),
        ]
        if name != "crn":
            crn_variants.append(Variant(name, "ODE1", "FAC0", name))
    entries.append(_entry("crn", crn, "ODE1", "FAC0", "crn_direct", crn_variants))

    b = bit(len_(x) + 1, y)
    entries.append(
        _entry(
            "parity",
            [ode("parity", "x y", bit(0, y), -f + (sg(f) * cosg(b) + cosg(f) * sg(b)))],
            "B0ODE",
            "FACC2",
            "parity",
        )
    )

    bs = []
    for name, r in (
        ("bsearch", bit(len_(x), y)),
        ("bsearch_zeros", cosg(bit(len_(x), y))),
        ("bsearch_pairs", sg(bit(len_(x), y) + bit(len_(x) + 1, y))),
    ):
        bs += [
            explicit(f"{name}_r", "x y", r),
            ode(name, "x y", sg(call(f"{name}_r", 0, y)), (call(f"{name}_r", x, y) - 1) * f),
        ]
    bs += [
        ode("bsearch_bound", "x y", y, (sg(f - 3) - 1) * f),
        ode("bsearch_guard", "x y", y, (sg(f) * bit(len_(x), y) - 1) * f),
    ]
    entries.append(
        _entry(
            "bsearch",
            bs,
            "ODE0",
            "FAC0",
            None,
            [
                Variant("bsearch_zeros", "ODE0", "FAC0"),
                Variant("bsearch_pairs", "ODE0", "FAC0"),
                Variant("bsearch_bound", "ACODE_OFFSET", "FAC0"),
                Variant("bsearch_guard", "ACODE", "FAC0"),
            ],
        )
    )

    entries.append(
        _entry(
            "bcount",
            [ode("bcount", "x y", 0, bit(len_(x), y))],
            "PODE_STRICT",
            "FTC0",
            "popcount",
        )
    )

    entries.append(
        _entry(
            "itadd",
            [
                ode("itadd", "x y", bit(0, y), bit(len_(x), y) + bit(len_(x) + 1, y)),
                ode("itadd_signed", "x y", 1, 3 * bit(len_(x), y) - 1),
                explicit("itadd_calls_h", "x y", bit(len_(x), y) * bit(len_(x) + 1, y)),
                ode("itadd_calls", "x y", 0, call("itadd_calls_h", x, y) + len_(x)),
            ],
            "PODE_STRICT",
            "FTC0",
            None,
            [
                Variant("itadd_signed", "PODE_STRICT", "FTC0"),
                Variant("itadd_calls", "PODE_STRICT", "FTC0"),
            ],
        )
    )

    k = bit(len_(x), y)
    entries.append(
        _entry(
            "kk_mod2",
            [ode("kk_mod2", "x y", 0, -k * f + k * b, "bool01")],
            "KK_ACC2",
            "FACC2",
        )
    )

    k0 = bit(len_(x), y)
    entries.append(
        _entry(
            "concat1",
            [
                ode("concat1", "x y", bit(0, y), f + (sg(f) * b + cosg(f) * cosg(b))),
                ode("concat1_flat", "x y", bit(0, y), f + (sg(f) * k0 + cosg(f) * k0)),
                ode(
                    "concat1_offset",
                    "x y",
                    bit(0, y),
                    f + (sg(f - 2) * k0 + cosg(f - 2) * cosg(k0)),
                ),
            ],
            "NC1_CONCAT",
            "FNC1",
            None,
            [
                Variant("concat1_flat", "NC1_CONCAT", "FNC1"),
                Variant("concat1_offset", "NC1_CONCAT", "FNC1"),
            ],
        )
    )

    # 4-BRN: values stay in 0..4 and each step applies h_z(len(prefix), f),
    # selected by the current bit z of y read from the top.
    fb = []
    fb_variants = []
    for name, h0, h1, g in (
        ("fourbrn", div2(v + 4), div2(v) + 2 * bit(0, t), 0),
        ("fourbrn_b", cosg(v - 3) * (v + 1), bit(1, v) + 3 * bit(2, v) + bit(0, t), 3),
        ("fourbrn_c", 4 * sg(v), cosg(v - 1) + 2 * bit(0, len_(t)), 1),
    ):
        hz = f"{name}_hz"
        fb += [
            explicit(f"{name}_h0", "t v", h0),
            explicit(f"{name}_h1", "t v", h1),
            explicit(
                hz,
                "x y v",
                cosg(z) * call(f"{name}_h0", len_(x), v) + sg(z) * call(f"{name}_h1", len_(x), v),
            ),
            ode(
                name,
                "x y",
                g,
                -f
                + call(hz, x, y, 0) * cosg(f)
                + call(hz, x, y, 1) * sg(f) * cosg(f - 1)
                + call(hz, x, y, 2) * sg(f - 1) * cosg(f - 2)
                + call(hz, x, y, 3) * sg(f - 2) * cosg(f - 3)
                + call(hz, x, y, 4) * sg(f - 3) * cosg(f - 4),
            ),
        ]
        if name != "fourbrn":
            fb_variants.append(Variant(name, "BODE", "FNC1", name))
    entries.append(_entry("fourbrn", fb, "BODE", "FNC1", "fourbrn_direct", fb_variants))

    entries.append(
        _entry(
            "sum_calls",
            [
                ode(
                    "sum_calls",
                    "x y",
                    bit(0, y),
                    sg(f) * (len_(x) + bit(len_(x), y)) + cosg(f) * bit(len_(x), y),
                )
            ],
            "AC1_SUM",
            "FAC1",
        )
    )

    entries.append(
        _entry(
            "logitadd",
            [ode("logitadd", "x y", bit(0, y), div2(y) + bit(len_(x), y), along="L2")],
            "L2_STRICT",
            "FAC0",
            "logadd_direct",
        )
    )

    entries.append(
        _entry(
            "l2_guess",
            [
                ode(
                    "l2_guess",
                    "x y",
                    bit(0, y),
                    sg(f) * bit(len_(x), y) + cosg(f) * (div2(y) + 1),
                    along="L2",
                )
            ],
            "L2_NONSTRICT",
            "FTC0",
        )
    )

    entries.append(
        _entry(
            "l2_linear",
            [
                ode(
                    "l2_linear",
                    "x y",
                    1,
                    (bit(len_(x), y) + 1) * f + sg(f - 5) * len_(x),
                    along="L2",
                )
            ],
            "L2_LINEAR",
            "FNC1",
        )
    )
    return {e.name: e for e in entries}


_CATALOG = _build()


def stdlib_list():
    """Names of the catalog entries, in a fixed order."""
    return list(_CATALOG)


def stdlib_get(name):
    try:
        return _CATALOG[name]
    except KeyError:
        raise KeyError(f"no stdlib entry named {name!r}") from None


def stdlib_source(name):
    """Text of the entry's ``.lode`` file."""
    return stdlib_get(name).path.read_text(encoding="utf-8")
