"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from lode.expr import (
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

VARS = ("x1", "x2", "x3", "y")

consts = st.integers(min_value=0, max_value=6).map(Const)
variables = st.sampled_from(VARS).map(Var)


def exprs(self_ref=False, calls=(), max_leaves=12):
    """Random expression trees over ``VARS``; constants are nonnegative like parsed ones."""
    leaves = consts | variables
    if self_ref:
        leaves = leaves | st.just(SelfRef())

    def extend(sub):
        options = [
            st.builds(Add, sub, sub),
            st.builds(Sub, sub, sub),
            st.builds(Mul, sub, sub),
            st.builds(Div2, sub),
            st.builds(Sg, sub),
            st.builds(Cosg, sub),
            st.builds(Len, sub),
            st.builds(Len2, sub),
            st.builds(Bit, sub, sub),
            st.builds(Smash, sub, sub),
        ]
        for name, arity in calls:
            options.append(st.lists(sub, min_size=arity, max_size=arity).map(lambda a, n=name: Call(n, tuple(a))))
        return st.one_of(options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def boolean_candidates():
    """Expressions built the way boolean-shaped ones usually are, plus some that are not."""
    base = exprs(max_leaves=4)
    guards = st.builds(Sg, base) | st.builds(Cosg, base) | st.builds(Bit, base, base)

    def extend(sub):
        return st.one_of(
            st.builds(Mul, sub, sub),
            st.builds(lambda s: Sub(Const(1), s), sub),
            st.builds(lambda a, b, c: Add(Mul(a, Sg(c)), Mul(b, Cosg(c))), sub, sub, base),
            st.builds(Add, sub, sub),
        )

    return st.recursive(guards | st.sampled_from([Const(0), Const(1), Const(2)]), extend, max_leaves=6)


def random_circuit(rng, n_inputs=None, n_gates=None, mode=None):
    """A random well-formed circuit; gates only reference earlier ids."""
    from lode.circuit import Circuit, Gate

    n_inputs = rng.randint(1, 6) if n_inputs is None else n_inputs
    n_gates = rng.randint(0, 25) if n_gates is None else n_gates
    mode = mode or rng.choice(("bounded2", "unbounded"))
    gates = [Gate("IN", i) for i in range(n_inputs)]
    if rng.random() < 0.5:
        gates.append(Gate("CONST", rng.randint(0, 1)))
    for _ in range(n_gates):
        ops = ["NOT", "AND", "OR", "XOR"] + (["TH"] if mode == "unbounded" else [])
        op = rng.choice(ops)
        if op == "NOT":
            args = (rng.randrange(len(gates)),)
        else:
            fan = rng.randint(1, 2 if mode == "bounded2" else 5)
            args = tuple(rng.randrange(len(gates)) for _ in range(fan))
        param = rng.randint(0, len(args) + 1) if op == "TH" else None
        gates.append(Gate(op, param, args))
    outputs = [rng.randrange(len(gates)) for _ in range(rng.randint(1, 4))]
    return Circuit(n_inputs, gates, outputs, mode)


def circuits():
    return st.randoms(use_true_random=False).map(random_circuit)
