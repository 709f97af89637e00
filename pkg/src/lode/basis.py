"""Primitive integer functions shared by the evaluators and the compilers.

All functions are exact on Python integers.  The length function is
spelled ``len_`` so the builtin stays usable inside this package.
"""

__all__ = ["len_", "len2", "alpha", "alpha2", "sg", "cosg", "div2", "smash", "bit"]


def len_(x):
    """Number of binary digits of ``x``; ``len_(0) == 0``.

    >>> [len_(v) for v in (0, 1, 7, 8)]
    [0, 1, 3, 4]
    """
    if x < 0:
        raise ValueError(f"len of negative value {x}")
    return x.bit_length()


def len2(x):
    """``len_(len_(x))``.

    >>> len2(255)
    4
    """
    return len_(len_(x))


def alpha(u):
    """Greatest integer whose length is ``u``."""
    if u < 0:
        raise ValueError(f"alpha of negative index {u}")
    return (1 << u) - 1


def alpha2(u):
    """Greatest integer ``x`` with ``len2(x) == u``.

    >>> alpha2(3)
    127
    """
    if u < 0:
        raise ValueError(f"alpha2 of negative index {u}")
    return (1 << ((1 << u) - 1)) - 1


def sg(x):
    return 1 if x > 0 else 0


def cosg(x):
    return 0 if x > 0 else 1


def div2(x):
    """Floor division by two, also for negative ``x``.

    >>> div2(-3)
    -2
    """
    return x >> 1


def smash(x, y):
    """``2 ** (len(x) * len(y))``."""
    return 1 << (len_(x) * len_(y))


def bit(i, y):
    """Coefficient of ``2**i`` in ``y``, counting from the least significant bit.

    Negative positions read as 0.  Negative ``y`` uses two's complement, which
    matches Python's shift semantics.

    >>> [bit(i, 11) for i in range(5)]
    [1, 1, 0, 1, 0]
    """
    if i < 0:
        return 0
    return (y >> i) & 1
