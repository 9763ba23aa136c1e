"""Scalar math that accepts floats and dual numbers alike.

System maps that should work under automatic differentiation must be
written against these functions (or numpy ufuncs on object arrays, which
dispatch to the same methods).  On plain floats they defer to :mod:`math`.

    from qsrdg import gmath as gm

    def hamiltonian(z):
        return 9.81 * (1.0 - gm.cos(z[0])) + 0.5 * z[1] * z[1]
"""

import math

from qsrdg._kernels import Dual, value

__all__ = [
    "sin", "cos", "tan", "exp", "log", "sqrt",
    "arctan", "sinh", "cosh", "tanh", "value",
]


def sin(x):
    return x.sin() if isinstance(x, Dual) else math.sin(x)


def cos(x):
    return x.cos() if isinstance(x, Dual) else math.cos(x)


def tan(x):
    return x.tan() if isinstance(x, Dual) else math.tan(x)


def exp(x):
    return x.exp() if isinstance(x, Dual) else math.exp(x)


def log(x):
    return x.log() if isinstance(x, Dual) else math.log(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Dual) else math.sqrt(x)


def arctan(x):
    return x.arctan() if isinstance(x, Dual) else math.atan(x)


def sinh(x):
    return x.sinh() if isinstance(x, Dual) else math.sinh(x)


def cosh(x):
    return x.cosh() if isinstance(x, Dual) else math.cosh(x)


def tanh(x):
    return x.tanh() if isinstance(x, Dual) else math.tanh(x)
