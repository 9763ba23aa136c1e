"""Pure-Python kernels: dual scalars and small dense linear algebra.

This module is the reference implementation of the kernel API; the Cython
twin ``_core`` mirrors it exactly and is preferred at import time when
available.  Everything here works on *generic scalars*: plain floats or
:class:`Dual` numbers carrying a gradient, so the same map evaluation code
serves both plain propagation and forward-mode differentiation.

Vectors are plain sequences of scalars and matrices are sequences of row
sequences.  numpy arrays of floats are accepted anywhere a sequence is;
the hot loops deliberately avoid numpy because the state dimensions of
interest are tiny (one or two) and per-call array overhead dominates at
that size.
"""

import math

from qsrdg.errors import SingularMatrix

__all__ = [
    "Dual",
    "value",
    "seed_duals",
    "isfinite_scalar",
    "dot",
    "norm_sq",
    "matvec",
    "tmatvec",
    "lu_solve",
    "solve_generic",
]


class Dual:
    """A first-order dual number: value plus a gradient tuple.

    Arithmetic propagates derivatives with respect to a fixed set of seed
    directions (the length of ``grad``).  Transcendental functions are
    provided as methods under their numpy ufunc names so object arrays
    dispatch to them, and so :mod:`qsrdg.gmath` can route generically.
    """

    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = val
        self.grad = grad

    def __repr__(self):
        return f"Dual({self.val!r}, {self.grad!r})"

    # arithmetic ------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val + other.val,
                tuple(a + b for a, b in zip(self.grad, other.grad, strict=True)),
            )
        return Dual(self.val + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val - other.val,
                tuple(a - b for a, b in zip(self.grad, other.grad, strict=True)),
            )
        return Dual(self.val - other, self.grad)

    def __rsub__(self, other):
        return Dual(other - self.val, tuple(-a for a in self.grad))

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                tuple(
                    self.val * b + other.val * a
                    for a, b in zip(self.grad, other.grad, strict=True)
                ),
            )
        return Dual(self.val * other, tuple(other * a for a in self.grad))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            q = self.val * inv
            return Dual(
                q,
                tuple(
                    (a - q * b) * inv
                    for a, b in zip(self.grad, other.grad, strict=True)
                ),
            )
        inv = 1.0 / other
        return Dual(self.val * inv, tuple(a * inv for a in self.grad))

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        q = other * inv
        return Dual(q, tuple(-q * inv * a for a in self.grad))

    def __pow__(self, p):
        if isinstance(p, Dual):
            return (p * self.log()).exp()
        v = self.val**p
        c = p * self.val ** (p - 1)
        return Dual(v, tuple(c * a for a in self.grad))

    def __rpow__(self, base):
        c = math.log(base)
        v = base**self.val
        return Dual(v, tuple(v * c * a for a in self.grad))

    def __neg__(self):
        return Dual(-self.val, tuple(-a for a in self.grad))

    def __pos__(self):
        return self

    def __abs__(self):
        s = -1.0 if self.val < 0.0 else 1.0
        return Dual(abs(self.val), tuple(s * a for a in self.grad))

    # comparisons act on the value part, which is what branch guards need

    def __lt__(self, other):
        return self.val < _other_val(other)

    def __le__(self, other):
        return self.val <= _other_val(other)

    def __gt__(self, other):
        return self.val > _other_val(other)

    def __ge__(self, other):
        return self.val >= _other_val(other)

    def __eq__(self, other):
        return self.val == _other_val(other)

    def __ne__(self, other):
        return self.val != _other_val(other)

    __hash__ = None

    def __float__(self):
        raise TypeError(
            "refusing to drop the gradient of a Dual; use .val explicitly"
        )

    # transcendentals (numpy ufunc method names) ----------------------

    def sin(self):
        c = math.cos(self.val)
        return Dual(math.sin(self.val), tuple(c * a for a in self.grad))

    def cos(self):
        s = -math.sin(self.val)
        return Dual(math.cos(self.val), tuple(s * a for a in self.grad))

    def tan(self):
        t = math.tan(self.val)
        c = 1.0 + t * t
        return Dual(t, tuple(c * a for a in self.grad))

    def exp(self):
        v = math.exp(self.val)
        return Dual(v, tuple(v * a for a in self.grad))

    def log(self):
        c = 1.0 / self.val
        return Dual(math.log(self.val), tuple(c * a for a in self.grad))

    def sqrt(self):
        v = math.sqrt(self.val)
        c = 0.5 / v
        return Dual(v, tuple(c * a for a in self.grad))

    def arctan(self):
        c = 1.0 / (1.0 + self.val * self.val)
        return Dual(math.atan(self.val), tuple(c * a for a in self.grad))

    def sinh(self):
        c = math.cosh(self.val)
        return Dual(math.sinh(self.val), tuple(c * a for a in self.grad))

    def cosh(self):
        s = math.sinh(self.val)
        return Dual(math.cosh(self.val), tuple(s * a for a in self.grad))

    def tanh(self):
        t = math.tanh(self.val)
        c = 1.0 - t * t
        return Dual(t, tuple(c * a for a in self.grad))


def _other_val(other):
    return other.val if isinstance(other, Dual) else other


def value(x):
    """Value part of a generic scalar (floats pass through)."""
    return x.val if isinstance(x, Dual) else float(x)


def seed_duals(values):
    """Identity-seeded duals for the entries of ``values``.

    Entry ``k`` of the result carries gradient ``e_k``, so evaluating a map
    on the result yields its value and full Jacobian in one pass.
    """
    vals = [float(v) for v in values]
    n = len(vals)
    return [
        Dual(v, tuple(1.0 if j == k else 0.0 for j in range(n)))
        for k, v in enumerate(vals)
    ]


def isfinite_scalar(x):
    """True when the value and every gradient entry are finite."""
    if isinstance(x, Dual):
        return math.isfinite(x.val) and all(math.isfinite(a) for a in x.grad)
    return math.isfinite(x)


# small dense algebra on generic scalars ------------------------------


def dot(x, y):
    acc = x[0] * y[0]
    for k in range(1, len(x)):
        acc = acc + x[k] * y[k]
    return acc


def norm_sq(x):
    return dot(x, x)


def matvec(a, x):
    return [dot(row, x) for row in a]


def tmatvec(a, x):
    """Transpose matrix-vector product ``a^T x``."""
    cols = len(a[0])
    out = []
    for j in range(cols):
        acc = a[0][j] * x[0]
        for i in range(1, len(a)):
            acc = acc + a[i][j] * x[i]
        out.append(acc)
    return out


def lu_solve(a, b, pivot_rtol=1e-14):
    """Solve ``a x = b`` for float data by row-pivoted elimination.

    Raises :class:`SingularMatrix` when a pivot magnitude falls below
    ``pivot_rtol`` times the largest row max-norm of ``a``.
    """
    n = len(b)
    m = [[float(v) for v in row] for row in a]
    x = [float(v) for v in b]
    limit = pivot_rtol * max(max(abs(v) for v in row) for row in m)
    for k in range(n):
        p = k
        best = abs(m[k][k])
        for i in range(k + 1, n):
            cand = abs(m[i][k])
            if cand > best:
                best = cand
                p = i
        if best <= limit:
            raise SingularMatrix(f"pivot {best:.3e} below threshold {limit:.3e}")
        if p != k:
            m[k], m[p] = m[p], m[k]
            x[k], x[p] = x[p], x[k]
        rk = m[k]
        inv = 1.0 / rk[k]
        for i in range(k + 1, n):
            ri = m[i]
            c = ri[k] * inv
            if c != 0.0:
                for j in range(k + 1, n):
                    ri[j] -= c * rk[j]
                x[i] -= c * x[k]
    for k in range(n - 1, -1, -1):
        acc = x[k]
        rk = m[k]
        for j in range(k + 1, n):
            acc -= rk[j] * x[j]
        x[k] = acc / rk[k]
    return x


def solve_generic(a, b, pivot_rtol=1e-14):
    """Row-pivoted elimination for generic scalars (floats or duals).

    Pivot choice and the singularity test act on value parts; arithmetic
    stays generic so gradients propagate through the solve.
    """
    n = len(b)
    m = [list(row) for row in a]
    x = list(b)
    limit = pivot_rtol * max(
        max(abs(value(v)) for v in row) for row in m
    )
    for k in range(n):
        p = k
        best = abs(value(m[k][k]))
        for i in range(k + 1, n):
            cand = abs(value(m[i][k]))
            if cand > best:
                best = cand
                p = i
        if best <= limit:
            raise SingularMatrix(f"pivot {best:.3e} below threshold {limit:.3e}")
        if p != k:
            m[k], m[p] = m[p], m[k]
            x[k], x[p] = x[p], x[k]
        rk = m[k]
        piv = rk[k]
        for i in range(k + 1, n):
            ri = m[i]
            c = ri[k] / piv
            for j in range(k + 1, n):
                ri[j] = ri[j] - c * rk[j]
            x[i] = x[i] - c * x[k]
    for k in range(n - 1, -1, -1):
        acc = x[k]
        rk = m[k]
        for j in range(k + 1, n):
            acc = acc - rk[j] * x[j]
        x[k] = acc / rk[k]
    return x
