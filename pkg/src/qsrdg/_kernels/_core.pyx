# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: dual scalars and small dense linear algebra.

Mirror of ``_pure`` with the same API and semantics; the package prefers
this module at import time when the extension has been built.  The dual
number is a cdef class with C-double value and a tuple gradient, and the
float solver runs on a flat C buffer, which removes most of the
per-operation interpreter overhead in the implicit-step hot loop.
"""

from libc.math cimport (atan, cos, cosh, exp, fabs, isfinite, log, pow, sin,
                        sinh, sqrt, tan, tanh)
from libc.stdlib cimport free, malloc

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


cdef inline tuple _scale(tuple g, double c):
    cdef Py_ssize_t i, n = len(g)
    cdef list out = [0.0] * n
    for i in range(n):
        out[i] = c * <double> g[i]
    return tuple(out)


cdef inline tuple _axpby(tuple ga, tuple gb, double a, double b):
    cdef Py_ssize_t i, n = len(ga)
    if len(gb) != n:
        raise ValueError("gradient lengths differ")
    cdef list out = [0.0] * n
    for i in range(n):
        out[i] = a * <double> ga[i] + b * <double> gb[i]
    return tuple(out)


cdef class Dual:
    """A first-order dual number: value plus a gradient tuple.

    Arithmetic propagates derivatives with respect to a fixed set of seed
    directions (the length of ``grad``).  Transcendental functions are
    provided as methods under their numpy ufunc names so object arrays
    dispatch to them, and so :mod:`qsrdg.gmath` can route generically.
    """

    cdef readonly double val
    cdef readonly tuple grad

    def __init__(self, val, grad):
        self.val = val
        self.grad = tuple(grad)

    def __repr__(self):
        return f"Dual({self.val!r}, {self.grad!r})"

    # arithmetic ------------------------------------------------------

    def __add__(self, other):
        cdef Dual s = <Dual> self
        cdef Dual o
        if isinstance(other, Dual):
            o = <Dual> other
            return Dual(s.val + o.val, _axpby(s.grad, o.grad, 1.0, 1.0))
        return Dual(s.val + <double> other, s.grad)

    def __radd__(self, other):
        return Dual(self.val + <double> other, self.grad)

    def __sub__(self, other):
        cdef Dual s = <Dual> self
        cdef Dual o
        if isinstance(other, Dual):
            o = <Dual> other
            return Dual(s.val - o.val, _axpby(s.grad, o.grad, 1.0, -1.0))
        return Dual(s.val - <double> other, s.grad)

    def __rsub__(self, other):
        return Dual(<double> other - self.val, _scale(self.grad, -1.0))

    def __mul__(self, other):
        cdef Dual s = <Dual> self
        cdef Dual o
        cdef double c
        if isinstance(other, Dual):
            o = <Dual> other
            return Dual(s.val * o.val, _axpby(s.grad, o.grad, o.val, s.val))
        c = <double> other
        return Dual(s.val * c, _scale(s.grad, c))

    def __rmul__(self, other):
        cdef double c = <double> other
        return Dual(self.val * c, _scale(self.grad, c))

    def __truediv__(self, other):
        cdef Dual s = <Dual> self
        cdef Dual o
        cdef double inv, q
        if isinstance(other, Dual):
            o = <Dual> other
            inv = 1.0 / o.val
            q = s.val * inv
            return Dual(q, _axpby(s.grad, o.grad, inv, -q * inv))
        inv = 1.0 / <double> other
        return Dual(s.val * inv, _scale(s.grad, inv))

    def __rtruediv__(self, other):
        cdef double inv = 1.0 / self.val
        cdef double q = <double> other * inv
        return Dual(q, _scale(self.grad, -q * inv))

    def __pow__(self, p, modulo):
        cdef Dual s = <Dual> self
        cdef double pd, v, c
        if isinstance(p, Dual):
            return ((<Dual> p) * s.log()).exp()
        pd = <double> p
        v = pow(s.val, pd)
        c = pd * pow(s.val, pd - 1.0)
        return Dual(v, _scale(s.grad, c))

    def __rpow__(self, base, modulo):
        cdef double c = log(<double> base)
        cdef double v = pow(<double> base, self.val)
        return Dual(v, _scale(self.grad, v * c))

    def __neg__(self):
        return Dual(-self.val, _scale(self.grad, -1.0))

    def __pos__(self):
        return self

    def __abs__(self):
        cdef double s = -1.0 if self.val < 0.0 else 1.0
        return Dual(fabs(self.val), _scale(self.grad, s))

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

    def __hash__(self):
        raise TypeError("unhashable type: 'Dual'")

    def __float__(self):
        raise TypeError(
            "refusing to drop the gradient of a Dual; use .val explicitly"
        )

    # transcendentals (numpy ufunc method names) ----------------------

    def sin(self):
        return Dual(sin(self.val), _scale(self.grad, cos(self.val)))

    def cos(self):
        return Dual(cos(self.val), _scale(self.grad, -sin(self.val)))

    def tan(self):
        cdef double t = tan(self.val)
        return Dual(t, _scale(self.grad, 1.0 + t * t))

    def exp(self):
        cdef double v = exp(self.val)
        return Dual(v, _scale(self.grad, v))

    def log(self):
        return Dual(log(self.val), _scale(self.grad, 1.0 / self.val))

    def sqrt(self):
        cdef double v = sqrt(self.val)
        return Dual(v, _scale(self.grad, 0.5 / v))

    def arctan(self):
        cdef double c = 1.0 / (1.0 + self.val * self.val)
        return Dual(atan(self.val), _scale(self.grad, c))

    def sinh(self):
        return Dual(sinh(self.val), _scale(self.grad, cosh(self.val)))

    def cosh(self):
        return Dual(cosh(self.val), _scale(self.grad, sinh(self.val)))

    def tanh(self):
        cdef double t = tanh(self.val)
        return Dual(t, _scale(self.grad, 1.0 - t * t))


cdef inline double _other_val(other):
    if isinstance(other, Dual):
        return (<Dual> other).val
    return <double> other


def value(x):
    """Value part of a generic scalar (floats pass through)."""
    if isinstance(x, Dual):
        return (<Dual> x).val
    return float(x)


def seed_duals(values):
    """Identity-seeded duals for the entries of ``values``.

    Entry ``k`` of the result carries gradient ``e_k``, so evaluating a map
    on the result yields its value and full Jacobian in one pass.
    """
    cdef list vals = [float(v) for v in values]
    cdef Py_ssize_t k, j, n = len(vals)
    cdef list out = []
    for k in range(n):
        out.append(
            Dual(vals[k], tuple(1.0 if j == k else 0.0 for j in range(n)))
        )
    return out


def isfinite_scalar(x):
    """True when the value and every gradient entry are finite."""
    cdef Dual d
    if isinstance(x, Dual):
        d = <Dual> x
        if not isfinite(d.val):
            return False
        for a in d.grad:
            if not isfinite(<double> a):
                return False
        return True
    return isfinite(<double> x) != 0


# small dense algebra on generic scalars ------------------------------


def dot(x, y):
    cdef Py_ssize_t k, n = len(x)
    acc = x[0] * y[0]
    for k in range(1, n):
        acc = acc + x[k] * y[k]
    return acc


def norm_sq(x):
    return dot(x, x)


def matvec(a, x):
    return [dot(row, x) for row in a]


def tmatvec(a, x):
    """Transpose matrix-vector product ``a^T x``."""
    cdef Py_ssize_t i, j, rows = len(a), cols = len(a[0])
    cdef list out = []
    for j in range(cols):
        acc = a[0][j] * x[0]
        for i in range(1, rows):
            acc = acc + a[i][j] * x[i]
        out.append(acc)
    return out


def lu_solve(a, b, double pivot_rtol=1e-14):
    """Solve ``a x = b`` for float data by row-pivoted elimination.

    Raises :class:`SingularMatrix` when a pivot magnitude falls below
    ``pivot_rtol`` times the largest row max-norm of ``a``.
    """
    cdef Py_ssize_t n = len(b)
    cdef Py_ssize_t i, j, k, p
    cdef double limit, best, cand, c, inv, acc
    cdef double *m = <double *> malloc(n * n * sizeof(double))
    cdef double *x = <double *> malloc(n * sizeof(double))
    if m == NULL or x == NULL:
        free(m)
        free(x)
        raise MemoryError()
    try:
        for i in range(n):
            row = a[i]
            for j in range(n):
                m[i * n + j] = <double> row[j]
            x[i] = <double> b[i]
        limit = 0.0
        for i in range(n * n):
            cand = fabs(m[i])
            if cand > limit:
                limit = cand
        limit = pivot_rtol * limit
        for k in range(n):
            p = k
            best = fabs(m[k * n + k])
            for i in range(k + 1, n):
                cand = fabs(m[i * n + k])
                if cand > best:
                    best = cand
                    p = i
            if best <= limit:
                raise SingularMatrix(
                    f"pivot {best:.3e} below threshold {limit:.3e}"
                )
            if p != k:
                for j in range(n):
                    c = m[k * n + j]
                    m[k * n + j] = m[p * n + j]
                    m[p * n + j] = c
                c = x[k]
                x[k] = x[p]
                x[p] = c
            inv = 1.0 / m[k * n + k]
            for i in range(k + 1, n):
                c = m[i * n + k] * inv
                if c != 0.0:
                    for j in range(k + 1, n):
                        m[i * n + j] -= c * m[k * n + j]
                    x[i] -= c * x[k]
        for k in range(n - 1, -1, -1):
            acc = x[k]
            for j in range(k + 1, n):
                acc -= m[k * n + j] * x[j]
            x[k] = acc / m[k * n + k]
        return [x[i] for i in range(n)]
    finally:
        free(m)
        free(x)


def solve_generic(a, b, double pivot_rtol=1e-14):
    """Row-pivoted elimination for generic scalars (floats or duals).

    Pivot choice and the singularity test act on value parts; arithmetic
    stays generic so gradients propagate through the solve.
    """
    cdef Py_ssize_t n = len(b)
    cdef Py_ssize_t i, j, k, p
    cdef double limit, best, cand
    cdef list m = [list(row) for row in a]
    cdef list x = list(b)
    limit = 0.0
    for i in range(n):
        row = m[i]
        for j in range(n):
            cand = fabs(_value_of(row[j]))
            if cand > limit:
                limit = cand
    limit = pivot_rtol * limit
    for k in range(n):
        p = k
        best = fabs(_value_of(m[k][k]))
        for i in range(k + 1, n):
            cand = fabs(_value_of(m[i][k]))
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


cdef inline double _value_of(x):
    if isinstance(x, Dual):
        return (<Dual> x).val
    return <double> x
