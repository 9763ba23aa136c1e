"""Dense solves, Jacobians, Newton iteration and Gauss-Legendre quadrature.

The implicit steppers funnel through :func:`newton_solve`, so the residual
maps they hand over must follow the generic-scalar contract: accept a
sequence of scalars (floats or :class:`qsrdg._kernels.Dual`) and return a
sequence of scalars built only from arithmetic and :mod:`qsrdg.gmath`
calls.  That is what lets one evaluation produce value and Jacobian
together in automatic-dual mode.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from qsrdg._kernels import Dual, lu_solve, seed_duals, value
from qsrdg.errors import NonFiniteEvaluation, SingularMatrix

__all__ = [
    "solve_dense",
    "jacobian",
    "NewtonSettings",
    "NewtonResult",
    "newton_solve",
    "gauss_legendre",
    "gauss_legendre_nodes",
    "SingularMatrix",
    "NonFiniteEvaluation",
]

AUTOMATIC_DUAL = "automatic-dual"
CENTRAL_FD = "central-finite-difference"

_SQRT_EPS = math.sqrt(np.finfo(float).eps)


def solve_dense(a, b, pivot_rtol=1e-14):
    """Solve the square system ``a x = b`` by row-pivoted elimination.

    Raises :class:`SingularMatrix` when a pivot magnitude falls below
    ``pivot_rtol`` relative to the largest row max-norm.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    return np.array(lu_solve(a.tolist(), b.tolist(), pivot_rtol))


def _values_of(out):
    vals = []
    for comp in out:
        v = value(comp)
        if not math.isfinite(v):
            raise NonFiniteEvaluation(f"map produced {v!r}")
        vals.append(v)
    return vals


def _jacobian_with_values(f, x, mode):
    """Jacobian rows and map values at ``x`` (a list of floats)."""
    n = len(x)
    if mode == AUTOMATIC_DUAL:
        out = f(seed_duals(x))
        vals = []
        rows = []
        for comp in out:
            if isinstance(comp, Dual):
                vals.append(comp.val)
                rows.append(list(comp.grad))
            else:
                # component did not depend on the input at all
                vals.append(float(comp))
                rows.append([0.0] * n)
        for v, row in zip(vals, rows):
            if not math.isfinite(v) or not all(map(math.isfinite, row)):
                raise NonFiniteEvaluation("non-finite value or derivative")
        return rows, vals
    if mode == CENTRAL_FD:
        vals = _values_of(f(x))
        rows = [[0.0] * n for _ in vals]
        probe = list(x)
        for k in range(n):
            h = _SQRT_EPS * (1.0 + abs(x[k]))
            probe[k] = x[k] + h
            up = _values_of(f(probe))
            probe[k] = x[k] - h
            dn = _values_of(f(probe))
            probe[k] = x[k]
            inv = 0.5 / h
            for i in range(len(vals)):
                rows[i][k] = (up[i] - dn[i]) * inv
        return rows, vals
    raise ValueError(f"unknown jacobian mode {mode!r}")


def jacobian(f, x, mode=AUTOMATIC_DUAL):
    """Jacobian of a vector map at ``x``.

    ``automatic-dual`` differentiates exactly with one forward pass of
    dual numbers; ``central-finite-difference`` uses symmetric quotients
    with stepsize ``sqrt(eps) * (1 + |x_k|)`` per coordinate.
    """
    rows, _ = _jacobian_with_values(f, [float(v) for v in x], mode)
    return np.array(rows)


@dataclass(frozen=True)
class NewtonSettings:
    """Iteration cap, residual tolerance, and Jacobian mode for Newton."""

    max_iterations: int = 10
    residual_tolerance: float = 1e-13
    jacobian_mode: str = AUTOMATIC_DUAL

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.residual_tolerance > 0.0:
            raise ValueError("residual_tolerance must be positive")
        if self.jacobian_mode not in (AUTOMATIC_DUAL, CENTRAL_FD):
            raise ValueError(f"unknown jacobian mode {self.jacobian_mode!r}")


class NewtonResult(NamedTuple):
    x: np.ndarray
    iterations: int
    residual: float


def newton_solve(
    f: Callable[[Sequence], Sequence],
    x0,
    settings: NewtonSettings = NewtonSettings(),
) -> NewtonResult:
    """Newton's method ``x <- x - J(x)^{-1} F(x)`` on a square system.

    Stops as soon as ``||F(x)|| <= residual_tolerance`` (the initial guess
    counts, so an exact guess reports zero iterations); otherwise returns
    the iterate after ``max_iterations`` updates together with its
    residual.  Non-convergence is not an error here; callers decide.
    """
    x = [float(v) for v in x0]
    its = 0
    while True:
        rows, vals = _jacobian_with_values(f, x, settings.jacobian_mode)
        res = math.sqrt(sum(v * v for v in vals))
        if res <= settings.residual_tolerance or its >= settings.max_iterations:
            return NewtonResult(np.array(x), its, res)
        dx = lu_solve(rows, vals)
        x = [a - b for a, b in zip(x, dx)]
        its += 1


_GL_CACHE: dict[int, tuple[tuple[float, ...], tuple[float, ...]]] = {}


def gauss_legendre_nodes(order):
    """Nodes and weights of the ``order``-point Gauss rule on [0, 1]."""
    if not isinstance(order, int) or not 1 <= order <= 10:
        raise ValueError(f"quadrature order must be an integer in 1..10, got {order!r}")
    cached = _GL_CACHE.get(order)
    if cached is None:
        x, w = leggauss(order)
        cached = (tuple((xi + 1.0) / 2.0 for xi in x), tuple(wi / 2.0 for wi in w))
        _GL_CACHE[order] = cached
    return cached

def gauss_legendre(f, order):
    """Approximate the componentwise integral of ``f`` over [0, 1].

    Exact for polynomial integrands of degree up to ``2*order - 1``.
    """
    nodes, weights = gauss_legendre_nodes(order)
    acc = weights[0] * np.asarray(f(nodes[0]), dtype=float)
    for s, w in zip(nodes[1:], weights[1:]):
        acc = acc + w * np.asarray(f(s), dtype=float)
    return acc
