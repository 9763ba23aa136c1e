"""Discrete gradients: two-point surrogates for the storage gradient.

A discrete gradient of a storage function H is a map (z, w) -> d with

    H(w) - H(z) = d . (w - z)        (mean value property)
    d(z, z) = grad H(z)              (consistency)

Three constructions are provided.  Gonzalez evaluates the gradient at the
midpoint and adds a rank-one correction along w - z, which enforces the
mean value property exactly.  Itoh-Abe telescopes coordinate-wise
difference quotients (exact as well, but not symmetric in z and w).  The
mean-value kind integrates the gradient along the segment by Gauss
quadrature, so its mean value property holds only up to quadrature error.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from qsrdg._kernels import dot, norm_sq, value
from qsrdg.numerics import gauss_legendre_nodes

__all__ = [
    "StorageFunction",
    "DiscreteGradientKind",
    "GONZALEZ",
    "ITOH_ABE",
    "mean_value",
    "discrete_gradient",
    "check_mean_value",
]

_VARIANTS = ("gonzalez", "itoh-abe", "mean-value")


@dataclass(frozen=True)
class StorageFunction:
    """Scalar storage (energy) function with its gradient map.

    Both callables must follow the generic-scalar contract (accept
    sequences of floats or duals, use :mod:`qsrdg.gmath` for
    transcendentals) if the automatic-dual Newton mode is to be used.
    """

    value: Callable
    gradient: Callable
    dim: int


@dataclass(frozen=True)
class DiscreteGradientKind:
    variant: str
    order: int = 5

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown discrete gradient variant {self.variant!r}")
        if self.variant == "mean-value" and not 1 <= self.order <= 10:
            raise ValueError(f"quadrature order must be in 1..10, got {self.order}")


GONZALEZ = DiscreteGradientKind("gonzalez")
ITOH_ABE = DiscreteGradientKind("itoh-abe")


def mean_value(order=5):
    """Mean-value kind with the given Gauss-Legendre order."""
    return DiscreteGradientKind("mean-value", order)


def _gonzalez(storage, z, w, h_at_z):
    mid = [(a + b) * 0.5 for a, b in zip(z, w)]
    g_mid = storage.gradient(mid)
    d = [b - a for a, b in zip(z, w)]
    d_sq = norm_sq(d)
    znorm = math.sqrt(sum(a * a for a in z))
    # closed form blows up as w -> z; inside the guard ball the midpoint
    # gradient alone is consistent
    if value(d_sq) <= (1e-12 * (1.0 + znorm)) ** 2:
        return g_mid
    if h_at_z is None:
        h_at_z = storage.value(z)
    c = (storage.value(w) - h_at_z - dot(g_mid, d)) / d_sq
    return [g + c * dk for g, dk in zip(g_mid, d)]


def _itoh_abe(storage, z, w, h_at_z):
    v = list(z)
    prev = storage.value(v) if h_at_z is None else h_at_z
    out = []
    for k, (zk, wk) in enumerate(zip(z, w)):
        if abs(value(wk) - zk) <= 1e-14 * (1.0 + abs(zk)):
            # 0/0 quotient: partial derivative at the partially-updated point
            out.append(storage.gradient(v)[k])
            v[k] = wk
            prev = storage.value(v)
        else:
            v[k] = wk
            cur = storage.value(v)
            out.append((cur - prev) / (wk - zk))
            prev = cur
    return out


def _mean_value(storage, z, w, order):
    nodes, weights = gauss_legendre_nodes(order)
    acc = None
    for s, wq in zip(nodes, weights):
        pt = [(1.0 - s) * a + s * b for a, b in zip(z, w)]
        g = storage.gradient(pt)
        if acc is None:
            acc = [wq * gi for gi in g]
        else:
            acc = [ai + wq * gi for ai, gi in zip(acc, g)]
    return acc


def _evaluate(kind, storage, z, w, h_at_z=None):
    """Generic-scalar evaluation: ``z`` is float, ``w`` may carry duals."""
    if kind.variant == "gonzalez":
        return _gonzalez(storage, z, w, h_at_z)
    if kind.variant == "itoh-abe":
        return _itoh_abe(storage, z, w, h_at_z)
    return _mean_value(storage, z, w, kind.order)


def discrete_gradient(kind, storage, z, w):
    """Evaluate the discrete gradient of ``storage`` for the pair (z, w)."""
    z = [float(v) for v in z]
    w = [float(v) for v in w]
    return np.array([value(g) for g in _evaluate(kind, storage, z, w)])


def check_mean_value(kind, storage, z, w):
    """Relative defect of the mean value property for one pair.

    Returns ``|H(w) - H(z) - d.(w - z)| / (1 + |H(w) - H(z)|)``.
    """
    z = [float(v) for v in z]
    w = [float(v) for v in w]
    d = discrete_gradient(kind, storage, z, w)
    dh = storage.value(w) - storage.value(z)
    lhs = float(sum(di * (wi - zi) for di, zi, wi in zip(d, z, w)))
    return abs(dh - lhs) / (1.0 + abs(dh))
