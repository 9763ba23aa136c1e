"""Input-state-output systems with a quadratic supply rate.

The class of systems handled here is

    dz/dt = f(z) + B(z) u,        y = h(z) + D(z) u,

together with a storage function H and a supply rate

    s(u, y) = y^T Q y + 2 y^T S u + u^T R u.

Dissipativity is encoded pointwise through a factorized dissipation
signal l(z) + W(z) u whose squared norm is the dissipation rate; the
three structure identities tying (f, B, h, D) to (H, Q, S, R, l, W) are
checked by :func:`hill_moylan_residual`.  Systems satisfying them obey
the power balance dH/dt = s(u, y) - ||l + W u||^2 along solutions, which
is the identity the discrete scheme reproduces exactly.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from qsrdg.dgradients import StorageFunction

__all__ = [
    "SupplyRate",
    "QsrSystem",
    "supply_value",
    "dissipation_rate",
    "hill_moylan_residual",
    "continuous_power_balance_residual",
]


@dataclass(frozen=True)
class SupplyRate:
    """Quadratic supply rate weights; q and r must be symmetric."""

    q: np.ndarray
    s: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        for name in ("q", "s", "r"):
            mat = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, mat)
        m = self.q.shape[0]
        for name in ("q", "s", "r"):
            mat = getattr(self, name)
            if mat.shape != (m, m):
                raise ValueError(f"{name} must be {m}x{m}, got {mat.shape}")
        for name in ("q", "r"):
            mat = getattr(self, name)
            if np.max(np.abs(mat - mat.T), initial=0.0) > 1e-12:
                raise ValueError(f"{name} must be symmetric")

    @property
    def m(self):
        return self.q.shape[0]


@dataclass(frozen=True)
class QsrSystem:
    """A QSR-dissipative system given by its maps and structure data.

    All maps take a state sequence and return lists (matrices as lists of
    rows): ``drift`` is f, ``input_map`` is B (n x m), ``output_map`` is
    h, ``feedthrough`` is D (m x m), ``loss_state`` is l (length p) and
    ``loss_input`` is W (p x m).  ``storage`` supplies H and its
    gradient.  Maps must follow the generic-scalar contract for use with
    automatic-dual Newton.
    """

    storage: StorageFunction
    supply: SupplyRate
    drift: Callable
    input_map: Callable
    output_map: Callable
    feedthrough: Callable
    loss_state: Callable
    loss_input: Callable
    n: int = field(default=0)
    m: int = field(default=0)
    p: int = field(default=1)

    def __post_init__(self):
        if self.n == 0:
            object.__setattr__(self, "n", self.storage.dim)
        if self.m == 0:
            object.__setattr__(self, "m", self.supply.m)
        if self.storage.dim != self.n:
            raise ValueError("storage dimension disagrees with state dimension")
        if self.supply.m != self.m:
            raise ValueError("supply rate dimension disagrees with input dimension")


def supply_value(supply, u, y):
    """Evaluate ``y^T Q y + 2 y^T S u + u^T R u``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(y @ supply.q @ y + 2.0 * (y @ supply.s @ u) + u @ supply.r @ u)


def dissipation_rate(system, z, u):
    """Instantaneous dissipation ``||l(z) + W(z) u||^2`` (nonnegative)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    lv = np.asarray(system.loss_state(z), dtype=float)
    wv = np.asarray(system.loss_input(z), dtype=float)
    sig = lv + wv @ u
    return float(sig @ sig)


def hill_moylan_residual(system, z):
    """Residuals (r1, r2, r3) of the three structure identities at ``z``.

    r1: gradient/drift identity, r2: input/output identity (vector norm),
    r3: feedthrough/dissipation identity (Frobenius norm).  All three
    vanish for an exactly dissipative realization.
    """
    z = np.asarray(z, dtype=float)
    q, s, r = system.supply.q, system.supply.s, system.supply.r
    eta = np.asarray(system.storage.gradient(z), dtype=float)
    fv = np.asarray(system.drift(z), dtype=float)
    bv = np.asarray(system.input_map(z), dtype=float)
    hv = np.atleast_1d(np.asarray(system.output_map(z), dtype=float))
    dv = np.asarray(system.feedthrough(z), dtype=float)
    lv = np.asarray(system.loss_state(z), dtype=float)
    wv = np.asarray(system.loss_input(z), dtype=float)

    r1 = abs(float(eta @ fv) - float(hv @ q @ hv) + float(lv @ lv))
    r2 = float(
        np.linalg.norm(0.5 * (bv.T @ eta) - (q @ dv + s).T @ hv + wv.T @ lv)
    )
    r3 = float(
        np.linalg.norm(wv.T @ wv - r - dv.T @ s - s.T @ dv - dv.T @ q @ dv)
    )
    return r1, r2, r3


def continuous_power_balance_residual(system, z, u):
    """Defect of ``dH/dt = s(u, y) - d(z, u)`` at one state and input."""
    z = np.asarray(z, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    eta = np.asarray(system.storage.gradient(z), dtype=float)
    fv = np.asarray(system.drift(z), dtype=float)
    bv = np.asarray(system.input_map(z), dtype=float)
    hv = np.atleast_1d(np.asarray(system.output_map(z), dtype=float))
    dv = np.asarray(system.feedthrough(z), dtype=float)
    y = hv + dv @ u
    dh = float(eta @ (fv + bv @ u))
    return abs(dh - supply_value(system.supply, u, y) + dissipation_rate(system, z, u))
