"""Implicit one-step schemes with a discrete power balance.

The main scheme replaces the drift by its component orthogonal to a
discrete gradient of the storage function plus a coefficient times the
discrete gradient itself, chosen so that every accepted step satisfies

    (H(z_{i+1}) - H(z_i)) / tau_i  =  s(u_i, y_i) - ||l_i + W_i u_i||^2

exactly (up to the Newton residual), mirroring the continuous power
balance.  An implicit midpoint stepper over the same averaged maps serves
as the second-order reference scheme without the balance guarantee.

All two-point averages are midpoint evaluations, phi((z + w) / 2); the
averaged input is a trapezoidal endpoint mean by default.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from qsrdg._kernels import dot, matvec, norm_sq, solve_generic, tmatvec, value
from qsrdg.dgradients import GONZALEZ, DiscreteGradientKind, _evaluate
from qsrdg.errors import (
    GridMismatch,
    IntegrationError,
    NewtonDidNotConverge,
    NonFiniteEvaluation,
    SingularMatrix,
    ZeroDirection,
)
from qsrdg.model import supply_value
from qsrdg.numerics import NewtonSettings, newton_solve

__all__ = [
    "TimeGrid",
    "SchemeConfig",
    "StepResult",
    "Trajectory",
    "projector",
    "recovered_output",
    "drift_coefficient",
    "dg_qsr_step",
    "midpoint_step",
    "integrate",
    "discrete_power_balance_residuals",
    "relative_error",
]

DG_QSR = "dg-qsr"
IMPLICIT_MIDPOINT = "implicit-midpoint"

TRAPEZOIDAL = "trapezoidal"
MIDPOINT_SAMPLE = "midpoint-sample"


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time nodes starting at zero."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a grid needs at least two nodes")
        if pts[0] != 0.0:
            raise ValueError("grids start at t = 0")
        if not np.all(np.diff(pts) > 0.0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def equidistant(cls, horizon, num_steps):
        """Nodes ``i * (horizon / num_steps)`` for i = 0..num_steps."""
        if num_steps < 1 or horizon <= 0.0:
            raise ValueError("need a positive horizon and at least one step")
        return cls(np.arange(num_steps + 1) * (horizon / num_steps))

    @classmethod
    def with_step(cls, stepsize, num_steps):
        """Nodes ``i * stepsize``; keeps nodes exactly nested across
        power-of-two stepsize refinements."""
        if num_steps < 1 or stepsize <= 0.0:
            raise ValueError("need a positive stepsize and at least one step")
        return cls(np.arange(num_steps + 1) * stepsize)

    @property
    def steps(self):
        return np.diff(self.points)

    @property
    def num_steps(self):
        return self.points.size - 1

    @property
    def horizon(self):
        return float(self.points[-1])


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme selection and numerical knobs for one integration run.

    ``gradient_floor`` is a relative coefficient: a step from z treats
    discrete gradients shorter than ``gradient_floor * (1 + |grad H(z)|)``
    as vanishing and refuses to divide by them.
    """

    scheme: str = DG_QSR
    dg_kind: DiscreteGradientKind = GONZALEZ
    newton: NewtonSettings = field(default_factory=NewtonSettings)
    gradient_floor: float = 1e-12
    input_rule: str = TRAPEZOIDAL

    def __post_init__(self):
        if self.scheme not in (DG_QSR, IMPLICIT_MIDPOINT):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.input_rule not in (TRAPEZOIDAL, MIDPOINT_SAMPLE):
            raise ValueError(f"unknown input rule {self.input_rule!r}")
        if self.gradient_floor < 0.0:
            raise ValueError("gradient_floor must be nonnegative")


class StepResult(NamedTuple):
    state: np.ndarray
    averaged_input: np.ndarray
    discrete_output: np.ndarray
    newton_residual: float
    iterations: int


@dataclass(frozen=True)
class Trajectory:
    """States on the grid nodes plus per-step inputs, outputs, residuals."""

    grid: TimeGrid
    states: np.ndarray
    averaged_inputs: np.ndarray
    discrete_outputs: np.ndarray
    newton_residuals: np.ndarray


def projector(v, mode="onto", floor=0.0):
    """Orthogonal projector onto ``span(v)`` or its complement."""
    if mode not in ("onto", "orthogonal"):
        raise ValueError(f"unknown projector mode {mode!r}")
    v = np.asarray(v, dtype=float)
    nsq = float(v @ v)
    if nsq <= floor * floor or nsq == 0.0:
        raise ZeroDirection(f"direction norm {math.sqrt(nsq):.3e} at or below floor")
    p = np.outer(v, v) / nsq
    if mode == "onto":
        return p
    return np.eye(v.size) - p


def _as_rows(mat):
    return tuple(tuple(float(x) for x in row) for row in np.atleast_2d(mat))


def _scheme_terms(system, kind, q_rows, s_rows, z, h_at_z, w):
    """Shared two-point quantities of the structure-preserving step.

    Works on generic scalars: ``z`` holds floats, ``w`` may carry duals.
    Returns the discrete gradient, its squared norm, the midpoint drift,
    input and feedthrough evaluations, the recovered output, and the
    numerator of the drift coefficient.
    """
    dg = _evaluate(kind, system.storage, z, w, h_at_z)
    g2 = norm_sq(dg)
    mid = [(a + b) * 0.5 for a, b in zip(z, w)]
    fv = system.drift(mid)
    bv = system.input_map(mid)
    dv = system.feedthrough(mid)
    lv = system.loss_state(mid)
    wv = system.loss_input(mid)
    m = len(q_rows)
    bt = tmatvec(bv, dg)
    wl = tmatvec(wv, lv)
    rhs = [0.5 * bt[j] + wl[j] for j in range(m)]
    # rows of (Q D + S)^T: entry (j, i) is sum_k q[i][k] d[k][j] + s[i][j]
    mt = [
        [
            sum(q_rows[i][k] * dv[k][j] for k in range(m)) + s_rows[i][j]
            for i in range(m)
        ]
        for j in range(m)
    ]
    hbar = solve_generic(mt, rhs)
    qh = matvec(q_rows, hbar)
    gam_num = dot(hbar, qh) - norm_sq(lv)
    return dg, g2, fv, bv, dv, hbar, gam_num


def recovered_output(system, kind, z, w):
    """Two-point output reconstructed from the storage and loss data.

    Consistent with the output map: at w = z it returns h(z) whenever the
    structure identities hold.
    """
    z = [float(v) for v in z]
    w = [float(v) for v in w]
    q_rows = _as_rows(system.supply.q)
    s_rows = _as_rows(system.supply.s)
    terms = _scheme_terms(system, kind, q_rows, s_rows, z, None, w)
    return np.array([value(x) for x in terms[5]])


def drift_coefficient(system, kind, z, w, gradient_floor=0.0):
    """Coefficient applied to the discrete gradient by the scheme.

    Equals (zero-input supply minus dissipation) over the squared length
    of the discrete gradient; raises :class:`ZeroDirection` when that
    length is at or below ``gradient_floor``.
    """
    z = [float(v) for v in z]
    w = [float(v) for v in w]
    q_rows = _as_rows(system.supply.q)
    s_rows = _as_rows(system.supply.s)
    dg, g2, _, _, _, _, gam_num = _scheme_terms(
        system, kind, q_rows, s_rows, z, None, w
    )
    g2 = value(g2)
    if g2 <= gradient_floor * gradient_floor or g2 == 0.0:
        raise ZeroDirection("discrete gradient vanished")
    return value(gam_num) / g2


class _DgQsrStepper:
    """Per-run machinery for the structure-preserving scheme."""

    def __init__(self, system, config):
        self.system = system
        self.kind = config.dg_kind
        self.q_rows = _as_rows(system.supply.q)
        self.s_rows = _as_rows(system.supply.s)
        self.newton = config.newton
        self.gradient_floor = config.gradient_floor

    def _residual(self, z, h_at_z, floor_sq, ubar, tau):
        system, kind = self.system, self.kind
        q_rows, s_rows = self.q_rows, self.s_rows

        def residual(w):
            dg, g2, fv, bv, _, hbar, gam_num = _scheme_terms(
                system, kind, q_rows, s_rows, z, h_at_z, w
            )
            g2v = value(g2)
            if g2v <= floor_sq or g2v == 0.0:
                raise ZeroDirection(
                    f"discrete gradient norm {math.sqrt(g2v):.3e} below floor"
                )
            gam = gam_num / g2
            cf = dot(dg, fv) / g2
            bu = matvec(bv, ubar)
            return [
                wk - zk - tau * (gam * dk + fk - cf * dk + bk)
                for wk, zk, dk, fk, bk in zip(w, z, dg, fv, bu)
            ]

        return residual

    def step(self, z, ubar, tau):
        z = [float(v) for v in z]
        h_at_z = self.system.storage.value(z)
        grad_z = self.system.storage.gradient(z)
        floor = self.gradient_floor * (1.0 + math.sqrt(norm_sq(grad_z)))
        if math.sqrt(norm_sq(grad_z)) <= floor:
            warnings.warn(
                "storage gradient nearly vanishes at the step base point",
                stacklevel=2,
            )
        residual = self._residual(z, h_at_z, floor * floor, ubar, tau)
        w, its, res = newton_solve(residual, z, self.newton)
        if res > self.newton.residual_tolerance:
            warnings.warn(
                f"Newton stalled at residual {res:.3e}",
                NewtonDidNotConverge,
                stacklevel=2,
            )
        w_list = [float(v) for v in w]
        _, _, _, _, dv, hbar, _ = _scheme_terms(
            self.system, self.kind, self.q_rows, self.s_rows, z, h_at_z, w_list
        )
        ybar = [
            value(hb) + dot([value(x) for x in drow], ubar)
            for hb, drow in zip(hbar, dv)
        ]
        return StepResult(w, np.array(ubar), np.array(ybar), res, its)


class _MidpointStepper:
    """Implicit midpoint over the same averaged maps (reference scheme)."""

    def __init__(self, system, config):
        self.system = system
        self.newton = config.newton

    def _residual(self, z, ubar, tau):
        drift = self.system.drift
        input_map = self.system.input_map

        def residual(w):
            mid = [(a + b) * 0.5 for a, b in zip(z, w)]
            fv = drift(mid)
            bu = matvec(input_map(mid), ubar)
            return [
                wk - zk - tau * (fk + bk)
                for wk, zk, fk, bk in zip(w, z, fv, bu)
            ]

        return residual

    def step(self, z, ubar, tau):
        z = [float(v) for v in z]
        residual = self._residual(z, ubar, tau)
        w, its, res = newton_solve(residual, z, self.newton)
        if res > self.newton.residual_tolerance:
            warnings.warn(
                f"Newton stalled at residual {res:.3e}",
                NewtonDidNotConverge,
                stacklevel=2,
            )
        w_list = [float(v) for v in w]
        mid = [(a + b) * 0.5 for a, b in zip(z, w_list)]
        hv = self.system.output_map(mid)
        dv = self.system.feedthrough(mid)
        ybar = [
            float(value(h)) + dot([value(x) for x in drow], ubar)
            for h, drow in zip(hv, dv)
        ]
        return StepResult(w, np.array(ubar), np.array(ybar), res, its)


def _control_values(control, t, m):
    out = control(t)
    if isinstance(out, (int, float)):
        vals = (float(out),)
    else:
        vals = tuple(float(v) for v in out)
    if len(vals) != m:
        raise ValueError(f"control returned {len(vals)} values, expected {m}")
    return vals


def _averaged_input(control, t, tau, rule, m, left=None):
    if rule == TRAPEZOIDAL:
        u0 = _control_values(control, t, m) if left is None else left
        u1 = _control_values(control, t + tau, m)
        return tuple(0.5 * (a + b) for a, b in zip(u0, u1)), u1
    return _control_values(control, t + 0.5 * tau, m), None


def _make_stepper(system, config):
    if config.scheme == DG_QSR:
        return _DgQsrStepper(system, config)
    return _MidpointStepper(system, config)


def dg_qsr_step(system, config, control, z, t, tau):
    """One step of the structure-preserving scheme from ``z`` at ``t``."""
    ubar, _ = _averaged_input(control, t, tau, config.input_rule, system.m)
    return _DgQsrStepper(system, config).step(z, ubar, tau)


def midpoint_step(system, config, control, z, t, tau):
    """One implicit midpoint step from ``z`` at ``t``."""
    ubar, _ = _averaged_input(control, t, tau, config.input_rule, system.m)
    return _MidpointStepper(system, config).step(z, ubar, tau)


def integrate(system, config, grid, control, z0):
    """March the configured scheme over ``grid`` from ``z0``.

    Hard step failures (singular Jacobian, vanished discrete gradient,
    non-finite evaluations) are re-raised as :class:`IntegrationError`
    carrying the failing step index; Newton stalls only warn and are
    visible in the returned residuals.
    """
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (system.n,):
        raise ValueError(f"initial state must have shape ({system.n},)")
    stepper = _make_stepper(system, config)
    pts = grid.points
    q = grid.num_steps
    states = np.empty((q + 1, system.n))
    inputs = np.empty((q, system.m))
    outputs = np.empty((q, system.m))
    residuals = np.empty(q)
    states[0] = z0
    z = z0
    left = None
    for i in range(q):
        t = float(pts[i])
        tau = float(pts[i + 1] - pts[i])
        ubar, left = _averaged_input(
            control, t, tau, config.input_rule, system.m, left
        )
        try:
            result = stepper.step(z, ubar, tau)
        except (ZeroDirection, SingularMatrix, NonFiniteEvaluation) as exc:
            raise IntegrationError(i, t, str(exc)) from exc
        z = result.state
        states[i + 1] = z
        inputs[i] = result.averaged_input
        outputs[i] = result.discrete_output
        residuals[i] = result.newton_residual
    return Trajectory(grid, states, inputs, outputs, residuals)


def discrete_power_balance_residuals(system, trajectory):
    """Per-step defect of the discrete power balance.

    Uses the recorded averaged inputs and discrete outputs; the loss maps
    are re-evaluated at the state midpoints.  For the structure-preserving
    scheme these are at Newton-residual level; for the midpoint scheme
    they are O(tau^2).
    """
    states = trajectory.states
    taus = trajectory.grid.steps
    q = trajectory.grid.num_steps
    hval = system.storage.value
    out = np.empty(q)
    for i in range(q):
        z0 = states[i]
        z1 = states[i + 1]
        mid = 0.5 * (z0 + z1)
        lv = np.asarray(system.loss_state(mid), dtype=float)
        wv = np.asarray(system.loss_input(mid), dtype=float)
        u = trajectory.averaged_inputs[i]
        y = trajectory.discrete_outputs[i]
        sig = lv + wv @ u
        diss = float(sig @ sig)
        sup = supply_value(system.supply, u, y)
        dh = (hval(z1.tolist()) - hval(z0.tolist())) / float(taus[i])
        out[i] = abs(dh - sup + diss)
    return out


def relative_error(trajectory, reference, node_tolerance=1e-12):
    """Max-norm deviation from a reference run on shared nodes.

    Every node of ``trajectory`` must coincide with a node of
    ``reference`` within ``node_tolerance``; otherwise
    :class:`GridMismatch` is raised.  The deviation is normalized by the
    largest reference state norm over the shared nodes.
    """
    rp = reference.grid.points
    indices = []
    for t in trajectory.grid.points:
        j = int(np.searchsorted(rp, t))
        best = -1
        for cand in (j - 1, j, j + 1):
            if 0 <= cand < rp.size and abs(rp[cand] - t) <= node_tolerance:
                best = cand
                break
        if best < 0:
            raise GridMismatch(f"node t = {t!r} not on the reference grid")
        indices.append(best)
    ref_states = reference.states[indices]
    num = float(np.max(np.linalg.norm(ref_states - trajectory.states, axis=1)))
    den = float(np.max(np.linalg.norm(ref_states, axis=1)))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den
