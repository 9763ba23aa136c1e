"""Benchmark systems: pendulum, LTI optimal control, PI controller, and a
scalar saturating nonlinearity.

Every factory returns a :class:`~qsrdg.model.QsrSystem` whose maps are
written against :mod:`qsrdg.gmath`, so they compose with the automatic
differentiation used by the implicit solvers.  The structure identities
hold exactly for all four (see the tests), which is what entitles them to
the discrete power balance.

:func:`benchmark_settings` bundles each system with the initial state and
control signal used throughout the shipped experiments.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from qsrdg import gmath as gm
from qsrdg.dgradients import StorageFunction
from qsrdg.errors import UnknownExample
from qsrdg.model import QsrSystem, SupplyRate
from qsrdg.riccati import solve_are

__all__ = [
    "PendulumParams",
    "LtiOcpParams",
    "PiParams",
    "SyntheticParams",
    "make_pendulum",
    "make_lti_ocp",
    "make_pi",
    "make_synthetic",
    "BenchmarkCase",
    "benchmark_settings",
    "EXAMPLE_NAMES",
]

EXAMPLE_NAMES = ("pendulum", "lti-ocp", "pi", "synthetic")


@dataclass(frozen=True)
class PendulumParams:
    gravity: float = 9.81
    damping: float = 0.2


def make_pendulum(params=PendulumParams()):
    """Damped pendulum with velocity output.

    State (angle, velocity); the damping coefficient enters the supply
    rate as the quadratic output weight, so the undamped case is the
    energy-conserving limit.
    """
    g = float(params.gravity)
    lam = float(params.damping)
    if g <= 0.0 or lam < 0.0:
        raise ValueError("need positive gravity and nonnegative damping")

    def energy(z):
        return g * (1.0 - gm.cos(z[0])) + 0.5 * z[1] * z[1]

    def energy_grad(z):
        return [g * gm.sin(z[0]), z[1]]

    def drift(z):
        return [z[1], -g * gm.sin(z[0]) - lam * z[1]]

    def input_map(z):
        return ((0.0,), (1.0,))

    def output_map(z):
        return [z[1]]

    def feedthrough(z):
        return ((0.0,),)

    def loss_state(z):
        return (0.0,)

    def loss_input(z):
        return ((0.0,),)

    return QsrSystem(
        storage=StorageFunction(energy, energy_grad, dim=2),
        supply=SupplyRate(q=[[-lam]], s=[[0.5]], r=[[0.0]]),
        drift=drift,
        input_map=input_map,
        output_map=output_map,
        feedthrough=feedthrough,
        loss_state=loss_state,
        loss_input=loss_input,
        p=1,
    )


@dataclass(frozen=True)
class LtiOcpParams:
    a: tuple = ((0.1, 1.0), (-1.0, 0.1))
    b: tuple = ((0.0,), (1.0,))
    c: tuple = ((1.0, 0.0),)


def make_lti_ocp(params=LtiOcpParams()):
    """Linear system with the value function of its regulator problem.

    The storage is one half of the quadratic form of the stabilizing
    Riccati solution; the scheme's output is the associated costate
    output B^T P z rather than the measured output C z, which enters the
    loss map instead.
    """
    a = np.asarray(params.a, dtype=float)
    b = np.asarray(params.b, dtype=float)
    c = np.asarray(params.c, dtype=float)
    n = a.shape[0]
    m = b.shape[1]
    p_out = c.shape[0]
    p_c = solve_are(a, b, c)

    a_rows = tuple(tuple(row) for row in a.tolist())
    p_rows = tuple(tuple(row) for row in p_c.tolist())
    bp_rows = tuple(tuple(row) for row in (b.T @ p_c).tolist())
    cl_rows = tuple(tuple(row) for row in (c / math.sqrt(2.0)).tolist())
    b_rows = tuple(tuple(row) for row in b.tolist())
    zero_mm = tuple((0.0,) * m for _ in range(m))
    zero_pm = tuple((0.0,) * m for _ in range(p_out))

    def value(z):
        acc = 0.0
        for i in range(n):
            row = p_rows[i]
            acc = acc + z[i] * sum(row[j] * z[j] for j in range(n))
        return 0.5 * acc

    def gradient(z):
        return [sum(row[j] * z[j] for j in range(n)) for row in p_rows]

    def drift(z):
        return [sum(row[j] * z[j] for j in range(n)) for row in a_rows]

    def input_map(z):
        return b_rows

    def output_map(z):
        return [sum(row[j] * z[j] for j in range(n)) for row in bp_rows]

    def feedthrough(z):
        return zero_mm

    def loss_state(z):
        return [sum(row[j] * z[j] for j in range(n)) for row in cl_rows]

    def loss_input(z):
        return zero_pm

    half_eye = 0.5 * np.eye(m)
    return QsrSystem(
        storage=StorageFunction(value, gradient, dim=n),
        supply=SupplyRate(q=half_eye, s=half_eye, r=np.zeros((m, m))),
        drift=drift,
        input_map=input_map,
        output_map=output_map,
        feedthrough=feedthrough,
        loss_state=loss_state,
        loss_input=loss_input,
        p=p_out,
    )


@dataclass(frozen=True)
class PiParams:
    integral_gain: float = 1.0
    proportional_gain: float = 1.0


def make_pi(params=PiParams(), channels=1):
    """PI controller as a dissipative system (negative input weight).

    Scalar by default; ``channels`` stacks independent copies with a
    diagonal feedthrough for the vector-valued variant.
    """
    ki = float(params.integral_gain)
    kp = float(params.proportional_gain)
    n = int(channels)
    if ki <= 0.0 or kp < 0.0:
        raise ValueError("need a positive integral gain and nonnegative proportional gain")
    if n < 1:
        raise ValueError("need at least one channel")
    eye = tuple(
        tuple(1.0 if i == j else 0.0 for j in range(n)) for i in range(n)
    )
    kp_eye = tuple(tuple(kp * x for x in row) for row in eye)
    zero_pm = ((0.0,) * n,)

    def value(z):
        acc = z[0] * z[0]
        for k in range(1, n):
            acc = acc + z[k] * z[k]
        return 0.5 * ki * acc

    def gradient(z):
        return [ki * z[k] for k in range(n)]

    def drift(z):
        return [0.0] * n

    def input_map(z):
        return eye

    def output_map(z):
        return [ki * z[k] for k in range(n)]

    def feedthrough(z):
        return kp_eye

    def loss_state(z):
        return (0.0,)

    def loss_input(z):
        return zero_pm

    return QsrSystem(
        storage=StorageFunction(value, gradient, dim=n),
        supply=SupplyRate(
            q=np.zeros((n, n)), s=0.5 * np.eye(n), r=-kp * np.eye(n)
        ),
        drift=drift,
        input_map=input_map,
        output_map=output_map,
        feedthrough=feedthrough,
        loss_state=loss_state,
        loss_input=loss_input,
        p=1,
    )


@dataclass(frozen=True)
class SyntheticParams:
    alpha: float = 2.0
    lam: float = 1.0


def make_synthetic(params=SyntheticParams()):
    """Scalar saturating nonlinearity with state-dependent loss.

    The output sign is fixed by the structure identities: with input map
    2*lam and feedthrough lam, the second identity forces the output to
    be the negative storage gradient.
    """
    alpha = float(params.alpha)
    lam = float(params.lam)
    if alpha <= 0.0 or lam == 0.0:
        raise ValueError("need alpha > 0 and a nonzero feedthrough gain")
    sqrt_alpha = math.sqrt(alpha)

    def value(z):
        return 0.5 * alpha * gm.arctan(z[0] * z[0])

    def gradient(z):
        x = z[0]
        x2 = x * x
        return [alpha * x / (1.0 + x2 * x2)]

    def drift(z):
        x = z[0]
        x2 = x * x
        return [-x - alpha * x / (1.0 + x2 * x2)]

    def input_map(z):
        return ((2.0 * lam,),)

    def output_map(z):
        x = z[0]
        x2 = x * x
        return [-alpha * x / (1.0 + x2 * x2)]

    def feedthrough(z):
        return ((lam,),)

    def loss_state(z):
        x = z[0]
        x2 = x * x
        return [sqrt_alpha * x / gm.sqrt(1.0 + x2 * x2)]

    def loss_input(z):
        return ((0.0,),)

    return QsrSystem(
        storage=StorageFunction(value, gradient, dim=1),
        supply=SupplyRate(q=[[-1.0]], s=[[0.0]], r=[[lam * lam]]),
        drift=drift,
        input_map=input_map,
        output_map=output_map,
        feedthrough=feedthrough,
        loss_state=loss_state,
        loss_input=loss_input,
        p=1,
    )


class BenchmarkCase(NamedTuple):
    system: QsrSystem
    initial_state: np.ndarray
    control: Callable


def _pendulum_control(t):
    return math.sin(2.0 * t)


def _lti_ocp_control(t):
    return math.sin(0.25 * t * t)


def _pi_control(t):
    return min(t * t, math.exp(-t))


def _synthetic_control(t):
    return math.exp(-((t - 4.0) ** 2)) + math.exp(-((t - 7.0) ** 2))


def benchmark_settings(name):
    """System, initial state and control for a named benchmark run."""
    if name == "pendulum":
        return BenchmarkCase(
            make_pendulum(), np.array([math.pi / 4.0, -1.0]), _pendulum_control
        )
    if name == "lti-ocp":
        return BenchmarkCase(
            make_lti_ocp(), np.array([1.0, 1.0]), _lti_ocp_control
        )
    if name == "pi":
        return BenchmarkCase(make_pi(), np.array([1.0]), _pi_control)
    if name == "synthetic":
        return BenchmarkCase(make_synthetic(), np.array([1.0]), _synthetic_control)
    raise UnknownExample(
        f"unknown example {name!r}; expected one of {', '.join(EXAMPLE_NAMES)}"
    )
