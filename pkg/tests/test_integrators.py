"""One-step maps, the integration loop, and the discrete power balance."""

import math
import warnings

import numpy as np
import pytest

from qsrdg.dgradients import GONZALEZ, ITOH_ABE, StorageFunction, mean_value
from qsrdg.errors import (
    GridMismatch,
    IntegrationError,
    NewtonDidNotConverge,
    ZeroDirection,
)
from qsrdg.integrators import (
    DG_QSR,
    IMPLICIT_MIDPOINT,
    MIDPOINT_SAMPLE,
    SchemeConfig,
    TimeGrid,
    dg_qsr_step,
    discrete_power_balance_residuals,
    drift_coefficient,
    integrate,
    midpoint_step,
    projector,
    recovered_output,
    relative_error,
)
from qsrdg.model import QsrSystem, SupplyRate, supply_value
from qsrdg.numerics import NewtonSettings
from qsrdg.systems import (
    PendulumParams,
    benchmark_settings,
    make_pendulum,
    make_pi,
    make_synthetic,
)

ALL_KINDS = (GONZALEZ, ITOH_ABE, mean_value())


def scalar_decay_system():
    """H = z^2/2, f = -z, passive output y = z: plain exponential decay."""
    return QsrSystem(
        storage=StorageFunction(
            value=lambda z: 0.5 * z[0] * z[0], gradient=lambda z: (z[0],), dim=1
        ),
        supply=SupplyRate(q=0.0, s=0.5, r=0.0),
        drift=lambda z: [-z[0]],
        input_map=lambda z: [[1.0]],
        output_map=lambda z: [z[0]],
        feedthrough=lambda z: [[0.0]],
        loss_state=lambda z: [z[0]],
        loss_input=lambda z: [[0.0]],
    )


def zero_control(t):
    return 0.0


# grids and configs ----------------------------------------------------


def test_time_grid_constructors_and_properties():
    grid = TimeGrid.equidistant(2.0, 4)
    np.testing.assert_allclose(grid.points, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert grid.num_steps == 4
    assert grid.horizon == 2.0
    np.testing.assert_allclose(grid.steps, 0.5)

    grid = TimeGrid.with_step(0.25, 3)
    np.testing.assert_allclose(grid.points, [0.0, 0.25, 0.5, 0.75])

    uneven = TimeGrid(np.array([0.0, 0.1, 0.4, 1.0]))
    np.testing.assert_allclose(uneven.steps, [0.1, 0.3, 0.6])


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        TimeGrid(np.array([0.0]))
    with pytest.raises(ValueError):
        TimeGrid.equidistant(1.0, 0)
    with pytest.raises(ValueError):
        TimeGrid.with_step(-0.1, 5)


def test_scheme_config_validation():
    assert SchemeConfig().scheme == DG_QSR
    with pytest.raises(ValueError):
        SchemeConfig(scheme="leapfrog")
    with pytest.raises(ValueError):
        SchemeConfig(input_rule="simpson")
    with pytest.raises(ValueError):
        SchemeConfig(gradient_floor=-1e-3)


# projector ------------------------------------------------------------


def test_projector_identities(rng):
    v = rng.standard_normal(4)
    onto = projector(v, "onto")
    orth = projector(v, "orthogonal")
    np.testing.assert_allclose(onto + orth, np.eye(4), atol=1e-14)
    np.testing.assert_allclose(onto @ onto, onto, atol=1e-14)
    np.testing.assert_allclose(orth @ v, np.zeros(4), atol=1e-13)
    np.testing.assert_allclose(onto @ v, v, rtol=1e-13)


def test_projector_rejects_zero_direction():
    with pytest.raises(ZeroDirection):
        projector(np.zeros(3), "onto")
    with pytest.raises(ZeroDirection):
        projector(np.array([1e-9, 0.0]), "orthogonal", floor=1e-6)
    with pytest.raises(ValueError):
        projector(np.ones(2), "sideways")


# recovered output and drift coefficient -------------------------------


@pytest.mark.parametrize(
    "name", ("pendulum", "lti-ocp", "pi", "synthetic")
)
def test_recovered_output_collapses_to_output_map(name, rng):
    sys_ = benchmark_settings(name).system
    for _ in range(25):
        z = rng.uniform(-1.5, 1.5, sys_.n)
        got = recovered_output(sys_, GONZALEZ, z, z)
        np.testing.assert_allclose(
            got, np.atleast_1d(np.asarray(sys_.output_map(z), dtype=float)),
            rtol=1e-10, atol=1e-12,
        )


def test_drift_coefficient_oracles():
    # pendulum at rest velocity 1: supply weight q = -0.2 against
    # |grad H| = 1 gives exactly -0.2
    pend = make_pendulum()
    gam = drift_coefficient(pend, GONZALEZ, (0.0, 1.0), (0.0, 1.0))
    assert math.isclose(gam, -0.2, rel_tol=1e-12)

    # saturating example at z = 1: (q h^2 - l^2) / eta^2 = (-1 - 1) / 1
    syn = make_synthetic()
    gam = drift_coefficient(syn, GONZALEZ, (1.0,), (1.0,))
    assert math.isclose(gam, -2.0, rel_tol=1e-12)

    with pytest.raises(ZeroDirection):
        drift_coefficient(make_pi(), GONZALEZ, (0.0,), (0.0,))


def test_drift_coefficient_matches_power_identity(rng):
    # at w = z the coefficient times |grad H|^2 must equal grad H . f
    sys_ = make_synthetic()
    for _ in range(20):
        z = rng.uniform(0.2, 2.0, 1)
        eta = np.asarray(sys_.storage.gradient(z), dtype=float)
        fv = np.asarray(sys_.drift(z), dtype=float)
        gam = drift_coefficient(sys_, GONZALEZ, z, z)
        assert math.isclose(gam * float(eta @ eta), float(eta @ fv), rel_tol=1e-10)


def test_scheme_direction_consistency_at_base_points(rng):
    """At w = z the scheme's direction reduces to f(z) + B(z) u."""
    for name in ("pendulum", "lti-ocp", "synthetic"):
        sys_ = benchmark_settings(name).system
        count = 0
        while count < 20:
            z = rng.uniform(-2.0, 2.0, sys_.n)
            eta = np.asarray(sys_.storage.gradient(z), dtype=float)
            if float(np.linalg.norm(eta)) <= 1e-3:
                continue
            count += 1
            u = rng.uniform(-1.0, 1.0, sys_.m)
            fv = np.asarray(sys_.drift(z), dtype=float)
            bu = np.asarray(sys_.input_map(z), dtype=float) @ u
            gam = drift_coefficient(sys_, GONZALEZ, z, z)
            orth = projector(eta, "orthogonal")
            direction = gam * eta + orth @ fv + bu
            np.testing.assert_allclose(
                direction, fv + bu, rtol=1e-9, atol=1e-11
            )


# single steps ----------------------------------------------------------


def test_pi_stays_at_fixed_point_with_zero_input():
    sys_ = make_pi()
    config = SchemeConfig()
    result = dg_qsr_step(sys_, config, zero_control, (1.0,), 0.0, 0.1)
    assert result.state[0] == 1.0
    assert result.iterations == 0
    assert result.discrete_output[0] == 1.0


def test_conservative_pendulum_single_step_preserves_energy():
    sys_ = make_pendulum(PendulumParams(damping=0.0))
    config = SchemeConfig()
    z0 = (math.pi / 4.0, -1.0)
    h0 = sys_.storage.value(z0)
    result = dg_qsr_step(sys_, config, zero_control, z0, 0.0, 0.05)
    h1 = sys_.storage.value(result.state.tolist())
    assert abs(h1 - h0) <= 1e-13 * (1.0 + abs(h0))


def test_midpoint_step_scalar_decay_oracle():
    sys_ = scalar_decay_system()
    config = SchemeConfig(scheme=IMPLICIT_MIDPOINT)
    result = midpoint_step(sys_, config, zero_control, (1.0,), 0.0, 0.1)
    assert math.isclose(result.state[0], 0.95 / 1.05, rel_tol=1e-13)


def test_dg_step_third_order_local_error():
    # halving the step should shrink the one-step defect against the
    # exact flow by about 2^3
    sys_ = scalar_decay_system()
    config = SchemeConfig()

    def local_error(tau):
        result = dg_qsr_step(sys_, config, zero_control, (1.0,), 0.0, tau)
        return abs(result.state[0] - math.exp(-tau))

    ratio = local_error(0.2) / local_error(0.1)
    assert 7.0 <= ratio <= 9.0


def test_step_records_newton_diagnostics():
    case = benchmark_settings("pendulum")
    config = SchemeConfig()
    result = dg_qsr_step(
        case.system, config, case.control, case.initial_state, 0.0, 0.01
    )
    assert result.newton_residual <= config.newton.residual_tolerance
    assert 1 <= result.iterations <= config.newton.max_iterations
    assert result.averaged_input.shape == (1,)
    assert result.discrete_output.shape == (1,)


def test_input_rules_trapezoidal_vs_midpoint_sample():
    case = benchmark_settings("pendulum")
    tau = 0.25
    trap = dg_qsr_step(
        case.system, SchemeConfig(), case.control, case.initial_state, 1.0, tau
    )
    samp = dg_qsr_step(
        case.system,
        SchemeConfig(input_rule=MIDPOINT_SAMPLE),
        case.control,
        case.initial_state,
        1.0,
        tau,
    )
    u0, u1 = case.control(1.0), case.control(1.0 + tau)
    assert math.isclose(trap.averaged_input[0], 0.5 * (u0 + u1), rel_tol=1e-15)
    assert math.isclose(
        samp.averaged_input[0], case.control(1.0 + 0.5 * tau), rel_tol=1e-15
    )
    assert trap.state[0] != samp.state[0]


# integration loop ------------------------------------------------------


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.variant)
def test_discrete_power_balance_all_kinds_pendulum(kind):
    case = benchmark_settings("pendulum")
    config = SchemeConfig(dg_kind=kind)
    grid = TimeGrid.equidistant(5.0, 500)
    traj = integrate(case.system, config, grid, case.control, case.initial_state)
    residuals = discrete_power_balance_residuals(case.system, traj)
    assert float(np.max(residuals)) <= 1e-10


def test_discrete_power_balance_on_uneven_grid(rng):
    case = benchmark_settings("synthetic")
    steps = rng.uniform(0.002, 0.03, 300)
    grid = TimeGrid(np.concatenate(([0.0], np.cumsum(steps))))
    traj = integrate(case.system, SchemeConfig(), grid, case.control, case.initial_state)
    residuals = discrete_power_balance_residuals(case.system, traj)
    assert float(np.max(residuals)) <= 1e-10


def test_midpoint_balance_defect_is_visible():
    # the reference scheme has no balance guarantee; its defect sits at
    # discretization level, orders above the structure-preserving one
    case = benchmark_settings("pendulum")
    grid = TimeGrid.equidistant(5.0, 100)
    dg = integrate(
        case.system, SchemeConfig(), grid, case.control, case.initial_state
    )
    mp = integrate(
        case.system,
        SchemeConfig(scheme=IMPLICIT_MIDPOINT),
        grid,
        case.control,
        case.initial_state,
    )
    dg_worst = float(np.max(discrete_power_balance_residuals(case.system, dg)))
    mp_worst = float(np.max(discrete_power_balance_residuals(case.system, mp)))
    assert dg_worst <= 1e-10
    assert mp_worst >= 1e-5
    assert mp_worst >= 100.0 * dg_worst


def test_conservative_pendulum_long_run_drift_and_midpoint_comparison():
    sys_ = make_pendulum(PendulumParams(damping=0.0))
    grid = TimeGrid.equidistant(10.0, 100)
    z0 = (math.pi / 4.0, -1.0)
    h0 = sys_.storage.value(z0)

    dg = integrate(sys_, SchemeConfig(), grid, zero_control, z0)
    drift_dg = max(
        abs(sys_.storage.value(s.tolist()) - h0) for s in dg.states
    )
    mp = integrate(
        sys_, SchemeConfig(scheme=IMPLICIT_MIDPOINT), grid, zero_control, z0
    )
    drift_mp = max(
        abs(sys_.storage.value(s.tolist()) - h0) for s in mp.states
    )
    assert drift_dg <= 1e-10
    assert drift_mp >= 10.0 * drift_dg


def test_dissipation_inequality_along_trajectory():
    # with the supply removed, stored energy must not increase: the
    # per-step balance has a nonpositive right-hand side for u = 0 when
    # q is negative semidefinite
    case = benchmark_settings("synthetic")
    grid = TimeGrid.equidistant(5.0, 250)
    traj = integrate(case.system, SchemeConfig(), grid, case.control, case.initial_state)
    hval = case.system.storage.value
    for i in range(grid.num_steps):
        dh = hval(traj.states[i + 1].tolist()) - hval(traj.states[i].tolist())
        sup = supply_value(
            case.system.supply, traj.averaged_inputs[i], traj.discrete_outputs[i]
        )
        assert dh <= float(grid.steps[i]) * sup + 1e-10


def test_integrate_validates_initial_state():
    case = benchmark_settings("pendulum")
    with pytest.raises(ValueError):
        integrate(
            case.system,
            SchemeConfig(),
            TimeGrid.equidistant(1.0, 10),
            case.control,
            (1.0,),
        )


def test_integration_error_carries_step_location():
    # the stacked-integrator storage gradient vanishes at the origin, so
    # the very first step cannot normalize the discrete gradient
    sys_ = make_pi()
    grid = TimeGrid.equidistant(1.0, 10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(IntegrationError) as info:
            integrate(sys_, SchemeConfig(), grid, zero_control, (0.0,))
    assert info.value.step_index == 0
    assert "step 0" in str(info.value)


def test_newton_stall_warns_but_continues():
    case = benchmark_settings("pendulum")
    config = SchemeConfig(newton=NewtonSettings(max_iterations=1))
    grid = TimeGrid.equidistant(1.0, 4)
    with pytest.warns(NewtonDidNotConverge):
        traj = integrate(
            case.system, config, grid, case.control, case.initial_state
        )
    assert np.all(np.isfinite(traj.states))


# error measurement -----------------------------------------------------


def test_relative_error_on_nested_grids():
    case = benchmark_settings("pendulum")
    coarse = integrate(
        case.system,
        SchemeConfig(),
        TimeGrid.with_step(0.02, 100),
        case.control,
        case.initial_state,
    )
    fine = integrate(
        case.system,
        SchemeConfig(scheme=IMPLICIT_MIDPOINT),
        TimeGrid.with_step(0.005, 400),
        case.control,
        case.initial_state,
    )
    err = relative_error(coarse, fine)
    assert 0.0 < err < 1e-2
    assert relative_error(fine, fine) == 0.0


def test_relative_error_rejects_disjoint_grids():
    case = benchmark_settings("pi")
    a = integrate(
        case.system,
        SchemeConfig(),
        TimeGrid.equidistant(1.0, 3),
        case.control,
        case.initial_state,
    )
    b = integrate(
        case.system,
        SchemeConfig(),
        TimeGrid.equidistant(1.0, 7),
        case.control,
        case.initial_state,
    )
    with pytest.raises(GridMismatch):
        relative_error(a, b)


def test_second_order_convergence_short_sweep():
    case = benchmark_settings("synthetic")
    ref = integrate(
        case.system,
        SchemeConfig(scheme=IMPLICIT_MIDPOINT),
        TimeGrid.with_step(0.4 / 256.0, 256 * 5),
        case.control,
        case.initial_state,
    )
    errors = []
    for s in (1, 2, 3):
        tau = 0.4 * (2.0**-s) * 0.5
        q = int(round(2.0 / tau))
        traj = integrate(
            case.system,
            SchemeConfig(),
            TimeGrid.with_step(tau, q),
            case.control,
            case.initial_state,
        )
        errors.append(relative_error(traj, ref))
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]
    for order in orders:
        assert 1.7 <= order <= 2.3
