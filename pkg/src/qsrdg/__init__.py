"""Structure-preserving time integration for QSR-dissipative systems.

qsrdg integrates input-state-output systems that are dissipative with
respect to a quadratic supply rate, using a discrete-gradient scheme
whose steps satisfy the power balance

    (H(z_{i+1}) - H(z_i)) / tau = s(u_i, y_i) - d_i

exactly, step by step, rather than only in the limit.  An implicit
midpoint scheme over the same averaged maps is included as the
conventional second-order baseline, along with four worked benchmark
systems and a CLI (``qsr-dg``) for simulation, power-balance audits and
convergence studies.
"""

from qsrdg._kernels import BACKEND
from qsrdg.dgradients import (
    GONZALEZ,
    ITOH_ABE,
    DiscreteGradientKind,
    StorageFunction,
    check_mean_value,
    discrete_gradient,
    mean_value,
)
from qsrdg.errors import (
    AreNotConverged,
    GridMismatch,
    IntegrationError,
    NewtonDidNotConverge,
    NonFiniteEvaluation,
    NotStabilizing,
    QsrdgError,
    SingularMatrix,
    UnknownExample,
    ZeroDirection,
)
from qsrdg.integrators import (
    SchemeConfig,
    StepResult,
    TimeGrid,
    Trajectory,
    dg_qsr_step,
    discrete_power_balance_residuals,
    drift_coefficient,
    integrate,
    midpoint_step,
    projector,
    recovered_output,
    relative_error,
)
from qsrdg.model import (
    QsrSystem,
    SupplyRate,
    continuous_power_balance_residual,
    dissipation_rate,
    hill_moylan_residual,
    supply_value,
)
from qsrdg.numerics import (
    NewtonResult,
    NewtonSettings,
    gauss_legendre,
    jacobian,
    newton_solve,
    solve_dense,
)
from qsrdg.riccati import solve_are
from qsrdg.systems import (
    BenchmarkCase,
    EXAMPLE_NAMES,
    LtiOcpParams,
    PendulumParams,
    PiParams,
    SyntheticParams,
    benchmark_settings,
    make_lti_ocp,
    make_pendulum,
    make_pi,
    make_synthetic,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # discrete gradients
    "StorageFunction",
    "DiscreteGradientKind",
    "GONZALEZ",
    "ITOH_ABE",
    "mean_value",
    "discrete_gradient",
    "check_mean_value",
    # model
    "SupplyRate",
    "QsrSystem",
    "supply_value",
    "dissipation_rate",
    "hill_moylan_residual",
    "continuous_power_balance_residual",
    # numerics
    "solve_dense",
    "jacobian",
    "NewtonSettings",
    "NewtonResult",
    "newton_solve",
    "gauss_legendre",
    # integrators
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
    # riccati
    "solve_are",
    # systems
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
    # errors
    "QsrdgError",
    "SingularMatrix",
    "NonFiniteEvaluation",
    "ZeroDirection",
    "GridMismatch",
    "AreNotConverged",
    "NotStabilizing",
    "UnknownExample",
    "IntegrationError",
    "NewtonDidNotConverge",
]
