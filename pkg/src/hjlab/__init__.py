"""hjlab: executable objects from periodic space-time Hamilton-Jacobi homogenization.

Travel-cost metrics by trajectory optimization, interval-decomposition
certificates, doubling/halving path constructions, effective Hamiltonians,
and an O(eps) convergence-rate harness.
"""

from .burago import BuragoDecomposition, burago_1d, burago_nd, verify_decomposition
from .constructions import (
    CheapWindow,
    DoublingReport,
    ShiftSchedule,
    build_doubling_path,
    build_halving_path,
    check_subadditivity,
    check_superadditivity,
    find_cheap_window,
)
from .curves import Curve
from .effective import (
    EffectiveHamiltonianTable,
    EffectiveLagrangianTable,
    effective_hamiltonian,
    effective_lagrangian,
    homogenized_metric,
    hopf_lax_effective,
)
from .errors import (
    ConfigurationError,
    DivergenceError,
    HJLabError,
    RadiusTooSmallError,
    SearchFailureError,
    UnsupportedDimensionError,
)
from .harness import RunConfig, emit_report, fit_rate, run_paper_check, run_rate_experiment
from .metric import (
    MetricQuery,
    MetricResult,
    action_of_curve,
    check_metric_periodicity,
    compute_metric,
    dp_metric_oracle,
)
from .models import (
    GrowthBounds,
    HamiltonianModel,
    LagrangianModel,
    eval_hamiltonian,
    legendre_transform,
    verify_model,
)
from .pde import ErrorReport, GridSolution, solve_control, solve_scheme, sup_error

__version__ = "0.1.0"
