"""Geodesics of the deep linear network metric and its Bures-Wasserstein special case."""
from .balanced import (
    BalancedParams,
    HorizontalBasis,
    Lift,
    LineReport,
    balance_residual,
    closed_form_trajectory,
    diagonal_geodesic,
    differential_phi,
    dln_geodesic_closed,
    dln_gradient_flow_rhs,
    factor_balanced,
    horizontal_basis,
    horizontal_projection,
    horizontality_residual,
    infinite_depth_geodesic,
    lift_endpoints,
    line_balance_conditions,
    phi,
    trace_metric_norm,
    vertical_direction,
    xi,
)
from .bw import (
    bw_action,
    bw_distance_squared,
    bw_geodesic,
    bw_hamiltonian,
    bw_inner,
    bw_initial_momentum,
    bw_momentum,
    bw_ode_rhs,
    lyapunov_apply,
)
from .dln import (
    a_operator,
    a_operator_inverse,
    dln_flow,
    dln_hamiltonian,
    dln_ode_rhs,
    gn_inner,
    gn_inner_scaled,
    m_matrices,
)
from .errors import (
    AlignmentError,
    DegenerateSpectrum,
    DomainError,
    GeodesicError,
    NoConvergence,
    NotBalanced,
    NumericalFailure,
    RankError,
    SingularityError,
)
from .matcalc import (
    frac_power_spd,
    func_calc,
    func_calc_differential,
    geometric_mean,
    gram_power_differential,
    lyapunov_solve,
    power_kernel,
    sqrt_product,
    svd,
)
from .solver import (
    PhasePoint,
    ShootingConfig,
    Trajectory,
    initial_momentum_guess,
    integrate,
    solve_bvp_shooting,
    solve_ivp_geodesic,
    speed_profile,
)

__version__ = "0.1.0"
