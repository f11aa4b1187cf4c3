"""regsmc: simulation and numerical-verification lab for a quasi-continuous
second-order sliding-mode controller and its two chattering-suppressing
regularizations (max and additive)."""

from .analysis import (
    BoundKind,
    BoundPrediction,
    ChatterReport,
    SteadyStateMetrics,
    applicable_bounds,
    chattering_metrics,
    damped_forced_solution,
    equilibrium_addreg,
    forced_oscillation_closed_form,
    predict_const_bound,
    predict_resonant_bounds,
    steady_state_metric,
)
from .dynamics import (
    State,
    SystemKind,
    SystemParams,
    control,
    control_addreg,
    control_maxreg,
    control_original,
    linearized_matrix,
    vector_field,
)
from .lyapunov import (
    CertificateConfig,
    CheckReport,
    GainCondition,
    LyapunovKind,
    analytic_rate,
    check_dissipation,
    evaluate,
    gain_condition,
    kappa,
    proof_bound_terms,
    select_epsilons,
    z_integral,
)
from .signals import (
    DisturbanceKind,
    DisturbanceSpec,
    load_disturbance_csv,
    resonant_frequency,
    sample_disturbance,
    sup_norm,
)
from .sim import (
    RegionEvent,
    Scenario,
    Trajectory,
    batch_run,
    detect_region_crossings,
    simulate,
    step_euler,
)

__version__ = "0.1.0"
