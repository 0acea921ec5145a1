"""liewave: spectral damped-wave simulation and blow-up analysis on T^n and SU(2)."""

from .blowup import (
    BlowupSequences,
    LifespanRecord,
    SweepResult,
    build_sequences,
    c_seq,
    gamma_seq,
    lifespan_sweep,
    m_constant,
    partial_products,
    sum_identity,
    thresholds,
    verify_lower_bounds,
)
from .harmonics import (
    GridField,
    GroupSpec,
    Irrep,
    QuadratureGrid,
    ResourceLimitError,
    SpectralField,
    build_grid,
    enumerate_irreps,
    forward,
    inverse,
    plancherel_norm_sq,
    random_real_field,
    sobolev_norm_sq,
    wigner_d,
)
from .propagator import (
    DecayReport,
    FieldState,
    ModeState,
    decay_report,
    default_report_times,
    g0,
    g1,
    partition_dual,
    propagate_field,
    propagate_mode,
)
from .semilinear import (
    SolveConfig,
    Trajectory,
    gn_ratio,
    initial_data,
    mean_functional,
    nonlinearity,
    picard_diagnostic,
    scalar_blowup_time,
    solve,
    step,
)

__version__ = "0.1.0"
