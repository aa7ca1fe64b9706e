"""Profiles, stability and front dynamics of a bistable stripe medium.

The suite enumerates the stationary cross-section profiles of a
reaction-diffusion equation whose bistable reaction acts only inside a
stripe of half-thickness R (linear absorption outside), classifies
their stability by Prüfer-angle eigenvalue counting, computes their
energies and the critical thicknesses organising the front dynamics,
and verifies the predicted behaviour with 1D and 2D time-domain
simulations.
"""

from .model import (
    Params,
    Regime,
    medium_potential,
    potential_root,
    reaction,
    reaction_deriv,
    reaction_potential,
)
from .phaseplane import (
    BlowUpError,
    CurveSample,
    PhasePoint,
    flow,
    flow_dense,
    hamiltonian,
    homoclinic_crossing,
    sample_image_of_line,
)
from .profiles import (
    NoNontrivialProfile,
    Profile,
    ProfileSet,
    TangencyWarning,
    extend_to_line,
    find_profiles,
    largest_profile,
    residual,
)
from .stability import (
    EigenFunction,
    PositivityViolation,
    SpectralReport,
    ThetaTrace,
    count_nonneg,
    eigenvalues_nonneg,
    principal_eigenfunction,
    prufer_phase,
    spectral_report,
    tangent_crossing_count,
    theta_solve,
)
from .energy import (
    BifurcationRow,
    BracketFailure,
    EnergyReport,
    FoldTooClose,
    SignPatternViolation,
    Thresholds,
    bifurcation_sweep,
    compute_thresholds,
    energy_interval,
    energy_line,
    energy_report,
    energy_slope_identity,
    find_fold_thickness,
    find_peak_energy_thickness,
    find_zero_energy_thickness,
)
from .sim1d import (
    Field1D,
    NonConvergence,
    Trajectory1D,
    comparison_check,
    discrete_energy,
    dt_max,
    run1d,
    step1d,
    unstable_manifold_runs,
)
from .sim2d import (
    COLLAPSE,
    SHRINKING,
    SPREADING,
    AmbiguousRegime,
    Field2D,
    FrontMeasurement,
    NoInterface,
    Trajectory2D,
    classify_regime,
    front_speed,
    run2d,
    standard_bump,
)
from .oracles import (
    DenseOperatorSpec,
    brute_profile_scan,
    dense_spectrum,
    quadrature_energy,
    refined_top_eigenvalue,
)

__version__ = "0.1.0"
