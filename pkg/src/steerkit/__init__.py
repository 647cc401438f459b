"""Detection, quantification and certification of quantum steering."""

from steerkit.criteria import (
    CorrelationRecord,
    CriterionResult,
    GaussianCovariance,
    ccnr_steering,
    chsh_steering,
    entropic_criterion,
    gaussian_steering,
    linear_criterion,
    lur_criterion,
    pauli_battery,
    three_pauli_criterion,
    two_mode_squeezed_vacuum,
)
from steerkit.errors import DimensionError, SolverError, SteerkitError, ValidationError
from steerkit.incompatibility import (
    QubitDichotomicPair,
    heisenberg_povm_map,
    incompatibility_robustness,
    is_jointly_measurable,
    normalize_assemblage,
    qubit_pair_criterion,
    white_noise_threshold,
)
from steerkit.operators import (
    Assemblage,
    MeasurementSet,
    Povm,
    assemblage_from_state,
    partial_trace,
    partial_transpose,
    pauli_measurements,
)
from steerkit.radius import (
    DirectionSet,
    RadiusBracket,
    canonical_filter_form,
    radius_bracket,
    radius_lower,
    radius_upper,
    tstate_critical_radius,
)
from steerkit.sdp import (
    SteeringInequality,
    SteerVerdict,
    critical_alpha,
    dual_inequality,
    lhs_feasibility,
    steering_robustness,
    steering_weight,
)
from steerkit.states import (
    LhsEnsembleGrid,
    ThresholdQuery,
    isotropic,
    lhs_simulate,
    one_way_state,
    threshold,
    werner,
)

__version__ = "0.1.0"
