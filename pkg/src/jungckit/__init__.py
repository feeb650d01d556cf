"""Two-map S-iteration toolkit with gated delta-squared acceleration,
stability certificates, damped-recursion verification and a batch CLI."""

from .aitken import AitkenWindow, accelerate_sequence, aitken_correct
from .diagnostics import (
    ConvergenceReport,
    LimitEstimate,
    acceleration_ratio,
    build_convergence_report,
    estimate_limit,
    limit_identity_residuals,
    sequences_equivalent,
)
from .engine import (
    JungckConfig,
    PowerCache,
    identity_residual,
    identity_residuals,
    jungck_step,
    power_apply,
    run,
)
from .errors import (
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    DimensionMismatchError,
    HypothesisViolatedError,
    IndexOutOfRangeError,
    JungckitError,
    LengthMismatchError,
    NonFiniteError,
    NormsUnavailableError,
    NotConvergingError,
    ScheduleViolationError,
    SequenceTooShortError,
    SingularOperatorError,
    SolveError,
    TraceMismatchError,
)
from .model import (
    GatePolicy,
    IterationTrace,
    Operator,
    OperatorPair,
    Schedule,
    as_state,
    make_operator_pair,
    min_modulus,
    schedule_eval,
    spectral_norm,
)
from .scan import ScanResult, ScanSpec, run_scan
from .stability import (
    CertificateResult,
    PositivityReport,
    StabilityConstants,
    StabilityReport,
    certify,
    check_positivity_constraints,
    check_property_i,
    check_property_ii_iii,
    check_property_iv_v,
    compute_constants,
    cross_validate,
    derived_gamma_schedule,
    power_norms,
)
from .venter import (
    Verdict,
    VenterConfig,
    VenterTrace,
    venter_run,
    verify_property_i,
    verify_property_iv,
    verify_summability,
)

__version__ = "0.1.0"
