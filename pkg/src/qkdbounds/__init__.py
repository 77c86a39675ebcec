"""Key-rate lower bounds for quantum key distribution with an untrusted
photon-number source.

The source model assumes only that a known fraction of pulses carries a
photon number inside a window around the nominal mean; everything outside
is conceded to the adversary as tagged. The package turns observed gain
and error rates into rigorous single-photon bounds and secure-rate lower
bounds for a single-intensity protocol and two decoy-state protocols, with
a brute-force adversary oracle validating every bound at small scale.
"""

from .channel import DetectorParams, GYS_PARAMS, channel_transmittance, simulate_observables
from .errors import (
    ConditionViolation,
    ConfigError,
    DomainError,
    InternalInconsistencyError,
    NoFeasiblePointError,
    QkdBoundsError,
    ScaleError,
    UnsupportedModeError,
    VacuousBoundsError,
    VerificationError,
)
from .observed import (
    DECOY,
    SIGNAL,
    VACUUM,
    ObservedStats,
    UntaggedBounds,
    error_gain_bounds,
    gain_bounds,
    untagged_bounds,
)
from .optimizer import (
    SweepRow,
    SweepSpec,
    build_window,
    max_distance,
    optimize_lambdas,
    sweep,
    trusted_best_rate,
)
from .oracles import (
    AdversaryStrategy,
    CampaignReport,
    GroundTruth,
    ground_truth,
    population_observables,
    soundness_campaign,
    yn_decomposition_check,
)
from .photon_bounds import (
    PnBounds,
    condition1_check,
    multiphoton_upper,
    pn_bounds,
    pn_exact,
)
from .protocols import (
    GLLP,
    ONE_DECOY,
    PROTOCOLS,
    WEAK_VACUUM,
    CoefficientSet,
    KeyRateReport,
    ProtocolParams,
    coefficients,
    condition_thresholds,
    decoy_rate,
    gllp_rate_untrusted,
    one_decoy_q1_e1,
    one_decoy_rate_untrusted,
    wv_e1_upper,
    wv_q1_lower,
    wv_rate_untrusted,
)
from .source import (
    EMPIRICAL_HISTOGRAM,
    GAUSSIAN_APPROX,
    POISSON_EXACT,
    SourceSpec,
    Window,
    sampling_epsilon,
    tagged_fraction,
    window_edges,
    window_for,
)
from .trusted import (
    decoy_rate_trusted,
    gllp_rate_trusted,
    true_single_photon_yield,
    trusted_y1_e1,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryStrategy",
    "CampaignReport",
    "CoefficientSet",
    "ConditionViolation",
    "ConfigError",
    "DECOY",
    "DetectorParams",
    "DomainError",
    "EMPIRICAL_HISTOGRAM",
    "GAUSSIAN_APPROX",
    "GLLP",
    "GYS_PARAMS",
    "GroundTruth",
    "InternalInconsistencyError",
    "KeyRateReport",
    "NoFeasiblePointError",
    "ONE_DECOY",
    "ObservedStats",
    "POISSON_EXACT",
    "PROTOCOLS",
    "PnBounds",
    "ProtocolParams",
    "QkdBoundsError",
    "SIGNAL",
    "ScaleError",
    "SourceSpec",
    "SweepRow",
    "SweepSpec",
    "UnsupportedModeError",
    "UntaggedBounds",
    "VACUUM",
    "VacuousBoundsError",
    "VerificationError",
    "WEAK_VACUUM",
    "Window",
    "build_window",
    "channel_transmittance",
    "coefficients",
    "condition1_check",
    "condition_thresholds",
    "decoy_rate",
    "decoy_rate_trusted",
    "error_gain_bounds",
    "gain_bounds",
    "gllp_rate_trusted",
    "gllp_rate_untrusted",
    "ground_truth",
    "max_distance",
    "multiphoton_upper",
    "one_decoy_q1_e1",
    "one_decoy_rate_untrusted",
    "optimize_lambdas",
    "pn_bounds",
    "pn_exact",
    "population_observables",
    "sampling_epsilon",
    "simulate_observables",
    "soundness_campaign",
    "sweep",
    "tagged_fraction",
    "true_single_photon_yield",
    "trusted_best_rate",
    "trusted_y1_e1",
    "untagged_bounds",
    "window_edges",
    "window_for",
    "wv_e1_upper",
    "wv_q1_lower",
    "wv_rate_untrusted",
    "yn_decomposition_check",
]
