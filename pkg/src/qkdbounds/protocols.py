"""Key-rate engines for the untrusted-source analysis.

Three estimators share the window machinery: a generalized single-intensity
rate that concedes every multiphoton pulse, and two decoy-state estimators
(signal+decoy+vacuum, signal+decoy) that recover the single-photon
contribution through a signed linear combination of gains whose
coefficients come from the photon-number envelopes.

The linear-combination weights a0, a1, a2(n), a3 are what make the decoy
route work: with the intensity ratio above the closed-form threshold,
a1 and a0 are negative and every a2(n) is positive, so dropping the a2
terms and bounding a3 from below leaves a valid lower bound on the
single-photon gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import (
    ConditionViolation,
    DomainError,
    InternalInconsistencyError,
    UnsupportedModeError,
    VacuousBoundsError,
)
from .numerics import binary_entropy, log_binomial_coeff, log_factorial, log1m
from .observed import ObservedStats, error_gain_bounds, gain_bounds
from .photon_bounds import condition1_check, log_pmf_row, pn_bounds
from .source import SourceSpec, Window, window_edges

GLLP = "gllp"
WEAK_VACUUM = "weak_vacuum"
ONE_DECOY = "one_decoy"

PROTOCOLS = (GLLP, WEAK_VACUUM, ONE_DECOY)

DEFAULT_SIFT_FACTOR = 0.5
DEFAULT_EC_INEFFICIENCY = 1.22

# Past this window size the housed a2 map is truncated once entries
# underflow doubles; the positivity flag still covers the full range in
# log space.
_A2_FULL_MAP_LIMIT = 4096
_A2_UNDERFLOW_LOG = math.log(1e-300)

# Relative size under which the factorial-suppressed tail correction is
# snapped to exact zero (it is below one ulp of every other term).
_A3_SNAP_REL = 1e-30


@dataclass(frozen=True)
class ProtocolParams:
    """Protocol selection and its intensity / post-processing constants."""

    protocol: str
    lambda_signal: float
    lambda_decoy: Optional[float] = None
    sift_factor: float = DEFAULT_SIFT_FACTOR
    ec_inefficiency: float = DEFAULT_EC_INEFFICIENCY

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise DomainError(
                f"protocol must be one of {', '.join(PROTOCOLS)}, got {self.protocol!r}"
            )
        if not 0.0 < self.lambda_signal < 1.0:
            raise DomainError(
                f"lambda_signal must be in (0, 1), got {self.lambda_signal!r}"
            )
        if self.protocol in (WEAK_VACUUM, ONE_DECOY):
            if self.lambda_decoy is None:
                raise DomainError(f"{self.protocol} requires lambda_decoy")
            # Ordering lambda_decoy < lambda_signal is deliberately not
            # enforced here: the intensity-separation condition check owns
            # that comparison and reports it as a condition violation.
            if not 0.0 < self.lambda_decoy < 1.0:
                raise DomainError(
                    f"lambda_decoy must be in (0, 1), got {self.lambda_decoy!r}"
                )
        if not 0.0 < self.sift_factor <= 1.0:
            raise DomainError(
                f"sift_factor must be in (0, 1], got {self.sift_factor!r}"
            )
        if self.ec_inefficiency < 1.0:
            raise DomainError(
                f"ec_inefficiency must be >= 1, got {self.ec_inefficiency!r}"
            )


@dataclass(frozen=True)
class CoefficientSet:
    """Signed weights of the gain combination, plus the ratio thresholds.

    a2 maps n to the weight of the n-photon yield term for n >= 3; at large
    window sizes the map stops where both underlying envelope values
    underflow doubles (every omitted entry would be exactly 0.0), while
    a2_all_positive is decided in log space over the whole window.
    thresholds is (cond2a, cond2b, cond2).
    """

    a0: float
    a1: float
    a2: Mapping[int, float]
    a3_lower: float
    thresholds: tuple[float, float, float]
    a2_all_positive: bool


@dataclass(frozen=True)
class KeyRateReport:
    """One rate evaluation with everything needed to audit it."""

    rate_raw: float
    rate: float
    q1_lower: Optional[float] = None
    e1_upper: Optional[float] = None
    q_omega_lower: Optional[float] = None
    condition_flags: Mapping[str, bool] = field(default_factory=dict)
    intermediates: Mapping[str, float] = field(default_factory=dict)


def condition_thresholds(
    mean_photons: float, delta: float
) -> tuple[float, float, float]:
    """Intensity-ratio thresholds (cond2a, cond2b, cond2).

    cond2a is the weakest form (first-order coefficient sign), cond2b the
    exact combinatorial form for the higher orders, cond2 its closed-form
    relaxation; cond2 >= cond2b >= cond2a always. Evaluated on the integer
    window edges, in log space where the binomial coefficient overflows.
    """
    m_lo, m_hi = window_edges(mean_photons, delta)
    if m_lo <= 2:
        raise DomainError(
            f"threshold formulas need the window bottom above 2, got "
            f"(1-delta)*N -> {m_lo} (N={mean_photons!r}, delta={delta!r})"
        )
    w = m_hi - m_lo
    if w < 1:
        raise DomainError(
            f"window [{m_lo}, {m_hi}] spans a single photon number; the ratio "
            "thresholds need a window at least two wide (increase delta or N)"
        )
    cond2a = (m_hi - 1.0) / (m_lo - 1.0)
    cond2b = math.exp(log_binomial_coeff(m_hi - 2, w) / (m_lo - 2))
    a = (m_hi - 2.0) / (m_lo - 2.0)
    b = math.exp((w / (m_lo - 2.0)) * math.log((m_hi - 2.0) / w))
    c = math.exp(math.log(a * math.e**2 / w) / (2.0 * (m_lo - 2.0)))
    cond2 = a * b * c
    return cond2a, cond2b, cond2


def _require_condition1(
    mean_photons: float, delta: float, lam: float, role: str
) -> None:
    if not condition1_check(mean_photons, delta, lam):
        raise ConditionViolation(
            f"{role} transmittance too large: (1+delta)*N*lambda = "
            f"{(1.0 + delta) * mean_photons * lam!r} must be strictly below 1"
        )


@dataclass(frozen=True)
class _EnvelopeCore:
    """Small-n envelope values shared by the decoy estimators."""

    p0_lower_s: float
    p0_upper_d: float
    p1_lower_s: float
    p1_upper_d: float
    p2_lower_s: float
    p2_upper_d: float
    a0: float
    denominator: float  # -a1
    a3_lower: float


def _a3_log_magnitude(
    mean_photons: float, delta: float, lam_d: float, log_p2_lower_s: float, m_lo: int
) -> float:
    two_dn = 2.0 * delta * mean_photons
    return (
        math.log(two_dn)
        + (two_dn - 1.0) * log1m(lam_d)
        + log_p2_lower_s
        - log_factorial(m_lo + 1)
    )


def _envelope_core(
    mean_photons: float, delta: float, lam_s: float, lam_d: float
) -> _EnvelopeCore:
    m_lo, m_hi = window_edges(mean_photons, delta)
    log_s_lo = log_pmf_row(m_lo, 3, lam_s)
    log_d_hi = log_pmf_row(m_hi, 3, lam_d)
    p0_lower_s = math.exp(m_hi * log1m(lam_s))
    p0_upper_d = math.exp(m_lo * log1m(lam_d))
    p1_lower_s = math.exp(log_s_lo[1])
    p1_upper_d = math.exp(log_d_hi[1])
    p2_lower_s = math.exp(log_s_lo[2])
    p2_upper_d = math.exp(log_d_hi[2])
    a0 = p0_lower_s * p2_upper_d - p0_upper_d * p2_lower_s
    a1 = p1_lower_s * p2_upper_d - p1_upper_d * p2_lower_s
    log_a3 = _a3_log_magnitude(mean_photons, delta, lam_d, log_s_lo[2], m_lo)
    if a1 != 0.0 and log_a3 < math.log(_A3_SNAP_REL) + math.log(abs(a1)):
        a3_lower = 0.0
    else:
        a3_lower = -math.exp(log_a3)
    return _EnvelopeCore(
        p0_lower_s=p0_lower_s,
        p0_upper_d=p0_upper_d,
        p1_lower_s=p1_lower_s,
        p1_upper_d=p1_upper_d,
        p2_lower_s=p2_lower_s,
        p2_upper_d=p2_upper_d,
        a0=a0,
        denominator=-a1,
        a3_lower=a3_lower,
    )


def coefficients(
    mean_photons: float, delta: float, lambda_s: float, lambda_d: float
) -> CoefficientSet:
    """Full coefficient set of the gain linear combination.

    Exposed for inspection and for the sign-structure checks; the rate path
    itself only consumes a0, a1, a3_lower.
    """
    _require_condition1(mean_photons, delta, lambda_s, "signal")
    _require_condition1(mean_photons, delta, lambda_d, "decoy")
    thresholds = condition_thresholds(mean_photons, delta)
    m_lo, m_hi = window_edges(mean_photons, delta)

    log_s_lo = log_pmf_row(m_lo, m_lo + 1, lambda_s)
    log_d_hi = log_pmf_row(m_hi, m_lo + 1, lambda_d)
    core = _envelope_core(mean_photons, delta, lambda_s, lambda_d)

    # a2(n) = lowerS(n) * upperD(2) - upperD(n) * lowerS(2), n >= 3.
    left = log_s_lo[3:] + log_d_hi[2]
    right = log_d_hi[3:] + log_s_lo[2]
    a2_all_positive = bool(np.all(left > right)) if len(left) else True

    if m_lo <= _A2_FULL_MAP_LIMIT:
        n_house = m_lo
    else:
        alive = np.nonzero(np.maximum(left, right) >= _A2_UNDERFLOW_LOG)[0]
        n_house = (int(alive[-1]) + 3) if len(alive) else 2
    vals = np.exp(left[: n_house - 2]) - np.exp(right[: n_house - 2])
    a2_map = {n: float(vals[n - 3]) for n in range(3, n_house + 1)}

    return CoefficientSet(
        a0=core.a0,
        a1=-core.denominator,
        a2=a2_map,
        a3_lower=core.a3_lower,
        thresholds=thresholds,
        a2_all_positive=a2_all_positive,
    )


def _clamped_entropy_arg(x: float) -> float:
    return min(0.5, max(0.0, x))


def gllp_rate_untrusted(
    obs: ObservedStats,
    window: Window,
    params: ProtocolParams,
    source: SourceSpec,
) -> KeyRateReport:
    """Single-intensity rate conceding all multiphoton windows to the adversary.

    The privacy-amplification mass is the gain that provably came from
    untagged zero- or one-photon pulses: q_omega = Q_lower + P0_lower +
    P1_upper - 1. Error correction is charged on the raw observed statistics.
    """
    n = source.mean_photons
    _require_condition1(n, window.delta, params.lambda_signal, "signal")
    bounds = pn_bounds(n, window.delta, params.lambda_signal)
    q_lower, q_upper = gain_bounds(obs, window)
    p0_lower = bounds.lower(0)
    p1_upper = bounds.upper(1)
    q_omega_raw = q_lower + p0_lower + p1_upper - 1.0

    ec = -obs.gain * params.ec_inefficiency * binary_entropy(obs.qber)
    if q_omega_raw > 0.0:
        arg = _clamped_entropy_arg(obs.gain * obs.qber / q_omega_raw)
        pa = q_omega_raw * (1.0 - binary_entropy(arg))
    else:
        pa = 0.0
    rate_raw = params.sift_factor * (ec + pa)
    return KeyRateReport(
        rate_raw=rate_raw,
        rate=max(0.0, rate_raw),
        q_omega_lower=max(0.0, q_omega_raw),
        condition_flags={"cond1_signal": True},
        intermediates={
            "q_lower": q_lower,
            "q_upper": q_upper,
            "p0_lower": p0_lower,
            "p1_upper": p1_upper,
            "q_omega_raw": q_omega_raw,
            "ec_term": ec,
            "pa_term": pa,
        },
    )


def _require_decoy_preconditions(
    window: Window, params: ProtocolParams, source: SourceSpec
) -> tuple[float, float, float]:
    if params.protocol not in (WEAK_VACUUM, ONE_DECOY):
        raise DomainError(
            f"decoy estimator called with protocol {params.protocol!r}"
        )
    n = source.mean_photons
    _require_condition1(n, window.delta, params.lambda_signal, "signal")
    _require_condition1(n, window.delta, params.lambda_decoy, "decoy")
    thresholds = condition_thresholds(n, window.delta)
    ratio = params.lambda_signal / params.lambda_decoy
    if ratio <= thresholds[2]:
        raise ConditionViolation(
            f"intensity ratio lambda_signal/lambda_decoy = {ratio!r} must exceed "
            f"the coefficient-sign threshold {thresholds[2]!r} "
            f"(N={n!r}, delta={window.delta!r})"
        )
    return thresholds


def _q1_from_core(
    core: _EnvelopeCore,
    q_lower_d: float,
    q_upper_s: float,
    q_upper_v: float,
) -> float:
    if core.denominator <= 0.0:
        raise InternalInconsistencyError(
            "single-photon denominator "
            f"{core.denominator!r} must be positive when the intensity ratio "
            "exceeds its threshold; envelope evaluation is inconsistent"
        )
    numer = (
        q_lower_d * core.p2_lower_s
        - q_upper_s * core.p2_upper_d
        + core.a0 * q_upper_v
        + core.a3_lower
    )
    q1 = core.p1_lower_s * numer / core.denominator
    return min(q_upper_s, max(0.0, q1))


def wv_q1_lower(
    obs_s: ObservedStats,
    obs_d: ObservedStats,
    obs_v: ObservedStats,
    window: Window,
    params: ProtocolParams,
    source: SourceSpec,
) -> float:
    """Lower bound on the untagged single-photon gain of the signal state,
    from signal, decoy, and vacuum measurements."""
    _require_decoy_preconditions(window, params, source)
    core = _envelope_core(
        source.mean_photons, window.delta, params.lambda_signal, params.lambda_decoy
    )
    q_lower_d, _ = gain_bounds(obs_d, window)
    _, q_upper_s = gain_bounds(obs_s, window)
    _, q_upper_v = gain_bounds(obs_v, window)
    return _q1_from_core(core, q_lower_d, q_upper_s, q_upper_v)


def wv_e1_upper(
    q1_lower: float,
    obs_s: ObservedStats,
    obs_v: ObservedStats,
    window: Window,
    params: ProtocolParams,
    source: SourceSpec,
) -> float:
    """Upper bound on the untagged single-photon error rate, raw (unclamped).

    Undefined at q1_lower = 0; the caller must then zero the
    privacy-amplification term instead of calling this.
    """
    if q1_lower <= 0.0:
        raise DomainError(
            "single-photon error bound is undefined when q1_lower = 0; "
            "treat the privacy-amplification term as 0"
        )
    m_lo, m_hi = window_edges(source.mean_photons, window.delta)
    p0_lower_s = math.exp(m_hi * log1m(params.lambda_signal))
    _, eq_upper_s = error_gain_bounds(obs_s, window)
    eq_lower_v, _ = error_gain_bounds(obs_v, window)
    return (eq_upper_s - p0_lower_s * eq_lower_v) / q1_lower


def one_decoy_q1_e1(
    obs_s: ObservedStats,
    obs_d: ObservedStats,
    window: Window,
    params: ProtocolParams,
    source: SourceSpec,
) -> tuple[float, float]:
    """Single-photon bounds without a measured vacuum state.

    The unmeasured vacuum gain is replaced by its error-rate implied ceiling
    eq_upper_s / (p0_lower_s * 1/2), valid only in the asymptotic regime
    where the vacuum error rate is exactly 1/2; the vacuum error-gain lower
    bound is taken as 0, so e1_upper = eq_upper_s / q1_lower.
    """
    if not source.asymptotic:
        raise UnsupportedModeError(
            "the two-state estimator is only valid in asymptotic mode "
            f"(sequence_length={source.sequence_length!r}); supply a measured "
            "vacuum state for finite sequences"
        )
    _require_decoy_preconditions(window, params, source)
    core = _envelope_core(
        source.mean_photons, window.delta, params.lambda_signal, params.lambda_decoy
    )
    q_lower_d, _ = gain_bounds(obs_d, window)
    _, q_upper_s = gain_bounds(obs_s, window)
    _, eq_upper_s = error_gain_bounds(obs_s, window)
    q_upper_v = eq_upper_s / (core.p0_lower_s * 0.5)
    q1 = _q1_from_core(core, q_lower_d, q_upper_s, q_upper_v)
    if q1 > 0.0:
        e1 = eq_upper_s / q1
    else:
        e1 = 0.0 if eq_upper_s == 0.0 else math.inf
    return q1, e1


def decoy_rate(
    q1_lower: float,
    e1_upper: float,
    obs_s: ObservedStats,
    window: Window,
    params: ProtocolParams,
) -> KeyRateReport:
    """Rate from single-photon bounds: EC on raw signal statistics, privacy
    amplification on the guaranteed-untagged single-photon fraction."""
    if q1_lower < 0.0:
        raise DomainError(f"q1_lower must be >= 0, got {q1_lower!r}")
    untagged = window.untagged_floor
    if untagged <= 0.0:
        raise VacuousBoundsError(
            f"decoy_rate: Delta={window.Delta!r} + epsilon={window.epsilon!r} "
            ">= 1 leaves no guaranteed untagged bits"
        )
    e1_used = _clamped_entropy_arg(e1_upper)
    ec = -obs_s.gain * params.ec_inefficiency * binary_entropy(obs_s.qber)
    pa = untagged * q1_lower * (1.0 - binary_entropy(e1_used))
    rate_raw = params.sift_factor * (ec + pa)
    return KeyRateReport(
        rate_raw=rate_raw,
        rate=max(0.0, rate_raw),
        q1_lower=q1_lower,
        e1_upper=e1_upper,
        condition_flags={},
        intermediates={
            "e1_used": e1_used,
            "ec_term": ec,
            "pa_term": pa,
            "untagged_floor": untagged,
        },
    )


def _decoy_flags(
    window: Window, params: ProtocolParams, source: SourceSpec
) -> tuple[dict, dict]:
    n = source.mean_photons
    thresholds = condition_thresholds(n, window.delta)
    ratio = params.lambda_signal / params.lambda_decoy
    flags = {
        "cond1_signal": condition1_check(n, window.delta, params.lambda_signal),
        "cond1_decoy": condition1_check(n, window.delta, params.lambda_decoy),
        "cond2a": ratio > thresholds[0],
        "cond2b": ratio > thresholds[1],
        "cond2": ratio > thresholds[2],
    }
    extras = {
        "ratio": ratio,
        "cond2a_threshold": thresholds[0],
        "cond2b_threshold": thresholds[1],
        "cond2_threshold": thresholds[2],
    }
    return flags, extras


def wv_rate_untrusted(
    obs_s: ObservedStats,
    obs_d: ObservedStats,
    obs_v: ObservedStats,
    window: Window,
    params: ProtocolParams,
    source: SourceSpec,
) -> KeyRateReport:
    """Full three-state pipeline: estimators plus rate in one report."""
    q1 = wv_q1_lower(obs_s, obs_d, obs_v, window, params, source)
    _, eq_upper_s = error_gain_bounds(obs_s, window)
    if q1 > 0.0:
        e1 = wv_e1_upper(q1, obs_s, obs_v, window, params, source)
    else:
        e1 = 0.0 if eq_upper_s == 0.0 else math.inf
    report = decoy_rate(q1, e1, obs_s, window, params)
    flags, extras = _decoy_flags(window, params, source)
    return KeyRateReport(
        rate_raw=report.rate_raw,
        rate=report.rate,
        q1_lower=q1,
        e1_upper=e1,
        condition_flags=flags,
        intermediates={**report.intermediates, **extras},
    )


def one_decoy_rate_untrusted(
    obs_s: ObservedStats,
    obs_d: ObservedStats,
    window: Window,
    params: ProtocolParams,
    source: SourceSpec,
) -> KeyRateReport:
    """Full two-state pipeline: estimators plus rate in one report."""
    q1, e1 = one_decoy_q1_e1(obs_s, obs_d, window, params, source)
    report = decoy_rate(q1, e1, obs_s, window, params)
    flags, extras = _decoy_flags(window, params, source)
    return KeyRateReport(
        rate_raw=report.rate_raw,
        rate=report.rate,
        q1_lower=q1,
        e1_upper=e1,
        condition_flags=flags,
        intermediates={**report.intermediates, **extras},
    )
