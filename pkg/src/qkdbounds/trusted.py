"""Trusted-source baseline rates.

Standard asymptotic formulas for a calibrated Poissonian source, used only
as the denominator of the untrusted/trusted comparisons. Kept apart from
the window-based analysis on purpose: nothing here feeds the bounds.
"""

from __future__ import annotations

import math

from .channel import DetectorParams, channel_transmittance, simulate_observables
from .errors import DomainError
from .numerics import binary_entropy
from .protocols import (
    ONE_DECOY,
    WEAK_VACUUM,
    KeyRateReport,
    ProtocolParams,
    _clamped_entropy_arg,
)


def gllp_rate_trusted(
    mu: float,
    distance_km: float,
    detector: DetectorParams,
    params: ProtocolParams,
) -> KeyRateReport:
    """Single-intensity trusted rate with Poisson photon statistics.

    Every multiphoton pulse (probability 1 - (1+mu) e^-mu) is conceded.
    """
    if mu <= 0:
        raise DomainError(f"gllp_rate_trusted requires mu > 0, got {mu!r}")
    obs = simulate_observables(mu, distance_km, detector)
    p_multi = 1.0 - (1.0 + mu) * math.exp(-mu)
    single_mass = obs.gain - p_multi

    ec = -obs.gain * params.ec_inefficiency * binary_entropy(obs.qber)
    if single_mass > 0.0:
        arg = _clamped_entropy_arg(obs.gain * obs.qber / single_mass)
        pa = single_mass * (1.0 - binary_entropy(arg))
    else:
        pa = 0.0
    rate_raw = params.sift_factor * (ec + pa)
    return KeyRateReport(
        rate_raw=rate_raw,
        rate=max(0.0, rate_raw),
        intermediates={
            "gain": obs.gain,
            "qber": obs.qber,
            "p_multi": p_multi,
            "single_mass": single_mass,
        },
    )


def trusted_y1_e1(
    protocol: str,
    mu: float,
    nu: float,
    distance_km: float,
    detector: DetectorParams,
) -> tuple[float, float]:
    """Asymptotic decoy estimates (Y1 lower, e1 upper) for a trusted source.

    weak_vacuum uses the measured background Y0; one_decoy has no vacuum
    state to measure it with and drops the Y0 term entirely. That term
    enters negatively, so dropping it can only raise the estimate: the
    one_decoy Y1 is not guaranteed to stay below the true single-photon
    yield and grows without limit as nu -> 0. Optimized one_decoy
    baselines are fragile by construction.
    """
    if protocol not in (WEAK_VACUUM, ONE_DECOY):
        raise DomainError(
            f"trusted decoy baseline requires weak_vacuum or one_decoy, "
            f"got {protocol!r}"
        )
    if not 0.0 < nu < mu:
        raise DomainError(f"requires 0 < nu < mu, got nu={nu!r}, mu={mu!r}")
    obs_mu = simulate_observables(mu, distance_km, detector)
    obs_nu = simulate_observables(nu, distance_km, detector)
    q_mu, e_mu = obs_mu.gain, obs_mu.qber
    q_nu, e_nu = obs_nu.gain, obs_nu.qber

    y0_term = 0.0
    if protocol == WEAK_VACUUM:
        y0_term = ((mu * mu - nu * nu) / (mu * mu)) * detector.y0
    y1 = (mu / (mu * nu - nu * nu)) * (
        q_nu * math.exp(nu) - q_mu * math.exp(mu) * nu * nu / (mu * mu) - y0_term
    )
    y1 = min(1.0, max(0.0, y1))
    if y1 <= 0.0:
        return 0.0, math.inf
    if protocol == WEAK_VACUUM:
        e1 = (e_nu * q_nu * math.exp(nu) - detector.e0 * detector.y0) / (y1 * nu)
    else:
        e1 = e_mu * q_mu * math.exp(mu) / (y1 * mu)
    return y1, e1


def decoy_rate_trusted(
    protocol: str,
    mu: float,
    nu: float,
    distance_km: float,
    detector: DetectorParams,
    params: ProtocolParams,
) -> KeyRateReport:
    """Trusted decoy-state rate from the Y1/e1 estimates."""
    y1, e1 = trusted_y1_e1(protocol, mu, nu, distance_km, detector)
    obs_mu = simulate_observables(mu, distance_km, detector)
    q1 = y1 * mu * math.exp(-mu)
    e1_used = _clamped_entropy_arg(e1)
    ec = -obs_mu.gain * params.ec_inefficiency * binary_entropy(obs_mu.qber)
    pa = q1 * (1.0 - binary_entropy(e1_used))
    rate_raw = params.sift_factor * (ec + pa)
    return KeyRateReport(
        rate_raw=rate_raw,
        rate=max(0.0, rate_raw),
        q1_lower=q1,
        e1_upper=e1,
        intermediates={
            "y1": y1,
            "e1_used": e1_used,
            "gain": obs_mu.gain,
            "qber": obs_mu.qber,
        },
    )


def true_single_photon_yield(distance_km: float, detector: DetectorParams) -> float:
    """Forward-model Y1 = Y0 + eta (1 - Y0) for self-consistency checks."""
    eta = channel_transmittance(distance_km, detector) * detector.eta_bob
    return detector.y0 + eta * (1.0 - detector.y0)
