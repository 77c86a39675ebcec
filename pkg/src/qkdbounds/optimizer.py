"""Exhaustive grid search and distance sweeps.

Transmittances are searched on a log-spaced grid capped just below the
window-validity limit 1/((1+delta)N). All grid evaluations run through the
backend kernels; the winning point is then re-evaluated through the scalar
pipeline so the reported numbers carry full condition flags and audit
intermediates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels
from .channel import DetectorParams, simulate_observables
from .errors import DomainError, NoFeasiblePointError
from .numerics import log_factorial
from .observed import DECOY, SIGNAL, VACUUM
from .protocols import (
    GLLP,
    ONE_DECOY,
    WEAK_VACUUM,
    KeyRateReport,
    ProtocolParams,
    condition_thresholds,
    gllp_rate_untrusted,
    one_decoy_rate_untrusted,
    wv_rate_untrusted,
)
from .source import SourceSpec, Window, tagged_fraction, sampling_epsilon, window_edges

RATE_THRESHOLD = 1e-12
DEFAULT_POINTS_PER_DECADE = 25
DEFAULT_DECADES = 4.0
MAX_DISTANCE_CAP_KM = 500.0

# Margin keeping the grid top strictly inside the validity region.
_CAP_MARGIN = 1.0 - 1e-9


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep: distances, the transmittance grid, window widths."""

    distances_km: tuple[float, ...]
    protocol: ProtocolParams
    delta_grid: tuple[float, ...] = (0.01,)
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    points_per_decade: int = DEFAULT_POINTS_PER_DECADE
    decades: float = DEFAULT_DECADES
    max_distance_cap_km: float = MAX_DISTANCE_CAP_KM

    def __post_init__(self) -> None:
        if len(self.delta_grid) == 0:
            raise DomainError("delta_grid must be non-empty")
        if self.points_per_decade < 1:
            raise DomainError(
                f"points_per_decade must be >= 1, got {self.points_per_decade!r}"
            )
        if self.decades <= 0:
            raise DomainError(f"decades must be > 0, got {self.decades!r}")


@dataclass(frozen=True)
class SweepRow:
    distance_km: float
    delta: float
    lambda_signal: float
    lambda_decoy: float  # nan for the single-intensity protocol
    rate_untrusted: float
    rate_trusted: float
    ratio: float  # nan when rate_trusted is 0


def lambda_grid(spec: SweepSpec, source: SourceSpec, delta: float) -> np.ndarray:
    """Log-spaced transmittance grid below the validity cap for this window."""
    cap = _CAP_MARGIN / ((1.0 + delta) * source.mean_photons)
    top = cap if spec.lambda_max is None else min(spec.lambda_max, cap)
    bottom = spec.lambda_min
    if bottom is None:
        bottom = top * 10.0 ** (-spec.decades)
    if not 0.0 < bottom <= top:
        raise DomainError(
            f"lambda grid needs 0 < min <= max, got [{bottom!r}, {top!r}]"
        )
    span = math.log10(top / bottom)
    points = max(1, round(spec.points_per_decade * span)) + 1
    return np.logspace(math.log10(bottom), math.log10(top), points)


def build_window(
    source: SourceSpec, delta: float, epsilon: Optional[float] = None
) -> Window:
    if epsilon is None:
        epsilon = sampling_epsilon(source.sequence_length)
    return Window(delta=delta, Delta=tagged_fraction(source, delta), epsilon=epsilon)


def _observable_vectors(
    mu: np.ndarray, distance_km: float, detector: DetectorParams
) -> tuple[np.ndarray, np.ndarray]:
    eta = 10.0 ** (-detector.alpha_db_per_km * distance_km / 10.0) * detector.eta_bob
    click = -np.expm1(-eta * mu)
    gain = np.minimum(1.0, detector.y0 + click)
    err = detector.e0 * detector.y0 + detector.e_det * click
    qber = np.where(gain > 0.0, np.minimum(1.0, err / np.where(gain > 0.0, gain, 1.0)),
                    detector.e0)
    return gain, qber


def _envelope_vectors(grid: np.ndarray, m_lo: int, m_hi: int) -> dict[str, np.ndarray]:
    log1m = np.log1p(-grid)
    log_lam = np.log(grid)
    log_c2_lo = math.log(m_lo * (m_lo - 1) / 2.0)
    log_c2_hi = math.log(m_hi * (m_hi - 1) / 2.0)
    log_p2l = log_c2_lo + 2.0 * log_lam + (m_lo - 2) * log1m
    return {
        "log1m": log1m,
        "p0l_s": np.exp(m_hi * log1m),
        "p0u_d": np.exp(m_lo * log1m),
        "p1l_s": np.exp(math.log(m_lo) + log_lam + (m_lo - 1) * log1m),
        "p1u_d": np.exp(math.log(m_hi) + log_lam + (m_hi - 1) * log1m),
        "p2l_s": np.exp(log_p2l),
        "p2u_d": np.exp(log_c2_hi + 2.0 * log_lam + (m_hi - 2) * log1m),
        "log_p2l_s": log_p2l,
        "p1u_s": np.exp(math.log(m_hi) + log_lam + (m_hi - 1) * log1m),
    }


def _untrusted_grid_rates(
    distance_km: float,
    spec: SweepSpec,
    source: SourceSpec,
    detector: DetectorParams,
    window: Window,
    grid: np.ndarray,
    backend: Optional[str] = None,
) -> np.ndarray:
    """Raw-rate array (1-D for gllp, 2-D pair matrix for decoy protocols)."""
    params = spec.protocol
    n = source.mean_photons
    m_lo, m_hi = window_edges(n, window.delta)
    env = _envelope_vectors(grid, m_lo, m_hi)
    q_e, e_e = _observable_vectors(n * grid, distance_km, detector)
    de = window.Delta + window.epsilon
    w = window.untagged_floor
    if params.protocol == GLLP:
        return _kernels.gllp_rate_vector(
            q_e, e_e, env["p0l_s"], env["p1u_s"], de, w,
            params.ec_inefficiency, params.sift_factor, backend=backend,
        )
    cond2 = condition_thresholds(n, window.delta)[2]
    vac = simulate_observables(0.0, distance_km, detector, state_label=VACUUM)
    two_dn = 2.0 * window.delta * n
    c0 = math.log(two_dn) - log_factorial(m_lo + 1)
    c1 = two_dn - 1.0
    return _kernels.decoy_rate_matrix(
        params.protocol == ONE_DECOY,
        grid, q_e, e_e,
        env["p0l_s"], env["p0u_d"], env["p1l_s"], env["p1u_d"],
        env["p2l_s"], env["p2u_d"], env["log_p2l_s"], env["log1m"],
        vac.gain, vac.qber, de, w,
        params.ec_inefficiency, params.sift_factor, cond2, c0, c1,
        backend=backend,
    )


def optimize_lambdas(
    distance_km: float,
    spec: SweepSpec,
    source: SourceSpec,
    detector: DetectorParams,
    delta: Optional[float] = None,
    epsilon: Optional[float] = None,
    backend: Optional[str] = None,
) -> tuple[float, float, KeyRateReport]:
    """Best grid point at one distance.

    Returns (lambda_signal, lambda_decoy, report); lambda_decoy is nan for
    the single-intensity protocol. Ties go to the smaller lambda_signal,
    then the smaller lambda_decoy (first flat maximum in scan order).
    """
    if delta is None:
        delta = spec.delta_grid[0]
    window = build_window(source, delta, epsilon)
    grid = lambda_grid(spec, source, delta)
    rates = _untrusted_grid_rates(
        distance_km, spec, source, detector, window, grid, backend=backend
    )
    flat = int(np.argmax(rates))
    best = float(rates.flat[flat])
    if not np.isfinite(best):
        raise NoFeasiblePointError(
            f"no grid point satisfies the validity conditions at "
            f"distance {distance_km!r} km (protocol "
            f"{spec.protocol.protocol}, delta={delta!r})"
        )
    params = spec.protocol
    if params.protocol == GLLP:
        lam_s = float(grid[flat])
        point = replace(params, lambda_signal=lam_s, lambda_decoy=None)
        obs = simulate_observables(
            source.mean_photons * lam_s, distance_km, detector, state_label=SIGNAL
        )
        report = gllp_rate_untrusted(obs, window, point, source)
        return lam_s, math.nan, report

    i, j = np.unravel_index(flat, rates.shape)
    lam_s = float(grid[i])
    lam_d = float(grid[j])
    point = replace(params, lambda_signal=lam_s, lambda_decoy=lam_d)
    n = source.mean_photons
    obs_s = simulate_observables(n * lam_s, distance_km, detector, state_label=SIGNAL)
    obs_d = simulate_observables(n * lam_d, distance_km, detector, state_label=DECOY)
    if params.protocol == WEAK_VACUUM:
        obs_v = simulate_observables(0.0, distance_km, detector, state_label=VACUUM)
        report = wv_rate_untrusted(obs_s, obs_d, obs_v, window, point, source)
    else:
        report = one_decoy_rate_untrusted(obs_s, obs_d, window, point, source)
    return lam_s, lam_d, report


# ---------------------------------------------------------------------------
# trusted baselines over the same grid (vectorized; no window machinery)


def _h2_vec(x: np.ndarray) -> np.ndarray:
    return _kernels._h2_vec(x)


def _trusted_gllp_rates(
    mu: np.ndarray, distance_km: float, detector: DetectorParams,
    params: ProtocolParams,
) -> np.ndarray:
    gain, qber = _observable_vectors(mu, distance_km, detector)
    p_multi = 1.0 - (1.0 + mu) * np.exp(-mu)
    single = gain - p_multi
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.clip(
            np.where(single > 0.0, gain * qber / np.where(single > 0.0, single, 1.0), 0.0),
            0.0, 0.5,
        )
    pa = np.where(single > 0.0, single * (1.0 - _h2_vec(arg)), 0.0)
    ec = -gain * params.ec_inefficiency * _h2_vec(qber)
    return params.sift_factor * (ec + pa)


def _trusted_decoy_rates(
    protocol: str, mu: np.ndarray, distance_km: float,
    detector: DetectorParams, params: ProtocolParams,
) -> np.ndarray:
    gain, qber = _observable_vectors(mu, distance_km, detector)
    col = np.newaxis
    m = mu[:, col]
    v = mu[col, :]
    q_m = gain[:, col]
    e_m = qber[:, col]
    q_v = gain[col, :]
    e_v = qber[col, :]
    feas = v < m
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        denom = np.where(feas, m * v - v * v, 1.0)
        y0_term = 0.0
        if protocol == WEAK_VACUUM:
            y0_term = ((m * m - v * v) / (m * m)) * detector.y0
        y1 = (m / denom) * (
            q_v * np.exp(v) - q_m * np.exp(m) * v * v / (m * m) - y0_term
        )
        y1 = np.clip(y1, 0.0, 1.0)
        pos = y1 > 0.0
        safe_y1 = np.where(pos, y1, 1.0)
        if protocol == WEAK_VACUUM:
            e1 = (e_v * q_v * np.exp(v) - detector.e0 * detector.y0) / (safe_y1 * v)
        else:
            e1 = e_m * q_m * np.exp(m) / (safe_y1 * m)
        e1_used = np.clip(e1, 0.0, 0.5)
        q1 = y1 * m * np.exp(-m)
        pa = np.where(pos, q1 * (1.0 - _h2_vec(e1_used)), 0.0)
        ec = -q_m * params.ec_inefficiency * _h2_vec(e_m)
        rate = params.sift_factor * (ec + pa)
        return np.where(feas, rate, -np.inf)


def trusted_best_rate(
    distance_km: float,
    spec: SweepSpec,
    source: SourceSpec,
    detector: DetectorParams,
    delta: Optional[float] = None,
) -> float:
    """Optimized trusted-source rate (clamped at 0) over the same grid,
    mapped to mean photon numbers mu = N * lambda."""
    if delta is None:
        delta = spec.delta_grid[0]
    grid = lambda_grid(spec, source, delta)
    mu = source.mean_photons * grid
    protocol = spec.protocol.protocol
    if protocol == GLLP:
        rates = _trusted_gllp_rates(mu, distance_km, detector, spec.protocol)
    else:
        rates = _trusted_decoy_rates(
            protocol, mu, distance_km, detector, spec.protocol
        )
    best = float(np.max(rates))
    return max(0.0, best)


def sweep(
    spec: SweepSpec,
    source: SourceSpec,
    detector: DetectorParams,
    epsilon: Optional[float] = None,
) -> list[SweepRow]:
    """One row per (delta, distance), in the order given."""
    rows: list[SweepRow] = []
    for delta in spec.delta_grid:
        for distance in spec.distances_km:
            lam_s, lam_d, report = optimize_lambdas(
                distance, spec, source, detector, delta=delta, epsilon=epsilon
            )
            trusted = trusted_best_rate(distance, spec, source, detector, delta=delta)
            ratio = report.rate / trusted if trusted > 0.0 else math.nan
            rows.append(
                SweepRow(
                    distance_km=distance,
                    delta=delta,
                    lambda_signal=lam_s,
                    lambda_decoy=lam_d,
                    rate_untrusted=report.rate,
                    rate_trusted=trusted,
                    ratio=ratio,
                )
            )
    return rows


def _rate_at(
    distance_km: float,
    spec: SweepSpec,
    source: SourceSpec,
    detector: DetectorParams,
    delta: float,
    trusted: bool,
) -> float:
    if trusted:
        return trusted_best_rate(distance_km, spec, source, detector, delta=delta)
    try:
        _, _, report = optimize_lambdas(
            distance_km, spec, source, detector, delta=delta
        )
    except NoFeasiblePointError:
        return 0.0
    return report.rate


def max_distance(
    spec: SweepSpec,
    source: SourceSpec,
    detector: DetectorParams,
    protocol: Optional[str] = None,
    delta: Optional[float] = None,
    trusted: bool = False,
) -> float:
    """Largest distance with optimized rate above RATE_THRESHOLD.

    1 km coarse scan from zero, then bisection to 0.1 km. Returns 0 when the
    rate is already below threshold at zero distance, and the configured cap
    when the rate never dies within it (possible for the trusted two-state
    baseline, whose dropped-background estimator does not decay).
    """
    if protocol is not None:
        spec = replace(spec, protocol=replace(spec.protocol, protocol=protocol))
    if delta is None:
        delta = spec.delta_grid[0]
    cap = spec.max_distance_cap_km

    def alive(l: float) -> bool:
        return _rate_at(l, spec, source, detector, delta, trusted) > RATE_THRESHOLD

    if not alive(0.0):
        return 0.0
    lo = 0.0
    hi = None
    step = 1.0
    while lo + step <= cap:
        nxt = lo + step
        if alive(nxt):
            lo = nxt
        else:
            hi = nxt
            break
    if hi is None:
        return cap
    while hi - lo > 0.1:
        mid = 0.5 * (lo + hi)
        if alive(mid):
            lo = mid
        else:
            hi = mid
    return lo
