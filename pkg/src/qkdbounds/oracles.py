"""Brute-force adversary model at small scale.

Everything the bound pipeline estimates, this module computes exactly by
enumerating the full (input photons m, output photons n) lattice for an
arbitrary detection strategy Y[m, n], e[m, n]. The randomized campaign
then checks that every bound actually contains its ground truth, which is
the strongest correctness evidence available: the full-scale claims are
out of enumeration reach by construction.

The binomial pmf here comes from scipy.stats, deliberately not from the
package's own log-space evaluation, so the two routes stay independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy.stats import binom, poisson

from .errors import DomainError, ScaleError
from .observed import DECOY, SIGNAL, VACUUM, ObservedStats, untagged_bounds
from .protocols import (
    ONE_DECOY,
    WEAK_VACUUM,
    ProtocolParams,
    condition_thresholds,
    gllp_rate_untrusted,
    one_decoy_q1_e1,
    wv_e1_upper,
    wv_q1_lower,
)
from .source import (
    EMPIRICAL_HISTOGRAM,
    POISSON_EXACT,
    SourceSpec,
    Window,
    tagged_fraction,
    window_edges,
)

ORACLE_N_LIMIT = 200

# Exact-arithmetic checks run at double precision; this absorbs the float
# noise of the two computation routes without hiding real violations.
_TOL = 1e-12
_DECOMP_TOL = 1e-10

STRATEGY_FAMILIES = ("iid_uniform", "n_only", "m_only", "two_photon_spike")


@dataclass(frozen=True)
class AdversaryStrategy:
    """Detection strategy on the (m, n) lattice, shared across states.

    yields[m, n] is the detection probability given m photons entered and n
    left; errors[m, n] the error probability given a detection. Entries
    with n > m are never read.
    """

    yields: np.ndarray
    errors: np.ndarray
    seed: Optional[int] = None
    family: str = "explicit"

    def __post_init__(self) -> None:
        y = np.asarray(self.yields, dtype=float)
        e = np.asarray(self.errors, dtype=float)
        if y.shape != e.shape or y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise DomainError(
                f"strategy matrices must share a square shape, got "
                f"{y.shape} and {e.shape}"
            )
        if np.any((y < 0) | (y > 1)) or np.any((e < 0) | (e > 1)):
            raise DomainError("strategy probabilities must lie in [0, 1]")
        object.__setattr__(self, "yields", y)
        object.__setattr__(self, "errors", e)

    @property
    def support_max(self) -> int:
        return self.yields.shape[0] - 1

    @staticmethod
    def from_functions(support_max, yield_fn, error_fn, family="explicit"):
        size = support_max + 1
        y = np.zeros((size, size))
        e = np.zeros((size, size))
        for m in range(size):
            for n in range(m + 1):
                y[m, n] = yield_fn(m, n)
                e[m, n] = error_fn(m, n)
        return AdversaryStrategy(yields=y, errors=e, family=family)


@dataclass(frozen=True)
class GroundTruth:
    """Exact untagged statistics for one (source, window, strategy) instance."""

    q_untagged: Mapping[str, float]
    eq_untagged: Mapping[str, float]
    q1_true: float
    e1_true: float
    q0_true: float
    y_n: Mapping[str, np.ndarray]
    emission: Mapping[str, np.ndarray]
    p_m_given_n: Mapping[str, np.ndarray]
    window_ms: np.ndarray
    p_tilde: np.ndarray
    lambdas: Mapping[str, float]
    strategy: AdversaryStrategy


def _input_pmf(source: SourceSpec, support_max: int) -> np.ndarray:
    ms = np.arange(support_max + 1)
    if source.distribution == POISSON_EXACT:
        return poisson.pmf(ms, source.mean_photons)
    if source.distribution == EMPIRICAL_HISTOGRAM:
        p = np.zeros(support_max + 1)
        for count, prob in source.histogram.items():
            if count > support_max:
                raise DomainError(
                    f"histogram support m={count} exceeds strategy support "
                    f"{support_max}"
                )
            p[int(count)] = prob
        return p
    raise DomainError(
        "ground truth needs an integer photon-number distribution "
        f"(poisson_exact or empirical_histogram), not {source.distribution!r}"
    )


def _state_pmf_matrix(support_max: int, lam: float) -> np.ndarray:
    """P_n(m) as a matrix [m, n] over the full lattice."""
    ms = np.arange(support_max + 1)
    ns = np.arange(support_max + 1)
    return binom.pmf(ns[np.newaxis, :], ms[:, np.newaxis], lam)


def ground_truth(
    source: SourceSpec,
    window: Window,
    lambdas: Mapping[str, float],
    strategy: AdversaryStrategy,
) -> GroundTruth:
    """Exact enumeration of every untagged quantity the pipeline bounds.

    Untagged statistics are conditional on the window: the input pmf is
    restricted to [m_lo, m_hi] and renormalized, matching what the
    interval bounds assert about the untagged subpopulation.
    """
    n_mean = source.mean_photons
    if n_mean > ORACLE_N_LIMIT:
        raise ScaleError(
            f"exhaustive oracle is limited to N <= {ORACLE_N_LIMIT}, "
            f"got N={n_mean!r}"
        )
    support_max = strategy.support_max
    m_lo, m_hi = window_edges(n_mean, window.delta)
    if m_hi > support_max:
        raise DomainError(
            f"strategy support {support_max} does not cover the window top {m_hi}"
        )
    p_in = _input_pmf(source, support_max)
    window_ms = np.arange(m_lo, m_hi + 1)
    inside = float(p_in[m_lo : m_hi + 1].sum())
    if inside <= 0.0:
        raise DomainError("input distribution has no mass inside the window")
    p_tilde = p_in[m_lo : m_hi + 1] / inside

    lam_map = dict(lambdas)
    lam_map.setdefault(VACUUM, 0.0)

    y_win = strategy.yields[m_lo : m_hi + 1, :]
    e_win = strategy.errors[m_lo : m_hi + 1, :]
    ye_win = y_win * e_win

    q_untagged = {}
    eq_untagged = {}
    y_n = {}
    emission = {}
    p_m_given_n = {}
    for state, lam in lam_map.items():
        pn_full = _state_pmf_matrix(support_max, lam)
        pn_win = pn_full[m_lo : m_hi + 1, :]
        weighted = p_tilde[:, np.newaxis] * pn_win
        q_untagged[state] = float(np.sum(weighted * y_win))
        eq_untagged[state] = float(np.sum(weighted * ye_win))
        emit = weighted.sum(axis=0)
        emission[state] = emit
        qn = np.sum(weighted * y_win, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            yn = np.where(emit > 0.0, qn / np.where(emit > 0.0, emit, 1.0), 0.0)
            cond = np.where(
                emit[np.newaxis, :] > 0.0,
                weighted / np.where(emit[np.newaxis, :] > 0.0, emit[np.newaxis, :], 1.0),
                0.0,
            )
        y_n[state] = yn
        # [n, m] conditional distribution over window input sizes
        p_m_given_n[state] = cond.T

    pn_signal = _state_pmf_matrix(support_max, lam_map[SIGNAL])[m_lo : m_hi + 1, :]
    w_signal = p_tilde * pn_signal[:, 1]
    q1_true = float(np.sum(w_signal * y_win[:, 1]))
    e1_num = float(np.sum(w_signal * ye_win[:, 1]))
    e1_true = e1_num / q1_true if q1_true > 0.0 else 0.0
    q0_true = float(np.sum(p_tilde * pn_signal[:, 0] * y_win[:, 0]))

    return GroundTruth(
        q_untagged=q_untagged,
        eq_untagged=eq_untagged,
        q1_true=q1_true,
        e1_true=e1_true,
        q0_true=q0_true,
        y_n=y_n,
        emission=emission,
        p_m_given_n=p_m_given_n,
        window_ms=window_ms,
        p_tilde=p_tilde,
        lambdas=lam_map,
        strategy=strategy,
    )


def yn_decomposition_check(truth: GroundTruth) -> bool:
    """Verify Y_n equals the conditional mixture sum for every emitting n.

    The direct route divides aggregate sums; the mixture route builds the
    conditional input distribution P{m|n} explicitly and recombines. Both
    must agree within 1e-10, and each conditional distribution must sum
    to 1.
    """
    m_lo = int(truth.window_ms[0])
    for state, emit in truth.emission.items():
        cond = truth.p_m_given_n[state]
        yn_direct = truth.y_n[state]
        y_win = truth.strategy.yields[m_lo : m_lo + len(truth.window_ms), :]
        for n in range(len(emit)):
            if emit[n] <= 0.0:
                continue
            row = cond[n, :]
            if abs(float(row.sum()) - 1.0) > _DECOMP_TOL:
                return False
            mixture = float(np.dot(row, y_win[:, n]))
            if abs(mixture - yn_direct[n]) > _DECOMP_TOL:
                return False
    return True


def population_observables(
    source: SourceSpec,
    lam: float,
    strategy: AdversaryStrategy,
    state_label: str,
) -> ObservedStats:
    """Exact full-population gain and QBER for one intensity setting."""
    support_max = strategy.support_max
    p_in = _input_pmf(source, support_max)
    pn = _state_pmf_matrix(support_max, lam)
    weighted = p_in[:, np.newaxis] * pn
    gain = float(np.sum(weighted * strategy.yields))
    eq = float(np.sum(weighted * strategy.yields * strategy.errors))
    qber = eq / gain if gain > 0.0 else 0.5
    return ObservedStats(
        gain=min(1.0, gain), qber=min(1.0, qber), state_label=state_label
    )


@dataclass(frozen=True)
class CampaignViolation:
    trial: int
    kind: str
    bound: float
    truth: float
    detail: str


@dataclass(frozen=True)
class CampaignTrial:
    trial: int
    mean_photons: float
    delta: float
    lambda_signal: float
    lambda_decoy: float
    family: str
    q1_true: float
    q1_wv: float
    q1_od: float
    violations: int
    y1_split: bool


@dataclass(frozen=True)
class CampaignReport:
    trials: int
    seed: int
    violations: tuple[CampaignViolation, ...]
    rows: tuple[CampaignTrial, ...] = field(repr=False)
    y1_split_count: int = 0

    @property
    def violation_count(self) -> int:
        return len(self.violations)


def _draw_instance(rng: np.random.Generator):
    while True:
        n = int(rng.integers(10, 61))
        delta = float(rng.uniform(0.05, 0.4))
        try:
            m_lo, m_hi = window_edges(n, delta)
        except DomainError:
            continue
        if m_lo < 3 or m_hi - m_lo < 1:
            continue
        try:
            cond2 = condition_thresholds(n, delta)[2]
        except DomainError:
            continue
        lam_s = float(rng.uniform(0.3, 0.95)) / ((1.0 + delta) * n)
        ratio = cond2 * float(rng.uniform(1.05, 3.0))
        lam_d = lam_s / ratio
        if lam_d <= 0.0:
            continue
        return n, delta, m_lo, m_hi, lam_s, lam_d


def _draw_input_distribution(
    rng: np.random.Generator, n: int, support_max: int
) -> dict[int, float]:
    ms = np.arange(support_max + 1)
    if rng.uniform() < 0.7:
        p = poisson.pmf(ms, n)
    else:
        a = int(rng.integers(0, n))
        b = int(rng.integers(n, support_max + 1))
        p = np.zeros(support_max + 1)
        p[a : b + 1] = 1.0
    p = p / p.sum()
    return {int(m): float(p[m]) for m in ms if p[m] > 0.0}


def _draw_strategy(
    rng: np.random.Generator, support_max: int, family: str
) -> AdversaryStrategy:
    size = support_max + 1
    if family == "iid_uniform":
        y = rng.uniform(0.0, 1.0, size=(size, size))
    elif family == "n_only":
        y = np.broadcast_to(rng.uniform(0.0, 1.0, size=size), (size, size)).copy()
    elif family == "m_only":
        y = np.broadcast_to(
            rng.uniform(0.0, 1.0, size=size)[:, np.newaxis], (size, size)
        ).copy()
    elif family == "two_photon_spike":
        y = rng.uniform(0.0, 0.05, size=(size, size))
        y[:, 2] = rng.uniform(0.5, 1.0, size=size)
    else:
        raise DomainError(f"unknown strategy family {family!r}")
    e = rng.uniform(0.0, 1.0, size=(size, size))
    # Vacuum output carries no basis information: its error rate is 1/2,
    # which the two-state estimator's substitution relies on.
    e[:, 0] = 0.5
    return AdversaryStrategy(yields=y, errors=e, family=family)


def _gllp_reference_rate(obs, window, params, q_omega_true: float) -> float:
    from .numerics import binary_entropy

    ec = -obs.gain * params.ec_inefficiency * binary_entropy(obs.qber)
    if q_omega_true > 0.0:
        arg = min(0.5, max(0.0, obs.gain * obs.qber / q_omega_true))
        pa = q_omega_true * (1.0 - binary_entropy(arg))
    else:
        pa = 0.0
    return params.sift_factor * (ec + pa)


def soundness_campaign(
    trials: int,
    seed: int,
    corrupt_q1_shift: float = 0.0,
) -> CampaignReport:
    """Randomized end-to-end validation of the bound pipeline.

    Each trial draws a window-compatible instance and an adversary strategy,
    computes exact population observables and ground truth, then checks that
    every interval and estimator output contains its true value.
    corrupt_q1_shift deliberately biases the single-photon lower bounds
    upward; any nonzero value must produce detected violations (harness
    self-test).
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials!r}")
    rng = np.random.default_rng(seed)
    violations: list[CampaignViolation] = []
    rows: list[CampaignTrial] = []
    y1_split_count = 0

    for trial in range(trials):
        n, delta, m_lo, m_hi, lam_s, lam_d = _draw_instance(rng)
        support_max = m_hi
        hist = _draw_input_distribution(rng, n, support_max)
        family = STRATEGY_FAMILIES[int(rng.integers(0, len(STRATEGY_FAMILIES)))]
        strategy = _draw_strategy(rng, support_max, family)
        source = SourceSpec(
            mean_photons=n,
            distribution=EMPIRICAL_HISTOGRAM,
            histogram=hist,
        )
        window = Window(
            delta=delta, Delta=tagged_fraction(source, delta), epsilon=0.0
        )
        lambdas = {SIGNAL: lam_s, DECOY: lam_d, VACUUM: 0.0}
        truth = ground_truth(source, window, lambdas, strategy)

        obs = {
            state: population_observables(source, lam, strategy, state)
            for state, lam in lambdas.items()
        }

        def record(kind: str, bound: float, true_val: float, detail: str) -> None:
            violations.append(
                CampaignViolation(
                    trial=trial, kind=kind, bound=bound, truth=true_val, detail=detail
                )
            )

        for state in (SIGNAL, DECOY, VACUUM):
            b = untagged_bounds(obs[state], window)
            qt = truth.q_untagged[state]
            eqt = truth.eq_untagged[state]
            if not (b.q_lower - _TOL <= qt <= b.q_upper + _TOL):
                record(
                    f"gain_interval_{state}", b.q_lower, qt,
                    f"interval [{b.q_lower!r}, {b.q_upper!r}]",
                )
            if not (b.eq_lower - _TOL <= eqt <= b.eq_upper + _TOL):
                record(
                    f"error_gain_interval_{state}", b.eq_lower, eqt,
                    f"interval [{b.eq_lower!r}, {b.eq_upper!r}]",
                )

        wv_params = ProtocolParams(
            protocol=WEAK_VACUUM, lambda_signal=lam_s, lambda_decoy=lam_d
        )
        od_params = ProtocolParams(
            protocol=ONE_DECOY, lambda_signal=lam_s, lambda_decoy=lam_d
        )
        q1_wv = wv_q1_lower(
            obs[SIGNAL], obs[DECOY], obs[VACUUM], window, wv_params, source
        )
        q1_wv += corrupt_q1_shift
        if q1_wv > truth.q1_true + _TOL:
            record("wv_q1_lower", q1_wv, truth.q1_true, "single-photon gain bound")
        if q1_wv > 0.0:
            e1_wv = wv_e1_upper(
                q1_wv, obs[SIGNAL], obs[VACUUM], window, wv_params, source
            )
            if e1_wv < truth.e1_true - _TOL:
                record("wv_e1_upper", e1_wv, truth.e1_true, "single-photon error bound")
        else:
            e1_wv = math.inf

        q1_od, e1_od = one_decoy_q1_e1(
            obs[SIGNAL], obs[DECOY], window, od_params, source
        )
        q1_od += corrupt_q1_shift
        if q1_od > truth.q1_true + _TOL:
            record("od_q1_lower", q1_od, truth.q1_true, "two-state gain bound")
        if q1_od > q1_wv + _TOL:
            record(
                "od_tighter_than_wv", q1_od, q1_wv,
                "two-state bound must not beat three-state bound",
            )
        if q1_od > 0.0:
            if e1_od < truth.e1_true - _TOL:
                record("od_e1_upper", e1_od, truth.e1_true, "two-state error bound")
            if math.isfinite(e1_wv) and e1_od < e1_wv - _TOL:
                record(
                    "od_e1_tighter_than_wv", e1_od, e1_wv,
                    "two-state error bound must not beat three-state bound",
                )

        gllp_params = ProtocolParams(protocol="gllp", lambda_signal=lam_s)
        gllp_report = gllp_rate_untrusted(obs[SIGNAL], window, gllp_params, source)
        q_omega_true = truth.q0_true + truth.q1_true
        ref_rate = _gllp_reference_rate(obs[SIGNAL], window, gllp_params, q_omega_true)
        if gllp_report.intermediates["q_omega_raw"] > q_omega_true + _TOL:
            record(
                "gllp_q_omega", gllp_report.intermediates["q_omega_raw"],
                q_omega_true, "untagged low-photon mass bound",
            )
        if gllp_report.rate_raw > ref_rate + _TOL:
            record(
                "gllp_rate", gllp_report.rate_raw, ref_rate,
                "rate must not beat the true-mass rate",
            )

        if not yn_decomposition_check(truth):
            record("yn_decomposition", math.nan, math.nan, "mixture identity broke")

        y1_s = truth.y_n[SIGNAL][1] if len(truth.y_n[SIGNAL]) > 1 else 0.0
        y1_d = truth.y_n[DECOY][1] if len(truth.y_n[DECOY]) > 1 else 0.0
        split = abs(y1_s - y1_d) > _DECOMP_TOL
        if split:
            y1_split_count += 1

        trial_violations = sum(1 for v in violations if v.trial == trial)
        rows.append(
            CampaignTrial(
                trial=trial,
                mean_photons=float(n),
                delta=delta,
                lambda_signal=lam_s,
                lambda_decoy=lam_d,
                family=family,
                q1_true=truth.q1_true,
                q1_wv=q1_wv,
                q1_od=q1_od,
                violations=trial_violations,
                y1_split=split,
            )
        )

    return CampaignReport(
        trials=trials,
        seed=seed,
        violations=tuple(violations),
        rows=tuple(rows),
        y1_split_count=y1_split_count,
    )
