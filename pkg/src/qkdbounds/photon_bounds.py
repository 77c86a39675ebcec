"""Binomial output-photon statistics and their untagged-window envelopes.

A pulse that entered the attenuator with m photons leaves n of them with
probability C(m, n) lambda^n (1 - lambda)^(m - n). For m anywhere in the
untagged window and fixed n, that pmf is monotone in m when the window sits
entirely below the mean-1 point (Condition 1), so evaluating at the two
integer window edges brackets every untagged pulse at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditionViolation, DomainError
from .numerics import log1m
from .source import window_edges

# Default tail cutoff for the bound arrays: downstream sums converge long
# before mass this small matters.
TAIL_CUTOFF = 1e-30


def condition1_check(mean_photons: float, delta: float, lam: float) -> bool:
    """True iff (1 + delta) * N * lambda < 1 (strict)."""
    if mean_photons <= 0:
        raise DomainError(f"condition1_check requires N > 0, got {mean_photons!r}")
    if delta < 0:
        raise DomainError(f"condition1_check requires delta >= 0, got {delta!r}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"condition1_check requires lambda in [0, 1], got {lam!r}")
    return (1.0 + delta) * mean_photons * lam < 1.0


def pn_exact(m: int, n: int, lam: float) -> float:
    """C(m, n) lambda^n (1 - lambda)^(m - n), log-space evaluated.

    n > m returns 0 (outside binomial support).
    """
    if m < 0 or m != int(m):
        raise DomainError(f"pn_exact requires integer m >= 0, got {m!r}")
    if n < 0 or n != int(n):
        raise DomainError(f"pn_exact requires integer n >= 0, got {n!r}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"pn_exact requires lambda in [0, 1], got {lam!r}")
    m = int(m)
    n = int(n)
    if n > m:
        return 0.0
    if lam == 0.0:
        return 1.0 if n == 0 else 0.0
    if lam == 1.0:
        return 1.0 if n == m else 0.0
    # Accumulate log C(m, n) over min(n, m - n) factors; exact for n = 0.
    k = min(n, m - n)
    log_c = 0.0
    for i in range(k):
        log_c += math.log(m - i) - math.log(i + 1)
    return math.exp(log_c + n * math.log(lam) + (m - n) * log1m(lam))


def log_pmf_row(m: int, n_count: int, lam: float) -> np.ndarray:
    """log pmf of the binomial(m, lam) at n = 0 .. n_count - 1.

    Entries beyond the support (n > m) are -inf. Built from the running
    log-ratio recurrence so a full row costs O(n_count).
    """
    out = np.full(n_count, -np.inf)
    if lam == 0.0:
        out[0] = 0.0
        return out
    top = min(n_count, m + 1)
    if top <= 0:
        return out
    log_lam = math.log(lam)
    log_1m = log1m(lam)
    out[0] = m * log_1m
    if top > 1:
        n = np.arange(1, top, dtype=np.float64)
        # log C(m, n) via cumsum of log((m - n + 1) / n)
        steps = np.log((m - n + 1.0) / n)
        log_c = np.cumsum(steps)
        out[1:top] = log_c + n * log_lam + (m - n) * log_1m
    return out


@dataclass(frozen=True)
class PnBounds:
    """Per-photon-number probability envelopes over the untagged window.

    lower_arr[n] and upper_arr[n] bracket the n-photon output probability of
    every untagged pulse; indices run 0 .. n_max. Beyond n_max both bounds
    are treated as 0 by the accessors (the default n_max is chosen past any
    mass above TAIL_CUTOFF).
    """

    lower_arr: np.ndarray
    upper_arr: np.ndarray
    lam: float
    mean_photons: float
    delta: float
    m_lo: int
    m_hi: int

    @property
    def n_max(self) -> int:
        return len(self.upper_arr) - 1

    def lower(self, n: int) -> float:
        if n < 0:
            raise DomainError(f"photon number must be >= 0, got {n!r}")
        if n > self.n_max:
            return 0.0
        return float(self.lower_arr[n])

    def upper(self, n: int) -> float:
        if n < 0:
            raise DomainError(f"photon number must be >= 0, got {n!r}")
        if n > self.n_max:
            return 0.0
        return float(self.upper_arr[n])


def pn_bounds(
    mean_photons: float,
    delta: float,
    lam: float,
    n_max: int | None = None,
) -> PnBounds:
    """Window envelopes of the output photon-number distribution.

    upper(0) is the zero-photon pmf at the lower window edge, lower(0) at
    the upper edge; for n >= 1 the roles swap: upper(n) is the pmf at the
    upper edge (0 beyond it) and lower(n) the pmf at the lower edge (0
    beyond it).
    """
    if not condition1_check(mean_photons, delta, lam):
        raise ConditionViolation(
            "window top times transmittance (1+delta)*N*lambda = "
            f"{(1.0 + delta) * mean_photons * lam!r} must be strictly below 1 "
            f"(N={mean_photons!r}, delta={delta!r}, lambda={lam!r}); "
            "reduce lambda or the window width"
        )
    m_lo, m_hi = window_edges(mean_photons, delta)

    if n_max is None:
        limit = m_hi
    else:
        if n_max < 0:
            raise DomainError(f"n_max must be >= 0, got {n_max!r}")
        limit = n_max

    if lam == 0.0:
        size = limit + 1
        lower = np.zeros(size)
        upper = np.zeros(size)
        lower[0] = 1.0
        upper[0] = 1.0
        return PnBounds(lower, upper, lam, mean_photons, delta, m_lo, m_hi)

    log_hi = log_pmf_row(m_hi, min(limit, m_hi) + 1, lam)
    if n_max is None:
        # Mean below 1 makes the pmf strictly decreasing for n >= 1, so the
        # first sub-cutoff entry ends the array.
        cut = len(log_hi)
        for n in range(1, len(log_hi)):
            if log_hi[n] < math.log(TAIL_CUTOFF):
                cut = n + 1
                break
        log_hi = log_hi[:cut]
        limit = cut - 1

    size = limit + 1
    upper = np.exp(np.concatenate([log_hi, np.full(size - len(log_hi), -np.inf)]))
    log_lo = log_pmf_row(m_lo, min(limit, m_lo) + 1, lam)
    lower = np.exp(np.concatenate([log_lo, np.full(size - len(log_lo), -np.inf)]))
    # n = 0 swaps edges: fewer input photons make an empty pulse more likely.
    upper[0], lower[0] = lower[0], upper[0]
    return PnBounds(lower, upper, lam, mean_photons, delta, m_lo, m_hi)


def multiphoton_upper(bounds: PnBounds) -> float:
    """Upper bound on the two-plus-photon output probability.

    1 - lower(0) - upper(1) dominates the multiphoton mass of every
    untagged pulse; clamped to [0, 1].
    """
    val = 1.0 - bounds.lower(0) - bounds.upper(1)
    return min(1.0, max(0.0, val))
