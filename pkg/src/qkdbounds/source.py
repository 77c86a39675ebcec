"""Input photon-number model: window geometry, tagged fraction, sampling slack.

The security argument partitions pulses by the photon number m that entered
the sender's attenuator: those inside the relative window
[(1 - delta) N, (1 + delta) N] are untagged, the rest tagged. This module
owns that split and nothing downstream of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import DomainError
from .numerics import gaussian_tail_delta, poisson_cdf

POISSON_EXACT = "poisson_exact"
GAUSSIAN_APPROX = "gaussian_approx"
EMPIRICAL_HISTOGRAM = "empirical_histogram"

_DISTRIBUTIONS = (POISSON_EXACT, GAUSSIAN_APPROX, EMPIRICAL_HISTOGRAM)

# Edge values like 0.99 * 1e6 land a few ulp off the integer they mean;
# snap before ceil/floor so the window is what the user wrote down.
_EDGE_SNAP_REL = 1e-9

DEFAULT_FAILURE_EXPONENT = 25.0


def _snap(x: float) -> float:
    r = round(x)
    if abs(x - r) <= _EDGE_SNAP_REL * max(1.0, abs(x)):
        return float(r)
    return x


def window_edges(mean_photons: float, delta: float) -> tuple[int, int]:
    """Integer photon-number window [m_lo, m_hi] for the relative window delta.

    m_lo = ceil((1 - delta) N) and m_hi = floor((1 + delta) N), with edge
    values snapped to the nearest integer before rounding so that float
    representation of delta cannot shift the window by one.
    """
    if mean_photons <= 0:
        raise DomainError(f"window requires N > 0, got {mean_photons!r}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"window requires delta in (0, 1), got {delta!r}")
    m_lo = int(math.ceil(_snap((1.0 - delta) * mean_photons)))
    m_hi = int(math.floor(_snap((1.0 + delta) * mean_photons)))
    if m_lo < 0:
        m_lo = 0
    if m_hi < m_lo:
        raise DomainError(
            f"window [(1-delta)N, (1+delta)N] = [{m_lo}, {m_hi}] contains no integer"
        )
    return m_lo, m_hi


@dataclass(frozen=True)
class SourceSpec:
    """Photon-number distribution entering the attenuator.

    mean_photons is the nominal mean N of the strong input pulse.
    sequence_length is the number of coding pulses K, or None for the
    asymptotic regime. The empirical histogram, when used, maps photon
    count to probability and must sum to 1 within 1e-9.
    """

    mean_photons: float
    distribution: str = POISSON_EXACT
    sequence_length: Optional[int] = None
    histogram: Optional[Mapping[int, float]] = field(default=None)

    def __post_init__(self) -> None:
        if self.mean_photons <= 0:
            raise DomainError(f"SourceSpec requires N > 0, got {self.mean_photons!r}")
        if self.distribution not in _DISTRIBUTIONS:
            raise DomainError(
                f"unknown distribution {self.distribution!r}; "
                f"expected one of {', '.join(_DISTRIBUTIONS)}"
            )
        if self.sequence_length is not None and self.sequence_length < 1:
            raise DomainError(
                f"sequence_length must be >= 1 or None, got {self.sequence_length!r}"
            )
        if self.distribution == EMPIRICAL_HISTOGRAM:
            if not self.histogram:
                raise DomainError("empirical_histogram distribution requires a histogram")
            total = 0.0
            for count, prob in self.histogram.items():
                if count < 0 or count != int(count):
                    raise DomainError(
                        f"histogram keys must be nonnegative integers, got {count!r}"
                    )
                if prob < 0:
                    raise DomainError(f"histogram probability negative at m={count}")
                total += prob
            if abs(total - 1.0) > 1e-9:
                raise DomainError(
                    f"histogram probabilities sum to {total!r}, expected 1 within 1e-9"
                )
        elif self.histogram is not None:
            raise DomainError(
                f"histogram only valid with {EMPIRICAL_HISTOGRAM}, "
                f"not {self.distribution}"
            )

    @property
    def asymptotic(self) -> bool:
        return self.sequence_length is None


@dataclass(frozen=True)
class Window:
    """Untagged-window parameters: relative half-width delta, tagged fraction
    Delta, and sampling slack epsilon.

    Delta + epsilon < 1 is required for any nonvacuous downstream bound; this
    type permits equality-or-worse so that the observed-bounds layer can
    raise the dedicated vacuous-bounds error with context.
    """

    delta: float
    Delta: float
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"Window requires delta in (0, 1), got {self.delta!r}")
        if not 0.0 <= self.Delta <= 1.0:
            raise DomainError(f"Window requires Delta in [0, 1], got {self.Delta!r}")
        if not 0.0 <= self.epsilon < 1.0:
            raise DomainError(f"Window requires epsilon in [0, 1), got {self.epsilon!r}")

    @property
    def untagged_floor(self) -> float:
        """Guaranteed untagged fraction 1 - Delta - epsilon (may be <= 0)."""
        return 1.0 - self.Delta - self.epsilon


def tagged_fraction(source: SourceSpec, delta: float) -> float:
    """Probability mass outside the integer window [m_lo, m_hi].

    poisson_exact sums exact Poisson(N) mass, gaussian_approx uses the
    closed-form erfc tail, and empirical_histogram sums the supplied
    histogram inclusively over the window.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"tagged_fraction requires delta in (0, 1), got {delta!r}")
    n = source.mean_photons
    if source.distribution == GAUSSIAN_APPROX:
        return gaussian_tail_delta(n, delta)
    m_lo, m_hi = window_edges(n, delta)
    if source.distribution == POISSON_EXACT:
        inside = poisson_cdf(m_hi, n)
        if m_lo > 0:
            inside -= poisson_cdf(m_lo - 1, n)
        return min(1.0, max(0.0, 1.0 - inside))
    inside = 0.0
    for count, prob in source.histogram.items():
        if m_lo <= count <= m_hi:
            inside += prob
    return min(1.0, max(0.0, 1.0 - inside))


def sampling_epsilon(
    sequence_length: Optional[int],
    failure_exponent: float = DEFAULT_FAILURE_EXPONENT,
) -> float:
    """Sampling slack epsilon = sqrt(failure_exponent / K); 0 when asymptotic.

    Heuristic inversion of an exponential tail bound with the O-constant
    taken as 1. Useful only when epsilon^2 K >> 1; at K = 100 the returned
    0.5 already signals the regime where the slack swallows the key.
    """
    if sequence_length is None:
        return 0.0
    if sequence_length < 1:
        raise DomainError(f"sequence_length must be >= 1, got {sequence_length!r}")
    if failure_exponent <= 0:
        raise DomainError(
            f"failure_exponent must be positive, got {failure_exponent!r}"
        )
    return math.sqrt(failure_exponent / sequence_length)


def window_for(
    source: SourceSpec,
    delta: float,
    failure_exponent: float = DEFAULT_FAILURE_EXPONENT,
    epsilon: Optional[float] = None,
) -> Window:
    """Assemble a Window from a source and delta.

    epsilon defaults to sampling_epsilon of the source's sequence length;
    pass an explicit value to override the heuristic.
    """
    if epsilon is None:
        epsilon = sampling_epsilon(source.sequence_length, failure_exponent)
    return Window(delta=delta, Delta=tagged_fraction(source, delta), epsilon=epsilon)
