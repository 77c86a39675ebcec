"""Bounds on untagged-bit statistics from overall measured statistics.

The receiver cannot distinguish tagged from untagged pulses, so the
measured gain and error rate mix both populations. With a tagged fraction
at most Delta + epsilon, the untagged contribution to any measured mean is
pinned to an interval of that width, rescaled by the untagged fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, VacuousBoundsError
from .source import Window

SIGNAL = "signal"
DECOY = "decoy"
VACUUM = "vacuum"

_STATES = (SIGNAL, DECOY, VACUUM)


@dataclass(frozen=True)
class ObservedStats:
    """Measured overall gain and QBER for one intensity setting."""

    gain: float
    qber: float
    state_label: str = SIGNAL

    def __post_init__(self) -> None:
        if not 0.0 <= self.gain <= 1.0:
            raise DomainError(f"gain must be in [0, 1], got {self.gain!r}")
        if not 0.0 <= self.qber <= 1.0:
            raise DomainError(f"qber must be in [0, 1], got {self.qber!r}")
        if self.state_label not in _STATES:
            raise DomainError(
                f"state_label must be one of {', '.join(_STATES)}, "
                f"got {self.state_label!r}"
            )


@dataclass(frozen=True)
class UntaggedBounds:
    """Interval bounds on the untagged gain and error-gain product."""

    q_lower: float
    q_upper: float
    eq_lower: float
    eq_upper: float


def _untagged_weight(window: Window, what: str) -> float:
    w = window.untagged_floor
    if w <= 0.0:
        raise VacuousBoundsError(
            f"{what}: tagged fraction Delta={window.Delta!r} plus sampling slack "
            f"epsilon={window.epsilon!r} is >= 1, so no untagged bits are "
            "guaranteed and the bounds are vacuous"
        )
    return w


def gain_bounds(obs: ObservedStats, window: Window) -> tuple[float, float]:
    """(q_lower, q_upper) for the untagged gain.

    q_upper = Q_e / (1 - Delta - epsilon) clamped to 1; q_lower assumes every
    tagged pulse clicked, max(0, (Q_e - Delta - epsilon) / (1 - Delta - epsilon)).
    """
    w = _untagged_weight(window, "gain_bounds")
    q_upper = min(1.0, obs.gain / w)
    q_lower = max(0.0, (obs.gain - (1.0 - w)) / w)
    return q_lower, q_upper


def error_gain_bounds(obs: ObservedStats, window: Window) -> tuple[float, float]:
    """(eq_lower, eq_upper) for the untagged error-gain product E*Q."""
    w = _untagged_weight(window, "error_gain_bounds")
    eq = obs.gain * obs.qber
    eq_upper = min(1.0, eq / w)
    eq_lower = max(0.0, (eq - (1.0 - w)) / w)
    return eq_lower, eq_upper


def untagged_bounds(obs: ObservedStats, window: Window) -> UntaggedBounds:
    """Both interval pairs in one struct."""
    q_lower, q_upper = gain_bounds(obs, window)
    eq_lower, eq_upper = error_gain_bounds(obs, window)
    return UntaggedBounds(q_lower, q_upper, eq_lower, eq_upper)
