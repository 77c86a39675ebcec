"""Forward model of a fiber link with threshold detectors.

Produces the observables a real experiment would measure, so the bound
pipeline can be exercised end to end. Standard lossy-channel model: dark
counts plus exponential attenuation, misalignment errors on true clicks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .observed import ObservedStats, SIGNAL


@dataclass(frozen=True)
class DetectorParams:
    """Receiver and fiber parameters.

    alpha_db_per_km is fiber loss in dB/km; eta_bob the internal detection
    efficiency; y0 the background (dark-count) yield; e_det the misalignment
    error probability of a true click; e0 the error rate of a background
    click (1/2: dark counts carry no signal correlation).
    """

    eta_bob: float = 0.045
    alpha_db_per_km: float = 0.21
    y0: float = 1.7e-6
    e_det: float = 0.033
    e0: float = 0.5

    def __post_init__(self) -> None:
        for name in ("eta_bob", "y0", "e_det", "e0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be in [0, 1], got {v!r}")
        if self.alpha_db_per_km < 0:
            raise DomainError(
                f"alpha_db_per_km must be >= 0, got {self.alpha_db_per_km!r}"
            )


# Fiber-based system parameters used for all reference sweeps.
GYS_PARAMS = DetectorParams()


def channel_transmittance(distance_km: float, params: DetectorParams) -> float:
    """Fiber transmittance 10^(-alpha l / 10) for loss alpha in dB/km."""
    if distance_km < 0:
        raise DomainError(f"distance_km must be >= 0, got {distance_km!r}")
    return 10.0 ** (-params.alpha_db_per_km * distance_km / 10.0)


def simulate_observables(
    mu: float,
    distance_km: float,
    params: DetectorParams,
    state_label: str = SIGNAL,
) -> ObservedStats:
    """Expected gain and QBER for mean photon number mu at the given distance.

    Q_e = Y0 + 1 - exp(-eta mu) with eta the end-to-end transmittance,
    clamped to [0, 1]; errors mix the background rate e0 on dark counts with
    e_det on true clicks. mu = 0 reduces to (Y0, e0).
    """
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu!r}")
    eta = channel_transmittance(distance_km, params) * params.eta_bob
    click = -math.expm1(-eta * mu)
    gain = min(1.0, params.y0 + click)
    err = params.e0 * params.y0 + params.e_det * click
    if gain <= 0.0:
        qber = params.e0
    else:
        qber = min(1.0, err / gain)
    return ObservedStats(gain=gain, qber=qber, state_label=state_label)
