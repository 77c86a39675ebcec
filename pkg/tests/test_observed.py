"""Interval bounds on untagged statistics from observed rates."""

import pytest
from hypothesis import given, strategies as st

from qkdbounds.errors import DomainError, VacuousBoundsError
from qkdbounds.observed import (
    ObservedStats,
    error_gain_bounds,
    gain_bounds,
    untagged_bounds,
)
from qkdbounds.source import Window


def _window(Delta, epsilon=0.0):
    return Window(delta=0.01, Delta=Delta, epsilon=epsilon)


class TestValidation:
    def test_gain_range(self):
        with pytest.raises(DomainError):
            ObservedStats(gain=1.2, qber=0.1)
        with pytest.raises(DomainError):
            ObservedStats(gain=-0.1, qber=0.1)

    def test_qber_range(self):
        with pytest.raises(DomainError):
            ObservedStats(gain=0.5, qber=1.5)


class TestGainBounds:
    def test_hand_values(self):
        obs = ObservedStats(gain=0.3, qber=0.1)
        lo, hi = gain_bounds(obs, _window(0.1, 0.05))
        # floor = 0.85; upper = 0.3/0.85; lower = (0.3 - 0.15)/0.85
        assert hi == pytest.approx(0.3 / 0.85, rel=1e-12)
        assert lo == pytest.approx(0.15 / 0.85, rel=1e-12)

    def test_upper_capped_at_one(self):
        obs = ObservedStats(gain=0.9, qber=0.1)
        _, hi = gain_bounds(obs, _window(0.5))
        assert hi == 1.0

    def test_lower_floored_at_zero(self):
        obs = ObservedStats(gain=0.05, qber=0.1)
        lo, _ = gain_bounds(obs, _window(0.2))
        assert lo == 0.0

    def test_zero_budget_collapses(self):
        obs = ObservedStats(gain=0.37, qber=0.2)
        lo, hi = gain_bounds(obs, _window(0.0, 0.0))
        assert lo == hi == pytest.approx(0.37, rel=1e-15)

    def test_vacuous_raises(self):
        obs = ObservedStats(gain=0.3, qber=0.1)
        with pytest.raises(VacuousBoundsError):
            gain_bounds(obs, _window(0.6, 0.4))


class TestErrorGainBounds:
    def test_hand_values(self):
        obs = ObservedStats(gain=0.4, qber=0.25)  # EQ = 0.1
        lo, hi = error_gain_bounds(obs, _window(0.05))
        assert hi == pytest.approx(0.1 / 0.95, rel=1e-12)
        assert lo == pytest.approx((0.1 - 0.05) / 0.95, rel=1e-12)

    def test_collapse(self):
        obs = ObservedStats(gain=0.4, qber=0.25)
        lo, hi = error_gain_bounds(obs, _window(0.0))
        assert lo == hi == pytest.approx(0.1, rel=1e-12)


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=0.98),
    st.floats(min_value=0.0, max_value=0.5),
)
def test_interval_shape(gain, qber, Delta, epsilon):
    obs = ObservedStats(gain=gain, qber=qber)
    win = _window(Delta, epsilon)
    if win.untagged_floor <= 0.0:
        with pytest.raises(VacuousBoundsError):
            untagged_bounds(obs, win)
        return
    b = untagged_bounds(obs, win)
    assert 0.0 <= b.q_lower <= b.q_upper <= 1.0
    assert 0.0 <= b.eq_lower <= b.eq_upper <= 1.0
    # error-gain interval sits inside the gain interval scaled by qber <= 1
    assert b.eq_upper <= b.q_upper + 1e-12


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=0.4),
)
def test_budget_widens_interval(gain, Delta):
    obs = ObservedStats(gain=gain, qber=0.3)
    narrow = untagged_bounds(obs, _window(Delta))
    wide = untagged_bounds(obs, _window(min(0.98, Delta + 0.3)))
    assert wide.q_lower <= narrow.q_lower + 1e-12
    assert wide.q_upper >= narrow.q_upper - 1e-12
