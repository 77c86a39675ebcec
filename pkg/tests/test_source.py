"""Window geometry and tagged-fraction accounting."""

import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from qkdbounds.errors import DomainError
from qkdbounds.source import (
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


class TestWindowEdges:
    def test_flagship_window(self):
        # (1 - 0.01) * 1e6 is 990000.0000000001 in binary; a naive ceil
        # would report 990001 and silently shrink the window.
        assert window_edges(1e6, 0.01) == (990000, 1010000)

    def test_small_windows(self):
        assert window_edges(20, 0.2) == (16, 24)
        assert window_edges(10, 0.1) == (9, 11)

    def test_non_integer_edges_round_inward(self):
        # [10.45, 11.55] -> integers {11}
        assert window_edges(11, 0.05) == (11, 11)

    def test_empty_window_rejected(self):
        # [10.395, 10.605] holds no integer
        with pytest.raises(DomainError):
            window_edges(10.5, 0.01)

    @given(
        st.floats(min_value=5.0, max_value=1e7),
        st.floats(min_value=1e-4, max_value=0.9),
    )
    def test_edges_bracket_mean(self, n, delta):
        try:
            m_lo, m_hi = window_edges(n, delta)
        except DomainError:
            return
        assert m_lo <= m_hi
        assert m_lo >= (1.0 - delta) * n - 1.0
        assert m_hi <= (1.0 + delta) * n + 1.0


class TestSourceSpec:
    def test_histogram_must_sum_to_one(self):
        with pytest.raises(DomainError):
            SourceSpec(
                mean_photons=5,
                distribution=EMPIRICAL_HISTOGRAM,
                histogram={4: 0.5, 5: 0.4},
            )

    def test_histogram_requires_empirical(self):
        with pytest.raises(DomainError):
            SourceSpec(mean_photons=5, histogram={5: 1.0})

    def test_empirical_requires_histogram(self):
        with pytest.raises(DomainError):
            SourceSpec(mean_photons=5, distribution=EMPIRICAL_HISTOGRAM)

    def test_asymptotic_flag(self):
        assert SourceSpec(mean_photons=10).asymptotic
        assert not SourceSpec(mean_photons=10, sequence_length=100).asymptotic

    def test_bad_mean(self):
        with pytest.raises(DomainError):
            SourceSpec(mean_photons=0)


class TestTaggedFraction:
    def test_gaussian_value(self):
        src = SourceSpec(mean_photons=1e4, distribution=GAUSSIAN_APPROX)
        assert tagged_fraction(src, 0.02) == pytest.approx(
            0.04550026389635841, rel=1e-12
        )

    def test_poisson_close_to_gaussian_at_scale(self):
        # Inclusive window [9800, 10200]: both edges count as untagged.
        # Reference value from a 30-digit regularized-gamma evaluation.
        src = SourceSpec(mean_photons=1e4, distribution=POISSON_EXACT)
        assert tagged_fraction(src, 0.02) == pytest.approx(
            0.0449603737142, rel=1e-9
        )

    def test_poisson_negligible_at_flagship(self):
        src = SourceSpec(mean_photons=1e6, distribution=POISSON_EXACT)
        assert tagged_fraction(src, 0.01) < 1e-20

    def test_empirical_value(self):
        # A binomial(40, 1/2) input against the window [16, 24] of N=20.
        hist = {k: float(binom.pmf(k, 40, 0.5)) for k in range(41)}
        src = SourceSpec(
            mean_photons=20, distribution=EMPIRICAL_HISTOGRAM, histogram=hist
        )
        assert tagged_fraction(src, 0.2) == pytest.approx(
            0.1538599441628321, rel=1e-10
        )

    def test_empirical_all_inside_window(self):
        src = SourceSpec(
            mean_photons=20,
            distribution=EMPIRICAL_HISTOGRAM,
            histogram={m: 1.0 / 9.0 for m in range(16, 25)},
        )
        assert tagged_fraction(src, 0.2) == 0.0

    @given(st.floats(min_value=0.001, max_value=0.3))
    @settings(max_examples=30, deadline=None)
    def test_poisson_decreasing_in_delta(self, delta):
        src = SourceSpec(mean_photons=500, distribution=POISSON_EXACT)
        wider = tagged_fraction(src, min(0.9, delta * 2.0))
        assert wider <= tagged_fraction(src, delta) + 1e-12


class TestSamplingEpsilon:
    def test_asymptotic_is_zero(self):
        assert sampling_epsilon(None) == 0.0

    def test_default_exponent(self):
        assert sampling_epsilon(10**6) == pytest.approx(0.005, rel=1e-12)

    def test_explicit_exponent(self):
        assert sampling_epsilon(400, failure_exponent=4.0) == pytest.approx(0.1)

    def test_shrinks_with_length(self):
        assert sampling_epsilon(10**8) < sampling_epsilon(10**4)


class TestWindowAssembly:
    def test_window_for_asymptotic(self):
        src = SourceSpec(mean_photons=1e6)
        win = window_for(src, 0.01)
        assert win.delta == 0.01
        assert win.epsilon == 0.0
        assert win.Delta < 1e-20
        assert win.untagged_floor == pytest.approx(1.0, abs=1e-12)

    def test_window_for_finite(self):
        src = SourceSpec(mean_photons=1e6, sequence_length=10**6)
        win = window_for(src, 0.01)
        assert win.epsilon == pytest.approx(0.005, rel=1e-12)

    def test_explicit_epsilon_wins(self):
        src = SourceSpec(mean_photons=1e6, sequence_length=10**6)
        win = window_for(src, 0.01, epsilon=0.25)
        assert win.epsilon == 0.25

    def test_window_validation(self):
        with pytest.raises(DomainError):
            Window(delta=0.0, Delta=0.0)
        with pytest.raises(DomainError):
            Window(delta=0.01, Delta=1.5)
        with pytest.raises(DomainError):
            Window(delta=0.01, Delta=0.0, epsilon=1.0)

    def test_untagged_floor_can_go_nonpositive(self):
        win = Window(delta=0.01, Delta=0.7, epsilon=0.4)
        assert win.untagged_floor == pytest.approx(-0.1)
