"""Log-domain primitives against exact integer arithmetic and fixed values."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from qkdbounds.errors import DomainError
from qkdbounds.numerics import (
    LogValue,
    binary_entropy,
    gaussian_tail_delta,
    log1m,
    log_binomial_coeff,
    log_factorial,
    poisson_cdf,
)


class TestLogFactorial:
    def test_small_values_exact(self):
        for n in range(0, 15):
            assert log_factorial(n) == pytest.approx(
                math.log(math.factorial(n)), rel=1e-15
            )

    def test_ln_120(self):
        assert log_factorial(5) == pytest.approx(4.787491742782046, rel=1e-15)

    def test_million(self):
        assert log_factorial(10**6) == pytest.approx(12815518.384658169, rel=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            log_factorial(-1)

    @given(st.integers(min_value=0, max_value=300))
    def test_matches_exact_integer_factorial(self, n):
        exact = math.log(math.factorial(n)) if n > 0 else 0.0
        assert log_factorial(n) == pytest.approx(exact, rel=1e-13, abs=1e-13)

    def test_stirling_sandwich_2_to_200(self):
        # n^(n+1/2) e^-n < n! < n^(n+1/2) e^(-n+1), strict on both sides
        for n in range(2, 201):
            lower = (n + 0.5) * math.log(n) - n
            v = log_factorial(n)
            assert lower < v < lower + 1.0, n


class TestLogBinomialCoeff:
    def test_million_choose_two(self):
        v = log_binomial_coeff(10**6, 2)
        assert v == pytest.approx(math.log(499999500000), rel=1e-14)
        assert v == pytest.approx(26.937872935368103, rel=1e-13)

    def test_60_choose_30(self):
        assert log_binomial_coeff(60, 30) == pytest.approx(
            39.311700726011262, rel=1e-13
        )

    def test_edges(self):
        assert log_binomial_coeff(7, 0) == 0.0
        assert log_binomial_coeff(7, 7) == 0.0

    def test_invalid(self):
        with pytest.raises(DomainError):
            log_binomial_coeff(3, 5)
        with pytest.raises(DomainError):
            log_binomial_coeff(-1, 0)
        with pytest.raises(DomainError):
            log_binomial_coeff(3, -1)

    @given(
        st.integers(min_value=0, max_value=250),
        st.integers(min_value=0, max_value=250),
    )
    def test_matches_math_comb(self, m, extra):
        n = min(extra, m)
        assert log_binomial_coeff(m, n) == pytest.approx(
            math.log(math.comb(m, n)), rel=1e-12, abs=1e-12
        )


class TestLog1m:
    def test_tiny_argument(self):
        assert log1m(1e-7) == pytest.approx(-1.0000000500000033e-07, rel=1e-12)

    def test_zero(self):
        assert log1m(0.0) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            log1m(1.0)
        with pytest.raises(DomainError):
            log1m(-0.1)

    @given(st.floats(min_value=0.0, max_value=0.999999, allow_nan=False))
    def test_matches_reference(self, x):
        assert log1m(x) == pytest.approx(math.log1p(-x), rel=1e-15, abs=1e-300)


class TestTailHelpers:
    def test_gaussian_tail_value(self):
        # sqrt(N/2) * delta = sqrt(5e5) * 0.01 = 7.0710678...
        assert gaussian_tail_delta(1e6, 0.01) == pytest.approx(
            1.5239706048321052e-23, rel=1e-12
        )

    def test_gaussian_tail_midscale(self):
        assert gaussian_tail_delta(1e4, 0.02) == pytest.approx(
            0.04550026389635841, rel=1e-12
        )

    def test_poisson_cdf_value(self):
        assert poisson_cdf(10, 5.0) == pytest.approx(0.9863047314016171, rel=1e-12)

    def test_poisson_cdf_negative(self):
        assert poisson_cdf(-1, 5.0) == 0.0

    def test_poisson_cdf_monotone(self):
        prev = 0.0
        for k in range(0, 40):
            cur = poisson_cdf(k, 10.0)
            assert cur >= prev
            prev = cur
        assert prev == pytest.approx(1.0, abs=1e-12)


class TestBinaryEntropy:
    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    def test_fixed_values(self):
        assert binary_entropy(0.033) == pytest.approx(0.20922047786915265, rel=1e-13)
        assert binary_entropy(0.11) == pytest.approx(0.499915958164528, rel=1e-13)

    def test_domain(self):
        with pytest.raises(DomainError):
            binary_entropy(-0.01)
        with pytest.raises(DomainError):
            binary_entropy(1.01)

    @given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    def test_symmetry(self, x):
        assert binary_entropy(x) == pytest.approx(
            binary_entropy(1.0 - x), rel=1e-9, abs=1e-12
        )

    @given(st.floats(min_value=1e-12, max_value=0.499999))
    def test_bounded_and_increasing_left_half(self, x):
        v = binary_entropy(x)
        assert 0.0 < v <= 1.0
        assert binary_entropy(x * 0.5) < v


_finite = st.floats(
    min_value=-1e10, max_value=1e10, allow_nan=False, allow_infinity=False
)


class TestLogValue:
    @given(_finite)
    def test_round_trip(self, x):
        assert LogValue.from_float(x).to_float() == pytest.approx(
            x, rel=1e-13, abs=1e-300
        )

    @given(_finite, _finite)
    def test_mul(self, a, b):
        got = LogValue.from_float(a).mul(LogValue.from_float(b)).to_float()
        assert got == pytest.approx(a * b, rel=1e-12, abs=1e-290)

    @given(_finite, _finite)
    def test_add(self, a, b):
        got = LogValue.from_float(a).add(LogValue.from_float(b)).to_float()
        assert got == pytest.approx(a + b, rel=1e-9, abs=1e-9 * (abs(a) + abs(b) + 1))

    @given(_finite, _finite)
    def test_sub(self, a, b):
        got = LogValue.from_float(a).sub(LogValue.from_float(b)).to_float()
        assert got == pytest.approx(a - b, rel=1e-9, abs=1e-9 * (abs(a) + abs(b) + 1))

    def test_exact_cancellation(self):
        v = LogValue.from_float(3.7)
        assert v.sub(v).to_float() == 0.0

    def test_zero_behaviour(self):
        z = LogValue.zero()
        assert z.to_float() == 0.0
        assert z.mul(LogValue.from_float(5.0)).to_float() == 0.0
        assert z.add(LogValue.from_float(5.0)).to_float() == pytest.approx(5.0)

    def test_extreme_magnitudes(self):
        # Representable far beyond float range; this is the whole point.
        tiny = LogValue.from_log(1, -5_000_000.0)
        assert tiny.to_float() == 0.0
        assert tiny.mul(tiny).log_mag == pytest.approx(-10_000_000.0)
        negated = LogValue.from_log(-1, -5_000_000.0)
        assert negated.abs_gt(LogValue.zero())
        assert tiny.add(negated).to_float() == 0.0
