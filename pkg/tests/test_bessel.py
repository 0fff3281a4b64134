"""Log-domain Bessel numerics against the arbitrary-precision reference."""

import mpmath
import numpy as np
import pytest

from rician_nlm import (
    bessel_reference,
    log_bessel_i0,
    log_bessel_i0e,
    log_bessel_i1,
    log_bessel_i1e,
)


def ref_log_i0(x: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.log(mpmath.besseli(0, mpmath.mpf(x))))


def ref_log_i1(x: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.log(mpmath.besseli(1, mpmath.mpf(x))))


class TestLogBesselI0:
    def test_zero(self):
        assert log_bessel_i0(0.0) == 0.0

    def test_one_matches_series_oracle(self):
        # I0(1) = 1.26606587775200833560... (high-precision series)
        assert log_bessel_i0(1.0) == pytest.approx(0.23591435850717864869, rel=1e-14)

    def test_asymptotic_regime(self):
        # x=100: x - 0.5 ln(2 pi x) + ln(1 + 1/800 + ...)
        assert log_bessel_i0(100.0) == pytest.approx(96.779732689942583717, rel=1e-12)

    def test_relative_error_over_range(self):
        # contract: rel. err <= 1e-12 over [0, 1e8]
        xs = np.concatenate(
            [
                np.logspace(-8, 8, 1000),
                [1e-300, 0.5, 7.75, 24.999, 25.0, 25.001, 26.0, 1e8],
            ]
        )
        vals = log_bessel_i0(xs)
        for x, v in zip(xs, vals):
            ref = ref_log_i0(float(x))
            assert v == pytest.approx(ref, rel=1e-12, abs=1e-300), f"x={x}"

    def test_scaled_variant_consistent(self):
        xs = np.array([1e-6, 0.1, 1.0, 10.0, 30.0, 1e4])
        np.testing.assert_allclose(
            log_bessel_i0e(xs), log_bessel_i0(xs) - xs, rtol=0, atol=1e-9
        )
        assert np.all(log_bessel_i0e(xs) <= 0.0)

    def test_scaled_variant_small_x_accuracy(self):
        # naive log(i0e) + x would cancel catastrophically here
        x = 1e-8
        ref = ref_log_i0(x)  # ~ x^2/4 = 2.5e-17
        assert log_bessel_i0(x) == pytest.approx(ref, rel=1e-12)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            log_bessel_i0(-1.0)
        with pytest.raises(ValueError):
            log_bessel_i0(np.nan)
        with pytest.raises(ValueError):
            log_bessel_i0(np.inf)

    def test_array_and_scalar_paths_agree(self):
        xs = np.array([0.0, 0.3, 7.0, 25.0, 40.0, 1e6])
        vec = log_bessel_i0(xs)
        scl = np.array([log_bessel_i0(float(x)) for x in xs])
        np.testing.assert_array_equal(vec, scl)


class TestLogBesselI1:
    def test_zero_is_neg_inf(self):
        assert log_bessel_i1(0.0) == -np.inf

    def test_relative_error_over_range(self):
        xs = np.logspace(-6, 7, 300)
        vals = log_bessel_i1(xs)
        for x, v in zip(xs, vals):
            ref = ref_log_i1(float(x))
            assert v == pytest.approx(ref, rel=1e-12, abs=1e-300), f"x={x}"

    def test_scaled_variant(self):
        xs = np.array([0.5, 5.0, 50.0])
        np.testing.assert_allclose(
            log_bessel_i1e(xs), log_bessel_i1(xs) - xs, rtol=0, atol=1e-9
        )


class TestBesselReference:
    def test_exact_at_zero(self):
        assert bessel_reference(0.0) == 1

    def test_series_value(self):
        val = bessel_reference(1.0, precision_digits=30)
        with mpmath.workdps(30):
            assert abs(val - mpmath.mpf("1.2660658777520083355982446253")) < mpmath.mpf("1e-25")

    def test_range_check(self):
        with pytest.raises(ValueError):
            bessel_reference(-0.5)
        with pytest.raises(ValueError):
            bessel_reference(2e8)

    def test_self_consistency_sweep(self):
        # oracle vs fast path on log-spaced points; both sides independent
        xs = np.logspace(-4, 8, 120)
        for x in xs:
            with mpmath.workdps(40):
                ref = float(mpmath.log(bessel_reference(float(x), 40)))
            assert log_bessel_i0(float(x)) == pytest.approx(ref, rel=1e-12)
