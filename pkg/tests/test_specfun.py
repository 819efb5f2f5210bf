"""Special-function kernel tests: independent oracles and cross-checks."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy import special as sp

from starnoma import specfun
from starnoma.specfun import Accuracy, ConvergenceError


def reference_erf_series(x: float) -> float:
    """Plain Maclaurin reference, summed to machine convergence."""
    total = term = x
    for n in range(1, 200):
        term *= -x * x / n
        contrib = term / (2 * n + 1)
        total += contrib
        if abs(contrib) < 1e-18 * abs(total):
            break
    return 2.0 / math.sqrt(math.pi) * total


class TestErf:
    def test_zero(self):
        assert specfun.erf(0.0) == 0.0

    def test_one_vs_reference_series(self):
        assert specfun.erf(1.0) == pytest.approx(reference_erf_series(1.0), rel=1e-14)
        assert specfun.erf(1.0) == pytest.approx(0.842700793, abs=5e-10)

    def test_odd_symmetry(self):
        assert specfun.erf(-0.5) == -specfun.erf(0.5)

    @given(st.floats(min_value=-5.0, max_value=5.0, allow_nan=False))
    def test_odd_symmetry_property(self, x):
        assert abs(specfun.erf(x) + specfun.erf(-x)) < 1e-14

    def test_saturation(self):
        assert specfun.erf(6.5) == 1.0
        assert specfun.erf(-7.0) == -1.0

    def test_series_vs_continued_fraction_overlap(self):
        # the two evaluation routes must agree where both are usable
        for x in np.linspace(2.0, 4.0, 21):
            series = specfun._erf_maclaurin(float(x), Accuracy())
            via_cf = 1.0 - specfun._erfc_contfrac(float(x), Accuracy())
            assert series == pytest.approx(via_cf, rel=1e-5)

    def test_against_stdlib(self):
        for x in np.linspace(-5.9, 5.9, 41):
            assert specfun.erf(float(x)) == pytest.approx(math.erf(x), rel=1e-12, abs=1e-15)

    def test_erfc_deep_tail(self):
        for x in (3.0, 8.0, 15.0, 25.0):
            assert specfun.erfc(x) == pytest.approx(sp.erfc(x), rel=1e-11)

    def test_erfc_negative(self):
        assert specfun.erfc(-1.0) == pytest.approx(2.0 - specfun.erfc(1.0), rel=1e-14)


class TestLnGamma:
    def test_known_values(self):
        assert specfun.ln_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
        assert specfun.ln_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-13)
        assert specfun.ln_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-13)

    def test_recurrence(self):
        for x in (0.3, 1.7, 9.5, 40.0):
            assert specfun.ln_gamma(x + 1.0) == pytest.approx(
                specfun.ln_gamma(x) + math.log(x), rel=1e-12
            )

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.ln_gamma(0.0)
        with pytest.raises(ValueError):
            specfun.ln_gamma(-2.5)

    def test_signed_negative(self):
        ln_mag, sign = specfun.gamma_signed(-1.5)
        assert sign * math.exp(ln_mag) == pytest.approx(sp.gamma(-1.5), rel=1e-12)


class TestIncompleteGamma:
    def test_exponential_case(self):
        assert specfun.lower_inc_gamma_reg(1.0, 0.7) == pytest.approx(
            1.0 - math.exp(-0.7), rel=1e-12
        )

    def test_zero(self):
        assert specfun.lower_inc_gamma_reg(3.2, 0.0) == 0.0

    def test_series_vs_contfrac_cross_check(self):
        # independent algorithms must agree (the criterion pair)
        for a, x in [(30.0, 30.0), (5.0, 5.5), (12.0, 9.0), (2.5, 8.0)]:
            p_series = specfun.lower_inc_gamma_reg(a, x, method="series")
            p_cf = specfun.lower_inc_gamma_reg(a, x, method="continued_fraction")
            assert p_series == pytest.approx(p_cf, rel=1e-5)
            assert p_series == pytest.approx(sp.gammainc(a, x), rel=1e-8)

    def test_monotone_in_x(self):
        grid = np.linspace(0.0, 40.0, 200)
        vals = [specfun.lower_inc_gamma_reg(7.3, float(x)) for x in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_saturates_to_one(self):
        assert specfun.lower_inc_gamma_reg(2.0, 200.0) == pytest.approx(1.0, abs=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.lower_inc_gamma_reg(-1.0, 2.0)
        with pytest.raises(ValueError):
            specfun.lower_inc_gamma_reg(1.0, -0.1)


def reference_i0_series(x: float) -> float:
    total = term = 1.0
    for s in range(1, 500):
        term *= (x / 2.0) ** 2 / s**2
        total += term
        if term < 1e-18 * total:
            break
    return total


class TestBesselI0:
    def test_zero(self):
        assert specfun.bessel_i0(0.0) == 1.0

    def test_series_oracle_values(self):
        assert specfun.bessel_i0(1.0) == pytest.approx(reference_i0_series(1.0), rel=1e-14)
        assert specfun.bessel_i0(1.0) == pytest.approx(1.26606588, abs=5e-9)
        assert specfun.bessel_i0(2.0) == pytest.approx(2.2795853, abs=5e-8)

    def test_strictly_increasing(self):
        grid = np.linspace(0.0, 20.0, 100)
        vals = [specfun.bessel_i0(float(x)) for x in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_series_vs_asymptotic(self):
        # alternate evaluation agreement on [0, 20] (the series is the
        # primary route; the asymptotic expansion is usable from ~15 up)
        for x in np.linspace(15.0, 20.0, 11):
            series = specfun.bessel_i0(float(x))
            asym = (
                math.exp(x)
                / math.sqrt(2.0 * math.pi * x)
                * specfun._bessel_i0_asymptotic_factor(float(x))
            )
            assert series == pytest.approx(asym, rel=1e-9)

    def test_log_form_continuity(self):
        for x in (29.9, 30.1, 100.0, 600.0):
            assert specfun.log_bessel_i0(x) == pytest.approx(
                math.log(sp.i0e(x)) + x, rel=1e-12
            )


class TestBesselK:
    def test_half_integer_closed_form(self):
        assert specfun.bessel_k(0.5, 1.0) == pytest.approx(
            math.sqrt(math.pi / 2.0) * math.exp(-1.0), rel=1e-10
        )

    def test_k0_integral_oracle(self):
        oracle, _ = integrate.quad(lambda t: math.exp(-math.cosh(t)), 0.0, 20.0)
        assert specfun.bessel_k(0.0, 1.0) == pytest.approx(oracle, rel=1e-9)
        assert specfun.bessel_k(0.0, 1.0) == pytest.approx(0.42102444, abs=5e-9)

    def test_order_symmetry(self):
        assert specfun.bessel_k(0.3, 2.0) == specfun.bessel_k(-0.3, 2.0)

    def test_decreasing_in_x(self):
        vals = [specfun.bessel_k(2.0, x) for x in (0.5, 1.0, 2.0, 4.0, 8.0)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_against_scipy_grid(self):
        for v in (0, 1, 3, 7, 15, 0.25, 2.5):
            for x in (0.05, 0.7, 1.9, 2.5, 10.0, 50.0):
                assert specfun.bessel_k(v, x) == pytest.approx(sp.kv(v, x), rel=1e-9)

    def test_domain(self):
        with pytest.raises(ValueError):
            specfun.bessel_k(1.0, 0.0)


class TestHyp1f1:
    def test_unit_at_zero(self):
        assert specfun.hyp1f1(-0.5, 1.0, 0.0) == 1.0

    def test_kummer_transform_identity(self):
        # direct series vs e^z * 1F1(b-a, b, -z) on the used domain
        for z in (-0.3, -1.0, -2.0, -4.0):
            direct = specfun._hyp1f1_series(-0.5, 1.0, z, Accuracy(max_terms=500))
            transformed = specfun.hyp1f1(-0.5, 1.0, z)
            assert transformed == pytest.approx(direct, rel=1e-5)

    def test_large_negative_argument(self):
        # consistency with the amplitude-mean asymptote (checked in
        # channel tests); here just against scipy
        assert specfun.hyp1f1(-0.5, 1.0, -10.0) == pytest.approx(
            sp.hyp1f1(-0.5, 1.0, -10.0), rel=1e-10
        )

    def test_invalid_b(self):
        with pytest.raises(ValueError):
            specfun.hyp1f1(-0.5, 0.0, -1.0)
        with pytest.raises(ValueError):
            specfun.hyp1f1(-0.5, -2.0, -1.0)


def direct_2f1_series(a, b, c, z, terms=2_000_000):
    n = np.arange(terms, dtype=np.float64)
    ratios = (a + n) * (b + n) * z / ((c + n) * (n + 1.0))
    return 1.0 + np.cumprod(ratios).sum()


class TestHyp2f1Unit:
    def test_gauss_theorem(self):
        res = specfun.hyp2f1_unit(1.0, 1.0, 3.0)
        assert not res.regularized
        assert res.value == pytest.approx(2.0, rel=1e-12)

    def test_terminating(self):
        res = specfun.hyp2f1_unit(-1.0, 2.0, 5.0)
        assert res.value == pytest.approx(1.0 - 2.0 / 5.0, rel=1e-12)

    def test_gauss_vs_near_unit_series(self):
        # criterion: closed form matches the direct series at z = 1-1e-8
        res = specfun.hyp2f1_unit(1.0, 1.0, 3.0)
        series = direct_2f1_series(1.0, 1.0, 3.0, 1.0 - 1e-8)
        assert res.value == pytest.approx(series, rel=1e-5)

    def test_regularized_branch_flagged(self):
        res = specfun.hyp2f1_unit(2.0, 0.5, 2.5, delta=1e-6)
        assert res.regularized
        assert math.isfinite(res.value) and res.value > 0

    def test_regularized_vs_log_expansion_oracle(self):
        # c = a + b: 2F1(a,b;a+b;z) has the standard logarithmic expansion
        # around z=1; evaluate it at z = 1 - delta as an independent oracle
        a, b, delta = 2.0, 0.5, 1e-6
        pref = math.exp(specfun.ln_gamma(a + b) - specfun.ln_gamma(a) - specfun.ln_gamma(b))
        total, term = 0.0, 1.0
        for n in range(200):
            if n > 0:
                term *= (a + n - 1) * (b + n - 1) * delta / (n * n)
            coeff = (
                2.0 * sp.digamma(n + 1)
                - sp.digamma(a + n)
                - sp.digamma(b + n)
                - math.log(delta)
            )
            total += term * coeff
            if abs(term * coeff) < 1e-16 * abs(total):
                break
        oracle = pref * total
        res = specfun.hyp2f1_unit(a, b, a + b, delta=delta)
        assert res.value == pytest.approx(oracle, rel=1e-9)

    def test_invalid_c(self):
        with pytest.raises(ValueError):
            specfun.hyp2f1_unit(1.0, 1.0, 0.0)


class TestAccuracy:
    def test_invariants(self):
        with pytest.raises(ValueError):
            Accuracy(rel_tol=0.0)
        with pytest.raises(ValueError):
            Accuracy(rel_tol=1e-2)
        with pytest.raises(ValueError):
            Accuracy(max_terms=5)

    def test_max_terms_raises(self):
        with pytest.raises(ConvergenceError):
            # far too few terms for x = 2.4 at 1e-12 tolerance
            specfun._erf_maclaurin(2.4, Accuracy(max_terms=10))
