"""Special-function checks against independent oracles.

Oracles: adaptive quadrature (scipy.integrate), high-precision gamma
(mpmath), Monte Carlo draws of ||z + mu||^2, and central finite differences.
None of them share code with the implementation under test.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

import jlopt
from jlopt import Ncx2Params, ncx2_cdf, ncx2_cdf_ddelta, ncx2_pdf, ncx2_sf, reg_lower_gamma
from jlopt.errors import ParameterError, SeriesOverflowError

# value of reg_lower_gamma(2.5, 3.0), frozen from the quadrature oracle
_P_2P5_3P0 = 0.6937810815867216


class TestRegLowerGamma:
    def test_zero_argument(self):
        for s in (0.5, 1.0, 7.3, 250.0):
            assert reg_lower_gamma(s, 0.0) == 0.0

    @pytest.mark.parametrize("x", [0.1, 0.7, 1.0, 3.5, 20.0])
    def test_shape_one_is_exponential(self, x):
        assert reg_lower_gamma(1.0, x) == pytest.approx(1.0 - math.exp(-x), abs=1e-14)

    def test_quadrature_oracle_frozen_point(self):
        # integrate t^{1.5} e^{-t} over [0, 3]; the substitution t = u^2
        # removes the derivative singularity at the origin
        quad, err = integrate.quad(
            lambda u: 2.0 * u**4 * math.exp(-u * u), 0.0, math.sqrt(3.0), epsabs=1e-13
        )
        oracle = quad / math.gamma(2.5)
        assert err < 1e-12
        assert oracle == pytest.approx(_P_2P5_3P0, abs=1e-12)
        assert reg_lower_gamma(2.5, 3.0) == pytest.approx(oracle, abs=1e-10)

    @pytest.mark.parametrize("s", [0.5, 2.0, 30.5, 100.0, 250.5, 500.0])
    @pytest.mark.parametrize("x", [1e-3, 0.5, 30.0, 99.5, 501.0, 5000.0, 1e4])
    def test_mpmath_sweep(self, s, x):
        oracle = float(mpmath.gammainc(s, 0, x, regularized=True))
        assert abs(reg_lower_gamma(s, x) - oracle) <= 1e-12

    def test_nonpositive_shape_rejected(self):
        with pytest.raises(ParameterError):
            reg_lower_gamma(0.0, 1.0)
        with pytest.raises(ParameterError):
            reg_lower_gamma(-1.5, 1.0)

    def test_negative_argument_rejected(self):
        with pytest.raises(ParameterError):
            reg_lower_gamma(1.0, -0.1)


def _mc_cdf_oracle(x_values, k, delta, draws, seed):
    """Empirical CDF of ||z + mu||^2 with ||mu||^2 = delta, z standard normal."""
    rng = np.random.default_rng(seed)
    mu = math.sqrt(delta)
    total = np.zeros(len(x_values))
    chunk = 1_000_000
    left = draws
    while left > 0:
        m = min(chunk, left)
        z = rng.standard_normal((m, k))
        z[:, 0] += mu
        sq = np.einsum("ij,ij->i", z, z)
        total += (sq[None, :] <= np.asarray(x_values)[:, None]).sum(axis=1)
        left -= m
    return total / draws


class TestNcx2Cdf:
    def test_central_k2_closed_form(self):
        assert ncx2_cdf(2.0, 2, 0.0) == pytest.approx(1.0 - math.exp(-1.0), abs=1e-14)

    def test_zero_argument(self):
        for k, delta in [(1, 0.0), (5, 3.0), (30, 100.0)]:
            assert ncx2_cdf(0.0, k, delta) == 0.0

    @pytest.mark.parametrize("k,delta", [(1, 0.5), (5, 3.0), (30, 10.0)])
    def test_monte_carlo_oracle(self, k, delta):
        xs = [0.5 * (k + delta), k + delta, 2.0 * (k + delta)]
        emp = _mc_cdf_oracle(xs, k, delta, draws=1_000_000, seed=99)
        for x, e in zip(xs, emp):
            assert ncx2_cdf(x, k, delta) == pytest.approx(e, abs=5e-3)

    def test_sf_complements_cdf(self):
        for x, k, delta in [(3.0, 2, 1.0), (40.0, 30, 10.0), (1.0, 5, 25.0)]:
            assert ncx2_cdf(x, k, delta) + ncx2_sf(x, k, delta) == pytest.approx(1.0, abs=1e-12)

    def test_huge_noncentrality_stays_bounded(self):
        v = ncx2_cdf(1e6 + 30.0, 30, 1e6)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(0.5, abs=0.05)

    def test_overflow_guard(self):
        with pytest.raises(SeriesOverflowError):
            ncx2_cdf(1e13, 5, 1e13)

    def test_validation(self):
        with pytest.raises(ParameterError):
            ncx2_cdf(1.0, 0, 0.0)
        with pytest.raises(ParameterError):
            ncx2_cdf(1.0, 2.5, 0.0)
        with pytest.raises(ParameterError):
            ncx2_cdf(-1.0, 2, 0.0)
        with pytest.raises(ParameterError):
            ncx2_cdf(1.0, 2, -0.5)

    @settings(max_examples=60, deadline=None)
    @given(
        k=st.integers(1, 40),
        delta=st.floats(0.0, 200.0),
        x1=st.floats(0.01, 400.0),
        x2=st.floats(0.01, 400.0),
    )
    def test_monotone_in_argument(self, k, delta, x1, x2):
        lo, hi = sorted((x1, x2))
        assert ncx2_cdf(lo, k, delta) <= ncx2_cdf(hi, k, delta) + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(
        k=st.integers(1, 40),
        x=st.floats(0.01, 300.0),
        d1=st.floats(0.0, 150.0),
        d2=st.floats(0.0, 150.0),
    )
    def test_nonincreasing_in_noncentrality(self, k, x, d1, d2):
        lo, hi = sorted((d1, d2))
        assert ncx2_cdf(x, k, hi) <= ncx2_cdf(x, k, lo) + 1e-10

    @settings(max_examples=60, deadline=None)
    @given(k=st.integers(1, 40), x=st.floats(0.01, 300.0), delta=st.floats(0.0, 150.0))
    def test_dof_dominance(self, k, x, delta):
        assert ncx2_cdf(x, k + 2, delta) <= ncx2_cdf(x, k, delta) + 1e-10


class TestNcx2Pdf:
    @pytest.mark.parametrize("x", [0.2, 1.0, 4.0, 12.0])
    def test_central_k2_closed_form(self, x):
        assert ncx2_pdf(x, 2, 0.0) == pytest.approx(0.5 * math.exp(-x / 2.0), abs=1e-14)

    @pytest.mark.parametrize("k", [1, 5, 30])
    @pytest.mark.parametrize("delta", [0.0, 1.0, 10.0])
    def test_quadrature_consistency_with_cdf(self, k, delta):
        upper = k + delta + 4.0 * math.sqrt(2.0 * k + 4.0 * delta) + 4.0
        val, err = integrate.quad(
            lambda t: ncx2_pdf(t, k, delta), 0.0, upper, limit=200, epsabs=1e-11
        )
        assert err < 1e-7  # quad's reported bound is conservative
        assert val == pytest.approx(ncx2_cdf(upper, k, delta), abs=1e-8)

    def test_nonnegative_everywhere(self, rng):
        ks = rng.integers(1, 50, size=10_000)
        deltas = rng.uniform(0.0, 100.0, size=10_000)
        xs = rng.uniform(1e-6, 300.0, size=10_000)
        for x, k, d in zip(xs, ks, deltas):
            assert ncx2_pdf(float(x), int(k), float(d)) >= 0.0

    def test_requires_positive_argument(self):
        with pytest.raises(ParameterError):
            ncx2_pdf(0.0, 2, 1.0)


class TestCdfDeltaDerivative:
    def test_shift_identity(self):
        for x, k, d in [(3.0, 2, 1.0), (12.0, 5, 4.0), (40.0, 30, 10.0)]:
            expect = -0.5 * ncx2_cdf(x, k, d) + 0.5 * ncx2_cdf(x, k + 2, d)
            assert ncx2_cdf_ddelta(x, k, d) == pytest.approx(expect, rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize(
        "x,k,delta",
        [(3.0, 2, 1.0), (6.0, 5, 2.0), (25.0, 30, 4.0), (14.0, 10, 8.0), (2.0, 1, 0.5)],
    )
    def test_finite_difference_oracle(self, x, k, delta):
        h = 1e-5
        fd = (ncx2_cdf(x, k, delta + h) - ncx2_cdf(x, k, delta - h)) / (2.0 * h)
        val = ncx2_cdf_ddelta(x, k, delta)
        assert val == pytest.approx(fd, rel=1e-5)

    def test_vanishes_in_the_far_tail(self):
        assert abs(ncx2_cdf_ddelta(1e4, 5, 2.0)) < 1e-200

    def test_zero_at_origin(self):
        assert ncx2_cdf_ddelta(0.0, 5, 2.0) == 0.0


class TestNcx2Params:
    def test_coerces_and_holds_invariants(self):
        p = Ncx2Params(dof=5.0, noncentrality=2, argument=1)
        assert (p.dof, p.noncentrality, p.argument) == (5, 2.0, 1.0)
        assert isinstance(p.dof, int)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"dof": 0, "noncentrality": 1.0, "argument": 1.0},
            {"dof": 2.5, "noncentrality": 1.0, "argument": 1.0},
            {"dof": 3, "noncentrality": -1.0, "argument": 1.0},
            {"dof": 3, "noncentrality": float("inf"), "argument": 1.0},
            {"dof": 3, "noncentrality": 1.0, "argument": -1.0},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            Ncx2Params(**kwargs)


class TestSeriesInternals:
    def test_partial_sums_monotone(self):
        # all mixture weights are nonnegative, so cdf0 >= cdf at higher dof
        for x, k, d in [(8.0, 4, 3.0), (30.0, 10, 20.0)]:
            t = jlopt.ncx2.tables_one(x, k, d)
            assert t[0] >= t[2] >= t[4] >= 0.0
            assert 0.0 <= t[1] <= t[3] <= t[5]

    def test_tiny_survival_keeps_relative_precision(self):
        # survival far above the bulk, against a high-precision mixture sum
        x, k, d = 500.0, 30, 10.0
        mpmath.mp.dps = 40
        hd = mpmath.mpf(d) / 2
        total = mpmath.mpf(0)
        for j in range(0, 200):
            w = mpmath.e ** (-hd) * hd**j / mpmath.factorial(j)
            total += w * mpmath.gammainc(mpmath.mpf(k) / 2 + j, mpmath.mpf(x) / 2, mpmath.inf,
                                         regularized=True)
        assert ncx2_sf(x, k, d) == pytest.approx(float(total), rel=1e-12)
