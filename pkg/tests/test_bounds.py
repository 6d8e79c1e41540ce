"""Tests for the risk-bound equation solvers.

The reference oracle expands each certificate polynomial into ordinary
floating-point coefficients (safe for N <= 6), locates every root by a dense
sign scan followed by bisection, and the solver under test must agree to
1e-8.  Larger-N anchor values are frozen from exact mpmath bisection runs of
the same equations.
"""

import math

import numpy as np
import pytest

from scenariocert.bounds import (
    BoundQuery,
    build_table,
    epsilon_pair,
    epsilon_upper,
    eval_certificate_polynomial,
    explicit_interval_bounds,
)
from scenariocert.errors import NumericalError


# ---------------------------------------------------------------------------
# independent oracle: expanded polynomials + dense scan + bisection
# ---------------------------------------------------------------------------

def one_sided_coeffs(n, beta, k):
    c = np.zeros(n - k + 1)
    for m in range(k, n):
        c[m - k] += beta / (2 * n) * math.comb(m, k)
    c[n - k] -= math.comb(n, k)
    return c


def pair_coeffs(n, beta, k):
    c = np.zeros(4 * n - k + 1)
    c[n - k] += math.comb(n, k)
    for i in range(k, n):
        c[i - k] -= beta / (2 * n) * math.comb(i, k)
    for i in range(n + 1, 4 * n + 1):
        c[i - k] -= beta / (6 * n) * math.comb(i, k)
    return c


def saturation_coeffs(n, beta):
    c = np.zeros(3 * n + 1)
    c[0] = 1.0
    for i in range(n + 1, 4 * n + 1):
        c[i - n] -= beta / (6 * n) * math.comb(i, n)
    return c


def scan_roots(coeffs, lo, hi, samples=400001):
    """All sign-change roots of the expanded polynomial on [lo, hi]."""
    p = coeffs[::-1]
    ts = np.linspace(lo, hi, samples)
    vals = np.polyval(p, ts)
    roots = [float(t) for t in ts[vals == 0.0]]
    sgn = np.sign(vals)
    flips = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    for i in flips:
        a, b = ts[i], ts[i + 1]
        fa = np.polyval(p, a)
        for _ in range(100):
            m = 0.5 * (a + b)
            fm = np.polyval(p, m)
            if (fm > 0) == (fa > 0):
                a, fa = m, fm
            else:
                b = m
        roots.append(0.5 * (a + b))
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-9 * (1.0 + abs(r)):
            merged.append(r)
    return merged


# ---------------------------------------------------------------------------
# anchor values
# ---------------------------------------------------------------------------

class TestReportedValues:
    """Frozen large-N values, cross-checked against exact mpmath bisection."""

    @pytest.mark.parametrize("n,beta,k,expected", [
        (2000, 1e-7, 4, 0.0153),
        (2000, 1e-7, 75, 0.0694),
        (2000, 1e-5, 8, 0.0164),
    ])
    def test_one_sided(self, n, beta, k, expected):
        assert epsilon_upper(BoundQuery(n, beta, k)) == pytest.approx(expected, abs=1e-4)

    def test_pair_main(self):
        lo, hi = epsilon_pair(BoundQuery(2000, 1e-5, 199))
        assert lo == pytest.approx(0.0671, abs=1e-4)
        assert hi == pytest.approx(0.139098, abs=1e-6)

    @pytest.mark.parametrize("k,expected", [
        (130, 0.098469),
        (46, 0.045252),
        (193, 0.135628),
        (48, 0.046615),
        (14, 0.021667),
    ])
    def test_pair_upper_sweep(self, k, expected):
        _, hi = epsilon_pair(BoundQuery(2000, 1e-5, k))
        assert hi == pytest.approx(expected, abs=1e-6)

    def test_one_sided_at_full_complexity(self):
        assert epsilon_upper(BoundQuery(123, 0.37, 123)) == 1.0
        assert epsilon_upper(BoundQuery(7, 1e-6, 7)) == 1.0

    def test_pair_upper_at_full_complexity(self):
        _, hi = epsilon_pair(BoundQuery(40, 0.2, 40))
        assert hi == 1.0

    def test_small_closed_form(self):
        # N=2, k=0: 0.125(1+t) = t^2, positive root by the quadratic formula
        t = (0.125 + math.sqrt(0.125 ** 2 + 4 * 0.125)) / 2.0
        assert epsilon_upper(BoundQuery(2, 0.5, 0)) == pytest.approx(1.0 - t, abs=1e-10)

    def test_pair_degree_four(self):
        # N=1, k=0: t - 0.3 - 0.1(t^2+t^3+t^4) = 0 has two nonnegative roots
        roots = scan_roots(pair_coeffs(1, 0.6, 0), 0.0, 16.0)
        assert len(roots) == 2
        lo, hi = epsilon_pair(BoundQuery(1, 0.6, 0))
        assert hi == pytest.approx(1.0 - roots[0], abs=1e-8)
        assert lo == pytest.approx(max(0.0, 1.0 - roots[1]), abs=1e-8)


# ---------------------------------------------------------------------------
# small-N oracle equivalence
# ---------------------------------------------------------------------------

class TestOracleEquivalence:

    @pytest.mark.parametrize("beta", [0.01, 0.3, 0.9])
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_all_roots_match(self, n, beta):
        for k in range(n):
            q = BoundQuery(n, beta, k)
            t_one = scan_roots(one_sided_coeffs(n, beta, k), 0.0, 1.0)
            assert len(t_one) == 1
            assert 1.0 - epsilon_upper(q) == pytest.approx(t_one[0], abs=1e-8)

            hi_t = 16.0
            while np.polyval(pair_coeffs(n, beta, k)[::-1], hi_t) > 0:
                hi_t *= 2
            t_pair = scan_roots(pair_coeffs(n, beta, k), 0.0, hi_t)
            assert len(t_pair) == 2
            lo, hi = epsilon_pair(q)
            assert 1.0 - hi == pytest.approx(t_pair[0], abs=1e-8)
            if t_pair[1] < 1.0:
                assert 1.0 - lo == pytest.approx(t_pair[1], abs=1e-8)
            else:
                assert lo == 0.0

        q = BoundQuery(n, beta, n)
        hi_t = 16.0
        while np.polyval(saturation_coeffs(n, beta)[::-1], hi_t) > 0:
            hi_t *= 2
        t_sat = scan_roots(saturation_coeffs(n, beta), 0.0, hi_t)
        assert len(t_sat) == 1
        lo, hi = epsilon_pair(q)
        assert hi == 1.0
        if t_sat[0] < 1.0:
            assert 1.0 - lo == pytest.approx(t_sat[0], abs=1e-8)
        else:
            assert lo == 0.0


# ---------------------------------------------------------------------------
# properties of the evaluator
# ---------------------------------------------------------------------------

class TestPolynomialEvaluator:

    def test_one_sided_sign_near_zero(self):
        q = BoundQuery(100, 0.05, 7)
        v = eval_certificate_polynomial("one_sided", q, 0.0)
        assert v.sign == 1
        assert v.log_abs == pytest.approx(math.log(0.05 / 200), abs=1e-12)

    def test_pair_value_at_zero(self):
        q = BoundQuery(100, 0.05, 7)
        v = eval_certificate_polynomial("two_sided", q, 0.0)
        assert v.sign == -1
        assert v.log_abs == pytest.approx(math.log(0.05 / 200), abs=1e-12)

    def test_saturation_value_at_zero(self):
        v = eval_certificate_polynomial("saturation", BoundQuery(100, 0.05, 100), 0.0)
        assert v.sign == 1
        assert v.log_abs == pytest.approx(0.0, abs=1e-12)

    def test_agrees_with_expanded_polynomial(self):
        n, beta, k = 6, 0.2, 2
        q = BoundQuery(n, beta, k)
        for t in (0.05, 0.4, 0.9, 1.3, 3.0):
            v = eval_certificate_polynomial("two_sided", q, t)
            exact = np.polyval(pair_coeffs(n, beta, k)[::-1], t)
            assert v.sign == np.sign(exact)
            assert v.sign * math.exp(v.log_abs) == pytest.approx(exact, rel=1e-10)

    def test_negative_t_rejected(self):
        with pytest.raises(ValueError):
            eval_certificate_polynomial("one_sided", BoundQuery(10, 0.1, 2), -0.5)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            eval_certificate_polynomial("interval_v2", BoundQuery(10, 0.1, 2), 0.5)


class TestBracketSigns:

    @pytest.mark.parametrize("n,beta,k", [(2000, 1e-5, 199), (50, 0.01, 10), (6, 0.3, 2)])
    def test_one_sided_endpoints(self, n, beta, k):
        q = BoundQuery(n, beta, k)
        assert eval_certificate_polynomial("one_sided", q, 1e-12).sign == 1
        assert eval_certificate_polynomial("one_sided", q, 1.0 - 1e-12).sign == -1

    @pytest.mark.parametrize("n,beta,k", [(2000, 1e-5, 199), (50, 0.01, 10), (6, 0.3, 2)])
    def test_pair_sign_pattern(self, n, beta, k):
        q = BoundQuery(n, beta, k)
        lo, hi = epsilon_pair(q)
        t_lo = 1.0 - hi
        assert eval_certificate_polynomial("two_sided", q, 0.0).sign == -1
        # positive strictly between the roots
        if lo > 0.0:
            t_hi = 1.0 - lo
        else:
            t_hi = t_lo
            while eval_certificate_polynomial("two_sided", q, t_hi).sign > 0:
                t_hi += 0.1 * (1 + t_lo)
        mid = 0.5 * (t_lo + t_hi)
        assert eval_certificate_polynomial("two_sided", q, mid).sign == 1
        assert eval_certificate_polynomial("two_sided", q, 2.0 * t_hi + 1.0).sign == -1


class TestRootResiduals:

    @pytest.mark.parametrize("n,beta,k", [
        (2000, 1e-7, 4), (2000, 1e-5, 199), (2000, 1e-5, 8),
        (200, 1e-3, 50), (50, 0.5, 3), (6, 0.3, 2),
    ])
    def test_relative_residual_below_1e9(self, n, beta, k):
        q = BoundQuery(n, beta, k)
        t_one = 1.0 - epsilon_upper(q)
        v = eval_certificate_polynomial("one_sided", q, t_one)
        assert math.exp(v.log_abs - v.log_scale) < 1e-9
        lo, hi = epsilon_pair(q)
        for t in filter(None, [1.0 - hi, (1.0 - lo) if lo > 0 else None]):
            v = eval_certificate_polynomial("two_sided", q, t)
            assert math.exp(v.log_abs - v.log_scale) < 1e-9


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

class TestEpsilonTable:

    @pytest.fixture(scope="class")
    def table60(self):
        return build_table(60, 0.01)

    def test_entries_in_unit_interval(self, table60):
        for arr in (table60.upper, table60.pair_lower, table60.pair_upper):
            assert np.all(arr >= 0.0) and np.all(arr <= 1.0)

    def test_monotone_in_complexity(self, table60):
        assert np.all(np.diff(table60.upper) >= -1e-12)
        assert np.all(np.diff(table60.pair_lower) >= -1e-12)
        assert np.all(np.diff(table60.pair_upper) >= -1e-12)

    def test_pair_ordering(self, table60):
        assert np.all(table60.pair_lower <= table60.pair_upper + 1e-15)

    def test_pair_upper_never_exceeds_one_sided(self, table60):
        assert np.all(table60.pair_upper <= table60.upper + 1e-12)

    def test_saturation_entries(self, table60):
        assert table60.upper[-1] == 1.0
        assert table60.pair_upper[-1] == 1.0

    def test_matches_single_queries(self):
        tab = build_table(50, 0.01)
        for k in range(51):
            q = BoundQuery(50, 0.01, k)
            assert abs(tab.upper[k] - epsilon_upper(q)) < 1e-12
            lo, hi = epsilon_pair(q)
            assert abs(tab.pair_lower[k] - lo) < 1e-12
            assert abs(tab.pair_upper[k] - hi) < 1e-12


class TestExplicitBounds:

    def test_floor_nonpositive_at_zero_complexity(self):
        for n, beta in [(10, 0.5), (1000, 1e-6), (37, 0.02)]:
            floor, _ = explicit_interval_bounds(BoundQuery(n, beta, 0))
            assert floor <= 0.0

    def test_interval_width_shrinks(self):
        floor, ceiling = explicit_interval_bounds(BoundQuery(2000, 1e-5, 8))
        assert ceiling - floor < 0.2

    def test_brackets_pair_bounds(self):
        for k in (0, 8, 46, 199, 1000):
            q = BoundQuery(2000, 1e-5, k)
            floor, ceiling = explicit_interval_bounds(q)
            lo, hi = epsilon_pair(q)
            assert floor <= lo + 1e-12
            assert hi <= ceiling + 1e-12


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

class TestQueryValidation:

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            BoundQuery(10, 2.0, 1)
        with pytest.raises(ValueError):
            BoundQuery(10, 0.0, 1)

    def test_rejects_out_of_range_complexity(self):
        with pytest.raises(ValueError):
            BoundQuery(10, 0.1, 11)
        with pytest.raises(ValueError):
            BoundQuery(10, 0.1, -1)

    def test_rejects_bad_sample_size(self):
        with pytest.raises(ValueError):
            BoundQuery(0, 0.1, 0)
        with pytest.raises(ValueError):
            BoundQuery(2.5, 0.1, 0)

    def test_numerical_error_is_runtime_error(self):
        assert issubclass(NumericalError, RuntimeError)
