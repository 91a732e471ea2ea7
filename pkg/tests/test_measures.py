import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from sensapprox.intervals import Interval, IntervalUnion, closed_interval, open_interval, point
from sensapprox.measures import BorelMeasure
from sensapprox.parsing import parse_measure


def measure(text):
    return BorelMeasure.from_spec(parse_measure(text))


UNIFORM = measure("uniform(0,1)")
NORMAL = measure("normal(0,1)")
MIX = measure("mix(0.5*atom(0), 0.5*uniform(0,1))")


def union(*ivs):
    return IntervalUnion(ivs)


class TestMeasureOf:
    def test_uniform_interval_length(self):
        u = union(open_interval(Fraction(1, 4), Fraction(3, 4)))
        assert UNIFORM.measure_of(u) == 0.5

    def test_atom_captured_by_closed_endpoint(self):
        u = union(Interval(-1, False, 0, True))
        assert MIX.measure_of(u) == 0.5

    def test_atom_excluded_by_open_endpoint(self):
        u = union(Interval(-1, False, 0, False))
        assert MIX.measure_of(u) == 0.0

    def test_normal_central_interval(self):
        # oracle: standard normal CDF (scipy.stats)
        a, b = -1.959964, 1.959964
        u = union(open_interval(Fraction(repr(a)), Fraction(repr(b))))
        expected = scipy.stats.norm.cdf(b) - scipy.stats.norm.cdf(a)
        assert NORMAL.measure_of(u) == pytest.approx(expected, abs=1e-13)
        assert NORMAL.measure_of(u) == pytest.approx(0.95, abs=1e-6)

    def test_exponential_closed_form(self):
        mu = measure("exponential(2)")
        u = union(open_interval(0, 1))
        assert mu.measure_of(u) == pytest.approx(1 - math.exp(-2), abs=1e-14)

    def test_pwd_exact(self):
        mu = measure("pwd(breaks(0,1), poly(0,2))")  # density 2x on (0,1)
        u = union(open_interval(0, Fraction(1, 2)))
        assert mu.measure_of(u) == 0.25

    def test_whole_line_and_empty(self):
        whole = union(Interval(-math.inf, False, math.inf, False))
        assert MIX.measure_of(whole) == pytest.approx(1.0, abs=1e-12)
        assert MIX.measure_of(IntervalUnion()) == 0.0


class TestCdfQuantile:
    def test_uniform_cdf(self):
        assert UNIFORM.cdf(0.3) == pytest.approx(0.3, abs=1e-15)

    def test_atom_absorbs_quantile(self):
        assert MIX.quantile(0.25) == 0

    def test_normal_median(self):
        assert NORMAL.quantile(0.5) == pytest.approx(0.0, abs=1e-9)

    def test_quantile_inverse_property(self):
        for q in (0.05, 0.3, 0.51, 0.77, 0.99):
            for mu in (UNIFORM, NORMAL, MIX):
                x = mu.quantile(q)
                assert mu.cdf(x) >= q - 1e-9

    def test_quantile_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            UNIFORM.quantile(0.0)
        with pytest.raises(ValueError):
            UNIFORM.quantile(1.5)

    def test_cdf_jump_equals_atom_mass(self):
        below = MIX.cdf(-1e-12)
        at = MIX.cdf(0.0)
        assert at - below == pytest.approx(0.5, abs=1e-9)


class TestSample:
    def test_uniform_range_and_reproducibility(self):
        xs = UNIFORM.sample(4, seed=7)
        assert np.all((xs > 0) & (xs < 1))
        assert np.array_equal(xs, UNIFORM.sample(4, seed=7))

    def test_degenerate_atom(self):
        mu = measure("atom(3)")
        assert np.array_equal(mu.sample(3, seed=1), [3.0, 3.0, 3.0])

    def test_clt_mean_bound(self):
        n = 10**6
        xs = NORMAL.sample(n, seed=42)
        # 4 sigma of the sample mean of a standard normal at n = 10^6
        assert abs(xs.mean()) < 4.0 * (1.0 / 1000.0)

    def test_non_probability_rejected(self):
        mu = measure("mix(2*uniform(0,1), mass=2)")
        with pytest.raises(ValueError, match="probability"):
            mu.sample(10, seed=0)

    @pytest.mark.parametrize("name,mu", [("uniform", UNIFORM), ("normal", NORMAL), ("mix", MIX)])
    def test_dkw_band(self, name, mu):
        n = 10**6
        alpha = 1e-3
        band = math.sqrt(math.log(2.0 / alpha) / (2.0 * n))
        xs = np.sort(mu.sample(n, seed=11))
        uniq, first = np.unique(xs, return_index=True)
        counts = np.diff(np.append(first, n))
        ecdf_at = (first + counts) / n  # F_n(x) at each distinct value
        ecdf_before = first / n  # F_n(x-)
        cdf_at = mu.cdf_arr(uniq)
        cdf_before = mu.cdf_arr(uniq - 1e-9)  # left limit (atoms are isolated)
        d = max(
            np.max(np.abs(ecdf_at - cdf_at)),
            np.max(np.abs(ecdf_before - cdf_before)),
        )
        assert d <= band


class TestEssentialWindow:
    def test_uniform_window(self):
        a, b = UNIFORM.essential_window(0.01)
        u = union(Interval(-math.inf, False, Fraction(repr(a)), True),
                  Interval(Fraction(repr(b)), True, math.inf, False))
        assert UNIFORM.measure_of(u) <= 0.01

    def test_normal_window(self):
        a, b = NORMAL.essential_window(1e-6)
        # oracle: normal quantile
        expect = scipy.stats.norm.ppf(1 - 5e-7)
        assert a == pytest.approx(-expect, abs=1e-3)
        assert b == pytest.approx(expect, abs=1e-3)

    def test_atom_window_contains_location(self):
        mu = measure("atom(5)")
        a, b = mu.essential_window(0.1)
        assert a < 5 < b


class TestInvariants:
    @settings(deadline=None, max_examples=50)
    @given(st.fractions(min_value=-2, max_value=3, max_denominator=16),
           st.fractions(min_value=-2, max_value=3, max_denominator=16))
    def test_additivity_and_complement(self, a, b):
        if a == b:
            return
        lo, hi = min(a, b), max(a, b)
        mid = (lo + hi) / 2
        s1 = union(open_interval(lo, mid))
        s2 = union(Interval(mid, True, hi, False))
        both = s1.union(s2)
        for mu in (UNIFORM, NORMAL, MIX):
            assert mu.measure_of(both) == pytest.approx(
                mu.measure_of(s1) + mu.measure_of(s2), abs=1e-12
            )
            comp = both.complement()
            assert mu.measure_of(both) + mu.measure_of(comp) == pytest.approx(
                float(mu.total_mass), abs=1e-12
            )
