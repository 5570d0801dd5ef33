from decimal import Decimal
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmdist.numerics import (
    HighPrecision,
    IntegrandId,
    QuadratureError,
    exp_eval,
    exp_partial_sum,
    exp_series_tail,
    exp_tail_integral,
    integrate,
    parse_rational,
    poisson_tail,
)

# 40-digit reference constants computed with mpmath (independent of this package)
E = F("2.718281828459045235360287471352662497757")
E2 = F("7.389056098930650227230427460575007813180")
POISSON_TAIL_1_3 = F("0.01898815687615380907860327956943768681117")
ONE_MINUS_INV_E = F("0.6321205588285576784044762298385391325542")
TV_KERNEL_N1 = F("1.264241117657115356808952459677078265108")


def close(h: HighPrecision, ref: F, tol) -> bool:
    return abs(h.exact_value - ref) <= F(tol)


@pytest.mark.parametrize(
    "x, n, expected",
    [(2, 3, F(19, 3)), (0, 5, F(1)), (-1, 2, F(1, 2)), (F(1, 2), 0, F(1))],
)
def test_exp_partial_sum(x, n, expected):
    assert exp_partial_sum(x, n) == expected


def test_exp_partial_sum_matches_term_by_term():
    import math

    x = F(-7, 3)
    assert exp_partial_sum(x, 12) == sum(x**k / math.factorial(k) for k in range(13))


def test_exp_eval_examples():
    e = exp_eval(1, 10)
    assert abs(e.exact_value - E) <= e.error + F(1, 10**39)
    assert e.meets_contract()

    zero = exp_eval(0, 7)
    assert zero.value == 1 and zero.error_bound == 0

    e2 = exp_eval(2, 12)
    assert close(e2, E2, F(1, 10**12) * E2)
    # squaring e**1 is an independent route to e**2
    sq = exp_eval(1, 30) * exp_eval(1, 30)
    assert abs(sq.exact_value - e2.exact_value) <= sq.error + e2.error


@pytest.mark.parametrize("x", [F(-3), F(-1, 7), F(1, 3), F(5), F(50)])
@pytest.mark.parametrize("digits", [5, 20, 60])
def test_exp_eval_contract(x, digits):
    h = exp_eval(x, digits)
    assert h.meets_contract()
    assert h.digits == digits


def test_exp_eval_certificate_contains_truth():
    # mpmath at 40 digits vs our 30-digit enclosure
    h = exp_eval(2, 30)
    assert h.lo - F(1, 10**39) <= E2 <= h.hi + F(1, 10**39)


def test_exp_eval_rejects_bad_digits():
    with pytest.raises(ValueError):
        exp_eval(1, 0)


def test_poisson_tail_examples():
    assert close(poisson_tail(1, 3, 30), POISSON_TAIL_1_3, F(1, 10**29))
    assert close(poisson_tail(1, 0, 30), ONE_MINUS_INV_E, F(1, 10**29))
    small = poisson_tail(F(1, 1000), 0, 20)
    assert close(small, F("0.0009995001666250083319446428323440252976407"), F(1, 10**22))


def test_poisson_tail_keeps_relative_accuracy_deep_in_the_tail():
    h = poisson_tail(1, 40, 20)
    assert h.relative_error() < F(1, 10**20)
    assert h.exact_value > 0


def test_poisson_tail_requires_positive_lambda():
    with pytest.raises(ValueError):
        poisson_tail(0, 3)


def test_exp_series_tail_equals_difference():
    x, n = F(3, 2), 7
    tail = exp_series_tail(x, n, 40)
    diff = exp_eval(x, 60) - exp_partial_sum(x, n)
    assert abs(tail.exact_value - diff.exact_value) <= tail.error + diff.error


def test_integrate_examples():
    tol = F(1, 10**12)
    tv = integrate(IntegrandId.tv_kernel(1, 1), tol)
    assert tv.error <= tol
    assert close(tv, TV_KERNEL_N1, tol)

    fm = integrate(IntegrandId.fm_kernel(0, 1, 1), tol)
    assert close(fm, E - 1, tol)

    n = 50
    tail = integrate(IntegrandId.exp_tail(n, 1), tol)
    assert F(1, n + 1) < tail.lo
    assert tail.hi < F(1, n + 1) * (1 + (E - 1) / (n + 2))


def test_integrate_rejects_nonpositive_tol():
    with pytest.raises(ValueError):
        integrate(IntegrandId.exp_tail(1, 1), 0)


def test_integrate_depth_limit_reports_achieved_bound():
    with pytest.raises(QuadratureError) as info:
        integrate(IntegrandId.tv_kernel(60, 1), F(1, 10**40), max_depth=1)
    assert info.value.achieved > 0


def test_exp_tail_integral_examples():
    assert close(exp_tail_integral(2, 3), E2 - F(19, 3), F(1, 10**28))
    z = exp_tail_integral(0, 7)
    assert z.value == 0 and z.error_bound == 0
    assert close(exp_tail_integral(1, 0), E - 1, F(1, 10**28))


@settings(max_examples=40, deadline=None)
@given(
    st.fractions(min_value=-4, max_value=4, max_denominator=20),
    st.integers(min_value=0, max_value=60),
)
def test_exp_tail_integral_identity(x, n):
    # raises CrossCheckError itself on disagreement; recheck here explicitly
    q = exp_tail_integral(x, n, digits=15)
    s = exp_eval(x, 200) - exp_partial_sum(x, n)
    assert abs(q.exact_value - s.exact_value) <= q.error + s.error


@settings(max_examples=30, deadline=None)
@given(st.fractions(min_value=F(1, 50), max_value=5, max_denominator=50))
def test_partial_sums_increase_towards_exp(x):
    e = exp_eval(x, 150)
    sums = [exp_partial_sum(x, n) for n in range(0, 40)]
    assert all(a < b for a, b in zip(sums, sums[1:]))
    assert all(e.lo > s for s in sums)


@pytest.mark.parametrize("n", range(0, 61, 5))
def test_exp_tail_sandwich(n):
    val = integrate(IntegrandId.exp_tail(n, 1), F(1, 10**20))
    assert F(1, n + 1) < val.lo
    assert val.hi < F(1, n + 1) * (1 + (E - 1) / (n + 2)) - F(1, 10**30)


def test_poisson_tail_monotone_grid():
    lams = [F(1, 4), F(1, 2), F(1), F(3, 2)]
    grid = [[poisson_tail(lam, n, 25) for n in range(12)] for lam in lams]
    for row in grid:
        assert all(b.certainly_lt(a) for a, b in zip(row, row[1:]))
    for r1, r2 in zip(grid, grid[1:]):
        assert all(a.certainly_lt(b) for a, b in zip(r1, r2))


class TestHighPrecision:
    def test_arithmetic_propagates_bounds(self):
        a = HighPrecision(Decimal("1.5"), Decimal("0.01"))
        b = HighPrecision(Decimal("2"), Decimal("0.02"))
        for op in (lambda x, y: x + y, lambda x, y: x - y, lambda x, y: x * y, lambda x, y: x / y):
            out = op(a, b)
            for da in (-1, 1):
                for db in (-1, 1):
                    truth = op(a.exact_value + da * a.error, b.exact_value + db * b.error)
                    assert out.lo <= truth <= out.hi

    def test_division_by_interval_containing_zero(self):
        with pytest.raises(ZeroDivisionError):
            HighPrecision(Decimal(1), Decimal(0)) / HighPrecision(Decimal("0.001"), Decimal("0.01"))

    def test_positive_part(self):
        assert HighPrecision(Decimal("-2"), Decimal("1")).positive_part().value == 0
        straddle = HighPrecision(Decimal("0.1"), Decimal("0.5")).positive_part()
        assert straddle.error_bound == Decimal("0.5")

    def test_exact_thirds_round_with_certified_error(self):
        h = HighPrecision.exact(F(1, 3), 20)
        assert h.contains(F(1, 3))
        assert h.meets_contract()

    def test_format(self):
        assert HighPrecision.exact(F(5, 8)).format(15) == "0.625"
        assert HighPrecision.exact(0).format(15) == "0"
        assert HighPrecision.exact(E).format(6) == "2.71828"


@pytest.mark.parametrize("text, value", [("0.5", F(1, 2)), ("1/2", F(1, 2)), ("3", F(3)), (".1", F(1, 10)), ("2/4", F(1, 2))])
def test_parse_rational(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("text", ["1e-3", "0.5e1", "abc", "1/0", "1/2.5", "", "nan"])
def test_parse_rational_rejects(text):
    with pytest.raises((ValueError, ZeroDivisionError)):
        parse_rational(text)
