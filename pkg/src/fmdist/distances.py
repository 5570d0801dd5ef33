"""Factorial moment distance d_alpha and total variation distance.

Generic definitions work on exact pmfs and moment sequences.  For the
censored matching law against Poisson(lam) there are closed forms, each
reported alongside an independent quadrature route, the two-sided bounds and
the leading-order asymptotic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .distributions import (
    FactorialMomentSeq,
    FinitePmf,
    MatchingParams,
    generalized_matching_pmf,
    poisson_pmf_prefix,
)
from .numerics import (
    DEFAULT_DIGITS,
    HighPrecision,
    IntegrandId,
    _floor_log10,
    as_fraction,
    exp_eval,
    exp_partial_sum,
    exp_series_tail,
    integrate,
    poisson_tail,
)

__all__ = [
    "DEFAULT_QUAD_TOL",
    "PoissonMoments",
    "DistanceReport",
    "OutOfScopeWarning",
    "d_alpha_generic",
    "d_alpha_exact",
    "tv_exact",
    "d_alpha_matching",
    "tv_generic",
    "tv_matching",
    "reference_bounds",
    "ReferenceBounds",
    "min_tv_over_support",
    "tv_fm_ratio",
]

DEFAULT_QUAD_TOL = Fraction(1, 10**12)


class OutOfScopeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PoissonMoments:
    """The factorial moments lam**k of Poisson(lam), for every k."""

    lam: Fraction

    def __post_init__(self):
        lam = as_fraction(self.lam)
        if lam <= 0:
            raise ValueError("lambda must be positive")
        object.__setattr__(self, "lam", lam)

    def __getitem__(self, k: int) -> Fraction:
        return self.lam**k


@dataclass(frozen=True)
class DistanceReport:
    exact: HighPrecision
    integral_check: HighPrecision
    lower_bound: HighPrecision
    upper_bound: HighPrecision
    asymptotic: HighPrecision
    ratio_to_asymptotic: HighPrecision

    def sandwich_holds(self, margin: int = 10) -> bool:
        return self.lower_bound.certainly_lt(self.exact, margin) and self.exact.certainly_lt(
            self.upper_bound, margin
        )

    def routes_agree(self) -> bool:
        diff = abs(self.exact.exact_value - self.integral_check.exact_value)
        return diff <= self.exact.error + self.integral_check.error


def _digits_for(magnitude: Fraction, digits: int) -> int:
    """Absolute precision needed for ``digits`` significant digits of a value
    of size ``magnitude``."""
    if magnitude <= 0:
        return digits
    return digits + max(0, -_floor_log10(magnitude)) + 5


def _as_moments(m) -> FactorialMomentSeq:
    return m if isinstance(m, FactorialMomentSeq) else FactorialMomentSeq(tuple(m))


def _weighted_gap(m1: FactorialMomentSeq, m2, alpha: Fraction, K: int) -> Fraction:
    total = Fraction(0)
    weight = Fraction(1)  # alpha**(k-1)/k!
    for k in range(1, K + 1):
        if k > 1:
            weight = weight * alpha / k
        total += weight * abs(m1[k] - m2[k])
    return total


def d_alpha_exact(m1, m2, alpha) -> Fraction:
    """d_alpha between two finite moment sequences, as an exact rational."""
    alpha = _check_alpha(alpha)
    m1, m2 = _as_moments(m1), _as_moments(m2)
    return _weighted_gap(m1, m2, alpha, max(m1.K, m2.K))


def tv_exact(p1: FinitePmf, p2: FinitePmf) -> Fraction:
    """Half the l1 distance between two finite pmfs."""
    size = max(len(p1), len(p2))
    return sum((abs(p1[j] - p2[j]) for j in range(size)), Fraction(0)) / 2


def d_alpha_generic(m1, m2, alpha, digits: int = DEFAULT_DIGITS) -> HighPrecision:
    """sum_{k>=1} alpha**(k-1)/k! * |m1[k] - m2[k]|.

    Two finite sequences give an exact result.  Against PoissonMoments the
    finite part is summed exactly and the remaining pure-Poisson tail
    (1/alpha) sum_{k>K} (alpha lam)**k/k! is added with a certified bound.
    """
    alpha = _check_alpha(alpha)
    if isinstance(m1, PoissonMoments) and isinstance(m2, PoissonMoments):
        raise TypeError("d_alpha between two Poisson laws is not supported")
    if isinstance(m1, PoissonMoments):
        m1, m2 = m2, m1
    if not isinstance(m2, PoissonMoments):
        return HighPrecision.exact(d_alpha_exact(m1, m2, alpha), digits)

    m1 = _as_moments(m1)
    K = m1.K
    finite = _weighted_gap(m1, m2, alpha, K)
    x = alpha * m2.lam
    first = x ** (K + 1) / math.factorial(K + 1) / alpha
    tail = exp_series_tail(x, K, _digits_for(first, digits)) / alpha
    out = tail + finite
    return HighPrecision(out.value, out.error_bound, digits)


def _check_alpha(alpha) -> Fraction:
    alpha = as_fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return alpha


def _params(p, lam) -> MatchingParams:
    return p if isinstance(p, MatchingParams) else MatchingParams(p, lam)


def d_alpha_matching(
    p, alpha, lam=None, digits: int = DEFAULT_DIGITS, quad_tol=DEFAULT_QUAD_TOL
) -> DistanceReport:
    """d_alpha between the censored matching law and Poisson(lam).

    Series route: (e**(alpha lam) - sum_{k<=n} (alpha lam)**k/k!) / alpha.
    Integral route: alpha**n lam**(n+1)/n! * int_0^1 (1-y)**n e**(alpha lam y) dy.
    """
    p = _params(p, lam)
    alpha = _check_alpha(alpha)
    n, lam = p.n, p.lam
    x = alpha * lam
    asym = alpha**n * lam ** (n + 1) / math.factorial(n + 1)
    exact, exp_x, work = _fm_series(p, alpha, digits)

    scale = alpha**n * lam ** (n + 1) / math.factorial(n)
    integral = integrate(IntegrandId.fm_kernel(n, lam, alpha), quad_tol) * scale

    a, b = Fraction(1) + x / (n + 2), x**2 / ((n + 2) * (n + 3))
    lower = HighPrecision.exact(asym * (a + b), work)
    upper = (exp_x * b + a) * asym

    return DistanceReport(
        exact=_with_digits(exact, digits),
        integral_check=_with_digits(integral, digits),
        lower_bound=_with_digits(lower, digits),
        upper_bound=_with_digits(upper, digits),
        asymptotic=HighPrecision.exact(asym, digits),
        ratio_to_asymptotic=_with_digits(exact / asym, digits),
    )


def _fm_series(p: MatchingParams, alpha: Fraction, digits: int):
    n, x = p.n, alpha * p.lam
    asym = alpha**n * p.lam ** (n + 1) / math.factorial(n + 1)
    work = _digits_for(asym, digits) + math.ceil(float(x) / math.log(10))
    exp_x = exp_eval(x, work)
    return (exp_x - exp_partial_sum(x, n)) / alpha, exp_x, work


def _tv_series(p: MatchingParams, digits: int) -> HighPrecision:
    n, lam = p.n, p.lam
    asym = 2**n * lam ** (n + 1) / math.factorial(n + 1)
    # individual pmf gaps can be smaller than asym by a factor up to 2**n
    work = _digits_for(asym, digits) + n
    return tv_generic(generalized_matching_pmf(p), PoissonMoments(lam), work)


def _with_digits(h: HighPrecision, digits: int) -> HighPrecision:
    return HighPrecision(h.value, h.error_bound, digits)


def tv_generic(p1: FinitePmf, p2, digits: int = DEFAULT_DIGITS) -> HighPrecision:
    """Total variation distance.

    Two finite pmfs: half the l1 distance, exact.  Against Poisson (given as
    PoissonMoments): sum over the finite support of (p1[j] - poisson[j])^+,
    which is exact in form because p1 vanishes beyond its support.
    """
    if isinstance(p1, FinitePmf) and isinstance(p2, FinitePmf):
        return HighPrecision.exact(tv_exact(p1, p2), digits)
    if isinstance(p1, PoissonMoments):
        p1, p2 = p2, p1
    if not isinstance(p2, PoissonMoments):
        raise TypeError("second argument must be a FinitePmf or PoissonMoments")
    poisson = poisson_pmf_prefix(p2.lam, p1.n, digits + 3)
    total = HighPrecision.exact(0, digits)
    for j, q in enumerate(p1.probs):
        total = total + (poisson[j] * -1 + q).positive_part()
    return _with_digits(total, digits)


def tv_matching(p, lam=None, digits: int = DEFAULT_DIGITS, quad_tol=DEFAULT_QUAD_TOL) -> DistanceReport:
    """d_tv between the censored matching law and Poisson(lam)."""
    p = _params(p, lam)
    n, lam = p.n, p.lam
    asym = 2**n * lam ** (n + 1) / math.factorial(n + 1)
    exact = _tv_series(p, digits)
    scale = lam ** (n + 1) / (2 * math.factorial(n))
    integral = integrate(IntegrandId.tv_kernel(n, lam), quad_tol) * scale

    first = 2 * lam / (n + 2) * (1 - Fraction(1, 2 ** (n + 1)))
    second = 4 * lam**2 / ((n + 2) * (n + 3)) * (1 - Fraction(n + 3, 2 ** (n + 2)))
    lower = asym * (1 - first)
    upper = asym * (1 - first + second)

    return DistanceReport(
        exact=_with_digits(exact, digits),
        integral_check=_with_digits(integral, digits),
        lower_bound=HighPrecision.exact(lower, digits),
        upper_bound=HighPrecision.exact(upper, digits),
        asymptotic=HighPrecision.exact(asym, digits),
        ratio_to_asymptotic=_with_digits(exact / asym, digits),
    )


@dataclass(frozen=True)
class ReferenceBounds:
    diaconis: HighPrecision
    dasgupta: HighPrecision
    corollary: HighPrecision


def reference_bounds(n: int, digits: int = DEFAULT_DIGITS) -> ReferenceBounds:
    """Published upper bounds on d_tv(Z_n, Poisson(1)).

    diaconis = 2**n/n!, dasgupta = 2**n/(n+1)!, and the bound implied by
    d_tv <= d_2: (2**n/(n+1)!) (1 + 2/(n+2) + 4 e**2/((n+2)(n+3))).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    diaconis = Fraction(2**n, math.factorial(n))
    dasgupta = Fraction(2**n, math.factorial(n + 1))
    e2 = exp_eval(2, _digits_for(dasgupta, digits))
    corollary = (e2 * Fraction(4, (n + 2) * (n + 3)) + 1 + Fraction(2, n + 2)) * dasgupta
    return ReferenceBounds(
        HighPrecision.exact(diaconis, digits),
        HighPrecision.exact(dasgupta, digits),
        _with_digits(corollary, digits),
    )


def min_tv_over_support(n: int, lam, digits: int = DEFAULT_DIGITS) -> HighPrecision:
    """min over X supported in {0..n} of d_tv(X, Poisson(lam)) = Pr(Poisson(lam) > n).

    The minimum is attained by any X with X's mass >= the Poisson mass at
    every j <= n.
    """
    lam = as_fraction(lam)
    if n < 0:
        raise ValueError("n must be non-negative")
    if lam > 1:
        warnings.warn(
            f"lambda={lam} > 1: value is the Poisson tail, outside the matching-law range (0, 1]",
            OutOfScopeWarning,
            stacklevel=2,
        )
    return poisson_tail(lam, n, digits)


def tv_fm_ratio(n: int, alpha, lam, digits: int = DEFAULT_DIGITS) -> HighPrecision:
    """d_tv(n) / d_alpha(n) for the censored matching law; grows like (2/alpha)**n."""
    p = MatchingParams(n, lam)
    alpha = _check_alpha(alpha)
    tv = _tv_series(p, digits + 5)
    fm = _fm_series(p, alpha, digits + 5)[0]
    return _with_digits(tv / fm, digits)
