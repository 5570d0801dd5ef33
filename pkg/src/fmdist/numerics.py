"""Exact rationals and error-bounded evaluation of exponential sums and integrals.

Everything finite is done in :class:`fractions.Fraction`.  Transcendental
quantities come back as :class:`HighPrecision`, a decimal value together with
an absolute error bound that is a certificate, not an estimate.  The only
exception is :func:`integrate`, whose bound is the usual Gauss-Legendre
order-8 / order-16 disagreement.
"""

from __future__ import annotations

import enum
import math
import re
import threading
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import mpmath

__all__ = [
    "DEFAULT_DIGITS",
    "HighPrecision",
    "IntegrandId",
    "IntegrandTag",
    "QuadratureError",
    "CrossCheckError",
    "as_fraction",
    "parse_rational",
    "exp_partial_sum",
    "exp_eval",
    "exp_series_tail",
    "poisson_tail",
    "integrate",
    "exp_tail_integral",
]

DEFAULT_DIGITS = 50

# Rounded values keep this many digits beyond the requested precision.
_GUARD = 10

_RATIONAL_RE = re.compile(r"^\s*[+-]?(\d+(\.\d*)?|\.\d+)(\s*/\s*\d+)?\s*$")


class QuadratureError(ArithmeticError):
    """Adaptive quadrature hit its depth limit before reaching ``tol``."""

    def __init__(self, message: str, achieved: Fraction):
        super().__init__(message)
        self.achieved = achieved


class CrossCheckError(ArithmeticError):
    """Two independent evaluation routes disagreed beyond their error bounds."""


def parse_rational(text: str) -> Fraction:
    """Parse ``"0.5"``, ``"1/2"`` or ``"3"`` into an exact Fraction.

    Scientific notation and floats are rejected so the value is exactly what
    the user typed.
    """
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise ValueError(f"not a decimal or fraction literal: {text!r}")
    if "/" in text:
        num, den = text.split("/")
        if "." in den:
            raise ValueError(f"denominator must be an integer: {text!r}")
        if int(den) == 0:
            raise ValueError("zero denominator")
        return Fraction(num.strip()) / int(den)
    return Fraction(text.strip())


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, Decimal):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, HighPrecision):
        return x.exact_value
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def _floor_log10(q: Fraction) -> int:
    """floor(log10(q)) for q > 0, exact."""
    num, den = q.numerator, q.denominator
    e = len(str(num)) - len(str(den))
    # adjust so that 10**e <= q < 10**(e+1)
    while q < Fraction(10) ** e:
        e -= 1
    while q >= Fraction(10) ** (e + 1):
        e += 1
    return e


def _round_to(q: Fraction, places: int) -> Decimal:
    """Round q to a multiple of 10**-places (half-even)."""
    scaled = q * Fraction(10) ** places
    return Decimal(f"{int(round(scaled))}E{-places}")


def _round_up(q: Fraction, sig: int = 3) -> Decimal:
    """A Decimal with ``sig`` significant digits that is >= q (q >= 0)."""
    if q <= 0:
        return Decimal(0)
    places = sig - 1 - _floor_log10(q)
    scaled = q * Fraction(10) ** places
    return Decimal(f"{int(math.ceil(scaled))}E{-places}")


@dataclass(frozen=True)
class HighPrecision:
    """A decimal ``value`` with the guarantee ``|true - value| <= error_bound``."""

    value: Decimal
    error_bound: Decimal
    digits: int = DEFAULT_DIGITS

    def __post_init__(self):
        if self.error_bound < 0:
            raise ValueError("error_bound must be non-negative")

    @classmethod
    def from_fraction(cls, q, error=0, digits: int = DEFAULT_DIGITS) -> HighPrecision:
        """Round ``q`` (known to within ``error``) and fold in the rounding error."""
        q = as_fraction(q)
        error = as_fraction(error)
        if q == 0:
            return cls(Decimal(0), _round_up(error), digits)
        places = digits + _GUARD - _floor_log10(abs(q))
        if error > 0:
            places = min(places, 3 - _floor_log10(error))
        value = _round_to(q, places)
        total = error + abs(Fraction(value) - q)
        return cls(value, _round_up(total), digits)

    @classmethod
    def exact(cls, q, digits: int = DEFAULT_DIGITS) -> HighPrecision:
        return cls.from_fraction(q, 0, digits)

    @property
    def exact_value(self) -> Fraction:
        return Fraction(self.value)

    @property
    def error(self) -> Fraction:
        return Fraction(self.error_bound)

    @property
    def lo(self) -> Fraction:
        return self.exact_value - self.error

    @property
    def hi(self) -> Fraction:
        return self.exact_value + self.error

    def contains(self, q) -> bool:
        return self.lo <= as_fraction(q) <= self.hi

    def meets_contract(self) -> bool:
        """Error bound at most 10**-digits relative to max(1, |value|)."""
        scale = max(Fraction(1), abs(self.exact_value))
        return self.error <= scale / Fraction(10) ** self.digits

    def relative_error(self) -> Fraction:
        v = abs(self.exact_value)
        return self.error / v if v else Fraction(0 if self.error == 0 else 10**9)

    def positive_part(self) -> HighPrecision:
        # x -> max(x, 0) is 1-Lipschitz, so the bound carries over
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return HighPrecision(Decimal(0), Decimal(0), self.digits)
        return HighPrecision(max(self.value, Decimal(0)), self.error_bound, self.digits)

    def __float__(self) -> float:
        return float(self.value)

    def __neg__(self) -> HighPrecision:
        return HighPrecision(-self.value, self.error_bound, self.digits)

    def __abs__(self) -> HighPrecision:
        if self.value < 0:
            return -self
        return self

    def _coerce(self, other):
        if isinstance(other, HighPrecision):
            return other.exact_value, other.error, other.digits
        q = as_fraction(other)
        return q, Fraction(0), self.digits

    def __add__(self, other) -> HighPrecision:
        v, e, d = self._coerce(other)
        return HighPrecision.from_fraction(self.exact_value + v, self.error + e, min(self.digits, d))

    __radd__ = __add__

    def __sub__(self, other) -> HighPrecision:
        v, e, d = self._coerce(other)
        return HighPrecision.from_fraction(self.exact_value - v, self.error + e, min(self.digits, d))

    def __rsub__(self, other) -> HighPrecision:
        return (-self) + other

    def __mul__(self, other) -> HighPrecision:
        v, e, d = self._coerce(other)
        a, ea = self.exact_value, self.error
        err = abs(a) * e + abs(v) * ea + ea * e
        return HighPrecision.from_fraction(a * v, err, min(self.digits, d))

    __rmul__ = __mul__

    def __truediv__(self, other) -> HighPrecision:
        v, e, d = self._coerce(other)
        if abs(v) <= e:
            raise ZeroDivisionError("divisor interval contains zero")
        a, ea = self.exact_value, self.error
        q = a / v
        err = (ea + abs(q) * e) / (abs(v) - e)
        return HighPrecision.from_fraction(q, err, min(self.digits, d))

    def __rtruediv__(self, other) -> HighPrecision:
        return HighPrecision.exact(as_fraction(other), self.digits) / self

    def certainly_lt(self, other, margin: int = 1) -> bool:
        """``self < other`` with room to spare: gap > margin * combined error."""
        v, e, _ = self._coerce(other)
        return v - self.exact_value > margin * (self.error + e)

    def format(self, sig: int) -> str:
        """Round to ``sig`` significant digits; trailing zeros dropped."""
        if self.value == 0:
            return "0"
        with localcontext() as ctx:
            ctx.prec = sig
            d = (+self.value).normalize()
        if -7 <= d.adjusted() < sig:
            return format(d, "f")
        return format(d, "E")

    def is_certified_rounding(self, sig: int) -> bool:
        """True when every point of the error interval rounds to the same string."""
        if self.error == 0:
            return True
        lo = HighPrecision(_round_to(self.lo, 10 * self.digits + 60), Decimal(0), self.digits)
        hi = HighPrecision(_round_to(self.hi, 10 * self.digits + 60), Decimal(0), self.digits)
        return lo.format(sig) == hi.format(sig)

    def __str__(self) -> str:
        return f"{self.format(min(self.digits, 20))} ± {float(self.error_bound):.2e}"


# ---------------------------------------------------------------------------
# exponential series


def exp_partial_sum(x, n: int) -> Fraction:
    """Exactly sum x**k / k! for k = 0..n."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = as_fraction(x)
    p, q = x.numerator, x.denominator
    # numerators over the common denominator q**n * n!
    term = q**n * math.factorial(n)
    den = term
    total = term
    for k in range(1, n + 1):
        term = term * p // (q * k)
        total += term
    return Fraction(total, den)


def _geometric_tail_bound(ax: Fraction, K: int) -> Fraction | None:
    """Bound on sum_{k>K} ax**k/k!, valid when K + 2 > ax."""
    if ax == 0:
        return Fraction(0)
    if K + 2 <= ax:
        return None
    first = ax ** (K + 1) / math.factorial(K + 1)
    return first / (1 - ax / (K + 2))


def _series_terms_needed(ax: Fraction, target: Fraction, start: int = 0) -> tuple[int, Fraction]:
    """Smallest K >= start with the geometric tail bound below ``target``."""
    K = max(start, int(ax) + 1)
    # coarse skip ahead, then back off
    step = 8
    while True:
        bound = _geometric_tail_bound(ax, K)
        if bound is not None and bound < target:
            break
        K += step
    while K - 1 >= start:
        b = _geometric_tail_bound(ax, K - 1)
        if b is None or b >= target:
            break
        K -= 1
    return K, _geometric_tail_bound(ax, K)


def exp_eval(x, digits: int = DEFAULT_DIGITS) -> HighPrecision:
    """e**x with a certified relative error below 10**-(digits+5)."""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    x = as_fraction(x)
    if x == 0:
        return HighPrecision(Decimal(1), Decimal(0), digits)
    if x < 0:
        pos = exp_eval(-x, digits + 2)
        return HighPrecision(Decimal(1), Decimal(0), digits) / pos
    # e**x >= 1 here, so an absolute target is also a relative one
    target = Fraction(1, 10 ** (digits + 5))
    K, tail = _series_terms_needed(x, target)
    return HighPrecision.from_fraction(exp_partial_sum(x, K) + tail / 2, tail / 2, digits)


def exp_series_tail(x, n: int, digits: int = DEFAULT_DIGITS) -> HighPrecision:
    """sum_{k>n} x**k / k! for x >= 0, summed directly (no cancellation)."""
    x = as_fraction(x)
    if x < 0:
        raise ValueError("exp_series_tail needs x >= 0")
    if x == 0:
        return HighPrecision(Decimal(0), Decimal(0), digits)
    first = x ** (n + 1) / math.factorial(n + 1)
    target = first / Fraction(10) ** (digits + 5)
    K, bound = _series_terms_needed(x, target, start=n + 1)
    total = Fraction(0)
    term = first
    for k in range(n + 1, K + 1):
        if k > n + 1:
            term = term * x / k
        total += term
    return HighPrecision.from_fraction(total + bound / 2, bound / 2, digits)


def poisson_tail(lam, n: int, digits: int = DEFAULT_DIGITS) -> HighPrecision:
    """Pr(Poisson(lam) > n) = e**-lam * sum_{j>n} lam**j / j!."""
    lam = as_fraction(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if n < 0:
        raise ValueError("n must be non-negative")
    tail = exp_series_tail(lam, n, digits + 2)
    factor = exp_eval(-lam, digits + 2)
    out = tail * factor
    return HighPrecision(out.value, out.error_bound, digits)


# ---------------------------------------------------------------------------
# quadrature


class IntegrandTag(enum.Enum):
    EXP_TAIL = "exp_tail"  # (1-y)**n * e**(x y)
    FM_KERNEL = "fm_kernel"  # (1-y)**n * e**(alpha lam y)
    TV_KERNEL = "tv_kernel"  # (y**n + (2-y)**n) * e**(-lam y)


@dataclass(frozen=True)
class IntegrandId:
    """One of the three smooth kernels on [0, 1], with exact parameters."""

    tag: IntegrandTag
    n: int
    params: tuple[Fraction, ...]

    @classmethod
    def exp_tail(cls, n: int, x) -> IntegrandId:
        return cls(IntegrandTag.EXP_TAIL, n, (as_fraction(x),))

    @classmethod
    def fm_kernel(cls, n: int, lam, alpha) -> IntegrandId:
        return cls(IntegrandTag.FM_KERNEL, n, (as_fraction(lam), as_fraction(alpha)))

    @classmethod
    def tv_kernel(cls, n: int, lam) -> IntegrandId:
        return cls(IntegrandTag.TV_KERNEL, n, (as_fraction(lam),))

    def rate(self) -> Fraction:
        """Coefficient c of the exponential factor e**(c y)."""
        if self.tag is IntegrandTag.EXP_TAIL:
            return self.params[0]
        if self.tag is IntegrandTag.FM_KERNEL:
            return self.params[0] * self.params[1]
        return -self.params[0]

    def magnitude(self) -> float:
        """Crude upper bound on |f| over [0, 1]."""
        c = float(self.rate())
        bound = math.exp(max(c, 0.0))
        if self.tag is IntegrandTag.TV_KERNEL:
            bound *= 2.0**self.n + 1
        return bound

    def evaluator(self, ctx):
        n = self.n
        c = ctx.mpf(self.rate().numerator) / self.rate().denominator
        if self.tag is IntegrandTag.TV_KERNEL:
            return lambda y: (y**n + (2 - y) ** n) * ctx.exp(c * y)
        return lambda y: (1 - y) ** n * ctx.exp(c * y)


_contexts = threading.local()


def _context(dps: int):
    cache = getattr(_contexts, "by_dps", None)
    if cache is None:
        cache = _contexts.by_dps = {}
    ctx = cache.get(dps)
    if ctx is None:
        ctx = mpmath.MPContext()
        ctx.dps = dps
        cache[dps] = ctx
    return ctx


@lru_cache(maxsize=None)
def _gauss_legendre_rule(order: int, dps: int) -> tuple[tuple[str, str], ...]:
    """Positive nodes on [-1, 1] and their weights, as decimal strings."""
    ctx = mpmath.MPContext()
    ctx.dps = dps + 10
    eps = ctx.mpf(10) ** (-(dps + 8))

    def legendre(x):
        p0, p1 = ctx.one, x
        for k in range(2, order + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        return p1, order * (x * p1 - p0) / (x * x - 1)

    rule = []
    for i in range(1, order // 2 + 1):
        x = ctx.cos(ctx.pi * (i - ctx.mpf(1) / 4) / (order + ctx.mpf(1) / 2))
        for _ in range(100):
            p, dp = legendre(x)
            dx = p / dp
            x -= dx
            if abs(dx) < eps:
                break
        _, dp = legendre(x)
        w = 2 / ((1 - x * x) * dp * dp)
        rule.append((ctx.nstr(x, dps + 8), ctx.nstr(w, dps + 8)))
    return tuple(rule)


def _rule(order: int, ctx, dps: int):
    return [(ctx.mpf(x), ctx.mpf(w)) for x, w in _gauss_legendre_rule(order, dps)]


def _mpf_to_fraction(v) -> Fraction:
    man, exp = v.man_exp
    man, exp = int(man), int(exp)
    if man == 0:
        return Fraction(0)
    return Fraction(man) * Fraction(2) ** exp


def integrate(f: IntegrandId, tol, max_depth: int = 40) -> HighPrecision:
    """Adaptive Gauss-Legendre quadrature of ``f`` over [0, 1].

    Each panel is accepted when the order-8 and order-16 estimates agree to
    within the panel's share of ``tol`` (shares halve on bisection); the
    reported bound is the sum of those disagreements plus a rounding term.
    """
    tol = as_fraction(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    mag = f.magnitude()
    digits = max(1, -_floor_log10(tol))
    dps = digits + int(math.ceil(math.log10(mag))) + 15
    ctx = _context(dps)
    g8 = _rule(8, ctx, dps)
    g16 = _rule(16, ctx, dps)
    fn = f.evaluator(ctx)
    tol_mp = ctx.mpf(tol.numerator) / tol.denominator

    def panel(a, b):
        half = (b - a) / 2
        mid = (a + b) / 2
        s8 = ctx.zero
        for x, w in g8:
            s8 += w * (fn(mid + half * x) + fn(mid - half * x))
        s16 = ctx.zero
        for x, w in g16:
            s16 += w * (fn(mid + half * x) + fn(mid - half * x))
        return s16 * half, abs(s16 - s8) * half

    total = ctx.zero
    err_total = ctx.zero
    panels = 0
    failed = False
    stack = [(ctx.zero, ctx.one, tol_mp, 0)]
    while stack:
        a, b, t, depth = stack.pop()
        value, err = panel(a, b)
        if err <= t or depth >= max_depth:
            if err > t:
                failed = True
            total += value
            err_total += err
            panels += 1
        else:
            m = (a + b) / 2
            stack.append((m, b, t / 2, depth + 1))
            stack.append((a, m, t / 2, depth + 1))
    # every evaluation carries relative rounding ~10**-dps on values <= mag
    rounding = Fraction(panels * 200) * Fraction(math.ceil(mag)) / Fraction(10) ** (dps - 2)
    bound = _mpf_to_fraction(err_total) + rounding
    if failed:
        raise QuadratureError(f"depth limit {max_depth} reached; achieved bound {float(bound):.3e}", bound)
    return HighPrecision.from_fraction(_mpf_to_fraction(total), bound, digits)


def exp_tail_integral(x, n: int, digits: int = 30) -> HighPrecision:
    """(1/n!) * integral_0^x (x-y)**n e**y dy, by quadrature.

    Cross-checked against e**x minus its degree-n Taylor polynomial; a
    disagreement beyond the combined bounds raises :class:`CrossCheckError`.
    """
    x = as_fraction(x)
    if n < 0:
        raise ValueError("n must be non-negative")
    if x == 0:
        return HighPrecision(Decimal(0), Decimal(0), digits)
    # substitute y = x t: x**(n+1)/n! * integral_0^1 (1-t)**n e**(x t) dt
    scale = x ** (n + 1) / math.factorial(n)
    size = abs(scale) / (n + 1) * min(Fraction(1), _exp_lower(x))
    target = max(Fraction(1), size) / Fraction(10) ** (digits + 2)
    quad = integrate(IntegrandId.exp_tail(n, x), target / abs(scale))
    result = quad * scale
    result = HighPrecision(result.value, result.error_bound, digits)

    extra = max(0, -_floor_log10(size)) if size > 0 else 0
    series = exp_eval(x, digits + extra + 5) - exp_partial_sum(x, n)
    if abs(series.exact_value - result.exact_value) > series.error + result.error:
        raise CrossCheckError(
            f"quadrature {result} disagrees with series {series} for x={x}, n={n}"
        )
    return result


def _exp_lower(x: Fraction) -> Fraction:
    """A cheap rational lower bound on e**x."""
    if x >= 0:
        return Fraction(1)
    return Fraction(1, 3) ** math.ceil(-x)
