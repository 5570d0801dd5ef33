"""Exact pmfs for the classical and censored matching laws, factorial moments,
and the inversion from factorial moments back to point masses."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numerics import DEFAULT_DIGITS, HighPrecision, as_fraction, exp_eval

__all__ = [
    "FinitePmf",
    "FactorialMomentSeq",
    "SignedMassSeq",
    "MatchingParams",
    "classical_matching_pmf",
    "generalized_matching_pmf",
    "poisson_pmf_prefix",
    "falling_factorial",
    "factorial_moments",
    "matching_factorial_moment",
    "invert_factorial_moments",
    "thinning_pmf",
    "pgf_eval",
    "random_finite_pmf",
]


@dataclass(frozen=True)
class FinitePmf:
    """Exact probabilities on {0, ..., len(probs) - 1}."""

    probs: tuple[Fraction, ...]
    label: str = ""

    def __post_init__(self):
        probs = tuple(as_fraction(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if not probs:
            raise ValueError("empty pmf")
        if any(p < 0 for p in probs):
            raise ValueError(f"negative mass in {self.label or 'pmf'}")
        if sum(probs) != 1:
            raise ValueError(f"masses of {self.label or 'pmf'} sum to {sum(probs)}, not 1")

    @property
    def n(self) -> int:
        """Largest support point (trailing zeros included)."""
        return len(self.probs) - 1

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, j: int) -> Fraction:
        if 0 <= j < len(self.probs):
            return self.probs[j]
        if j >= len(self.probs):
            return Fraction(0)
        raise IndexError(j)

    def mean(self) -> Fraction:
        return sum(j * p for j, p in enumerate(self.probs))

    def variance(self) -> Fraction:
        m = factorial_moments(self, 2).moments
        return m[2] + m[1] - m[1] ** 2


@dataclass(frozen=True)
class FactorialMomentSeq:
    """E(X)_k for k = 0..K; orders above K are zero."""

    moments: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "moments", tuple(as_fraction(m) for m in self.moments))

    @property
    def K(self) -> int:
        return len(self.moments) - 1

    def __getitem__(self, k: int) -> Fraction:
        if 0 <= k < len(self.moments):
            return self.moments[k]
        if k >= len(self.moments):
            return Fraction(0)
        raise IndexError(k)


@dataclass(frozen=True)
class SignedMassSeq:
    values: tuple[Fraction, ...]
    is_pmf: bool

    def to_pmf(self, label: str = "") -> FinitePmf:
        if not self.is_pmf:
            raise ValueError("sequence is not a probability mass function")
        return FinitePmf(self.values, label)


@dataclass(frozen=True)
class MatchingParams:
    """Size ``n`` and retention probability ``lam`` of the censored matching law."""

    n: int
    lam: Fraction

    def __post_init__(self):
        lam = as_fraction(self.lam)
        object.__setattr__(self, "lam", lam)
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not 0 < lam <= 1:
            raise ValueError(f"lambda must lie in (0, 1], got {lam}")


def _params(p, lam=None) -> MatchingParams:
    if isinstance(p, MatchingParams):
        return p
    return MatchingParams(p, lam)


def classical_matching_pmf(n: int) -> FinitePmf:
    """Law of the number of fixed points of a uniform permutation of n items."""
    if n < 1:
        raise ValueError("n must be >= 1")
    probs = []
    for j in range(n + 1):
        s = sum(Fraction((-1) ** k, math.factorial(k)) for k in range(n - j + 1))
        probs.append(s / math.factorial(j))
    return FinitePmf(tuple(probs), f"classical matching n={n}")


def generalized_matching_pmf(p, lam=None, method: str = "closed") -> FinitePmf:
    """Censored matching pmf: each match is kept independently with prob. lam.

    ``method="closed"`` uses (lam**j/j!) * sum_{i<=n-j} (-lam)**i/i!;
    ``method="inclusion-exclusion"`` sums (-1)**(i-j) C(i,j) S_i with
    S_i = lam**i/i!.  Both are exact and must agree.
    """
    p = _params(p, lam)
    n, lam = p.n, p.lam
    if method == "closed":
        probs = []
        for j in range(n + 1):
            inner = sum((-lam) ** i / math.factorial(i) for i in range(n - j + 1))
            probs.append(lam**j / math.factorial(j) * inner)
    elif method == "inclusion-exclusion":
        S = [lam**i / math.factorial(i) for i in range(n + 1)]
        probs = [
            sum((-1) ** (i - j) * math.comb(i, j) * S[i] for i in range(j, n + 1))
            for j in range(n + 1)
        ]
    else:
        raise ValueError(f"unknown method {method!r}")
    return FinitePmf(tuple(probs), f"generalized matching n={n} lambda={lam}")


def thinning_pmf(p, lam=None) -> FinitePmf:
    """Binomial(m, lam) thinning of the classical matching count."""
    p = _params(p, lam)
    n, lam = p.n, p.lam
    base = classical_matching_pmf(n).probs
    probs = [
        sum(base[m] * math.comb(m, j) * lam**j * (1 - lam) ** (m - j) for m in range(j, n + 1))
        for j in range(n + 1)
    ]
    return FinitePmf(tuple(probs), f"thinned matching n={n} lambda={lam}")


def poisson_pmf_prefix(lam, n: int, digits: int = DEFAULT_DIGITS) -> list[HighPrecision]:
    """e**-lam * lam**j / j! for j = 0..n, each with relative error < 10**-digits."""
    lam = as_fraction(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    base = exp_eval(-lam, digits + 3)
    out = []
    for j in range(n + 1):
        term = base * (lam**j / math.factorial(j))
        out.append(HighPrecision(term.value, term.error_bound, digits))
    return out


def falling_factorial(x: int, k: int) -> int:
    """(x)_k = x (x-1) ... (x-k+1), with (x)_0 = 1."""
    out = 1
    for i in range(k):
        out *= x - i
    return out


def factorial_moments(p: FinitePmf, kmax: int) -> FactorialMomentSeq:
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    moments = [
        sum((falling_factorial(j, k) * q for j, q in enumerate(p.probs) if j >= k), Fraction(0))
        for k in range(kmax + 1)
    ]
    return FactorialMomentSeq(tuple(moments))


def matching_factorial_moment(p, k: int, lam=None) -> Fraction:
    """E(Z_n(lam))_k = lam**k for k <= n, else 0."""
    p = _params(p, lam)
    if k < 0:
        raise ValueError("k must be non-negative")
    return p.lam**k if k <= p.n else Fraction(0)


def invert_factorial_moments(m: FactorialMomentSeq | Sequence) -> SignedMassSeq:
    """Recover point masses from a finite factorial-moment sequence.

    values[j] = sum_{k>=j} (-1)**(k-j) C(k,j) m[k] / k!.  Sequences that are
    not the moments of any law come back with ``is_pmf=False`` rather than
    raising, so negative masses stay visible.
    """
    if not isinstance(m, FactorialMomentSeq):
        m = FactorialMomentSeq(tuple(m))
    if m.moments[0] != 1:
        raise ValueError("moments[0] must equal 1")
    K = m.K
    values = tuple(
        sum(
            Fraction((-1) ** (k - j) * math.comb(k, j), math.factorial(k)) * m[k]
            for k in range(j, K + 1)
        )
        for j in range(K + 1)
    )
    is_pmf = all(v >= 0 for v in values) and sum(values) == 1
    return SignedMassSeq(values, is_pmf)


def pgf_eval(p: FinitePmf, u) -> Fraction:
    u = as_fraction(u)
    total = Fraction(0)
    for q in reversed(p.probs):
        total = total * u + q
    return total


def random_finite_pmf(
    rng: random.Random, max_support: int = 12, max_den: int = 1000, size: int | None = None
) -> FinitePmf:
    """Random exact pmf: support size uniform on 1..max_support (or ``size``),
    masses from random rationals with denominators <= max_den, normalized."""
    if size is None:
        size = rng.randint(1, max_support)
    while True:
        raw = [Fraction(rng.randint(0, max_den), rng.randint(1, max_den)) for _ in range(size)]
        total = sum(raw)
        if total > 0:
            return FinitePmf(tuple(r / total for r in raw), "random")
