"""Named property checks across all modules, run by ``fmdist verify``."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import distances as D
from . import distributions as P
from . import numerics as N
from . import simulation as S
from .rng import SplitMix64

LAMBDA_GRID = (Fraction(1, 10), Fraction(1, 2), Fraction(1))
ALPHA_GRID = (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3))
PMF_LAMBDAS = (Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(9, 10), Fraction(1))
SEED = 20240611


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class Options:
    digits: int = N.DEFAULT_DIGITS
    workers: int = 1
    seed: int = SEED


CHECKS: dict[str, Callable[[Options], tuple[bool, str]]] = {}


def check(name: str):
    def register(fn):
        CHECKS[name] = fn
        return fn

    return register


def _fail(msg: str) -> tuple[bool, str]:
    return False, msg


# numerics -----------------------------------------------------------------


@check("exp-tail-identity")
def _exp_tail_identity(opt):
    count = 0
    for x in (Fraction(-4), Fraction(-1), Fraction(-1, 3), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(4)):
        for n in (0, 1, 2, 5, 10, 20, 40, 60):
            try:
                N.exp_tail_integral(x, n, digits=20)
            except (N.CrossCheckError, N.QuadratureError) as exc:
                return _fail(str(exc))
            count += 1
    return True, f"{count} (x, n) pairs: quadrature matches e**x minus Taylor polynomial"


@check("poisson-tail-monotone")
def _poisson_tail_monotone(opt):
    lams = [Fraction(k, 8) for k in range(1, 17)]
    grid = [[N.poisson_tail(lam, n, 30) for n in range(0, 21)] for lam in lams]
    for row in grid:
        for a, b in zip(row, row[1:]):
            if not b.certainly_lt(a):
                return _fail("not decreasing in n")
    for lo_row, hi_row in zip(grid, grid[1:]):
        for a, b in zip(lo_row, hi_row):
            if not a.certainly_lt(b):
                return _fail("not increasing in lambda")
    return True, "16 lambdas x 21 n"


@check("partial-sum-increases-to-exp")
def _partial_sum(opt):
    for x in (Fraction(1, 10), Fraction(1), Fraction(5, 2), Fraction(4)):
        # the gap at n = 60 can be ~1e-145, so evaluate e**x far past it
        e = N.exp_eval(x, 200)
        prev = None
        for n in range(0, 61):
            s = N.exp_partial_sum(x, n)
            if not (e.exact_value - s > e.error) or (prev is not None and s <= prev):
                return _fail(f"x={x}, n={n}")
            prev = s
    return True, "x in {1/10, 1, 5/2, 4}, n <= 60"


@check("exp-tail-integral-sandwich")
def _exp_tail_sandwich(opt):
    e = N.exp_eval(1, 30)
    for n in range(0, 61):
        val = N.integrate(N.IntegrandId.exp_tail(n, 1), Fraction(1, 10**20))
        lower = Fraction(1, n + 1)
        upper = (e - 1) / (n + 2) * lower + lower
        if not (val.lo > lower and val.hi < upper.lo):
            return _fail(f"n={n}")
    return True, "n = 0..60"


# distributions --------------------------------------------------------------


@check("pmf-valid")
def _pmf_valid(opt):
    for lam in PMF_LAMBDAS:
        for n in range(1, 51):
            p = P.generalized_matching_pmf(n, lam)  # FinitePmf validates sign and sum
            if sum(p.probs) != 1:
                return _fail(f"n={n}, lambda={lam}")
    return True, "n <= 50, 6 lambdas, exact"


@check("pmf-routes-agree")
def _pmf_routes(opt):
    for lam in PMF_LAMBDAS:
        for n in range(1, 26):
            closed = P.generalized_matching_pmf(n, lam).probs
            if P.thinning_pmf(n, lam).probs != closed:
                return _fail(f"thinning differs at n={n}, lambda={lam}")
            if P.generalized_matching_pmf(n, lam, method="inclusion-exclusion").probs != closed:
                return _fail(f"inclusion-exclusion differs at n={n}, lambda={lam}")
    return True, "closed form = thinning = inclusion-exclusion, n <= 25"


@check("matching-factorial-moments")
def _matching_moments(opt):
    for lam in (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10), Fraction(1)):
        for n in range(1, 26):
            m = P.factorial_moments(P.generalized_matching_pmf(n, lam), n + 5)
            for k in range(n + 6):
                if m[k] != P.matching_factorial_moment(n, k, lam):
                    return _fail(f"n={n}, lambda={lam}, k={k}")
    return True, "E(Z_n)_k = lam**k 1{k<=n}, n <= 25, k <= n+5"


@check("moment-inversion-roundtrip")
def _roundtrip(opt):
    rng = random.Random(opt.seed)
    for _ in range(500):
        p = P.random_finite_pmf(rng, max_support=30)
        back = P.invert_factorial_moments(P.factorial_moments(p, p.n))
        if not back.is_pmf or back.values != p.probs:
            return _fail(f"round trip failed for support {len(p)}")
    bad = P.invert_factorial_moments([1, 2, 4])
    if bad.values[1] != -2 or bad.is_pmf:
        return _fail("lambda=2 inversion did not expose a negative mass")
    return True, "500 random pmfs; lambda=2 gives mass -2 at j=1"


@check("classical-gap")
def _gap(opt):
    for n in range(2, 41):
        if P.classical_matching_pmf(n)[n - 1] != 0:
            return _fail(f"n={n}")
    return True, "P(Z_n = n-1) = 0 for n = 2..40"


@check("mean-equals-variance")
def _mean_var(opt):
    for lam in PMF_LAMBDAS:
        for n in range(2, 31):
            p = P.generalized_matching_pmf(n, lam)
            if p.mean() != lam or p.variance() != lam:
                return _fail(f"n={n}, lambda={lam}")
    return True, "n = 2..30"


@check("poisson-factorial-moments")
def _poisson_moments(opt):
    J = 80
    for lam in (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10), Fraction(1), Fraction(2)):
        masses = P.poisson_pmf_prefix(lam, J, 40)
        for k in range(0, 8):
            total = N.HighPrecision.exact(0, 40)
            for j in range(k, J + 1):
                total = total + masses[j] * P.falling_factorial(j, k)
            # omitted mass: lam**k * sum_{i > J-k} lam**i/i! * e**-lam
            tail = N.exp_series_tail(lam, J - k, 40) * lam**k
            if abs(total.exact_value - lam**k) > total.error + tail.hi:
                return _fail(f"lambda={lam}, k={k}")
    return True, "sum_j (j)_k Poisson(j) = lam**k to 40 digits, k < 8"


# distances ------------------------------------------------------------------


def _random_pairs(seed: int, count: int = 1000):
    rng = random.Random(seed)
    for _ in range(count):
        yield P.random_finite_pmf(rng), P.random_finite_pmf(rng)


@check("alpha-monotonicity")
def _alpha_mono(opt):
    for a, b in _random_pairs(opt.seed):
        ma, mb = P.factorial_moments(a, a.n), P.factorial_moments(b, b.n)
        vals = [D.d_alpha_exact(ma, mb, al) for al in ALPHA_GRID]
        if any(x > y for x, y in zip(vals, vals[1:])):
            return _fail("d_alpha decreased in alpha")
    return True, "1000 random pairs, alpha in {1/2, 1, 2, 3}"


@check("tv-dominated-by-d2")
def _tv_d2(opt):
    for a, b in _random_pairs(opt.seed):
        tv = D.tv_exact(a, b)
        d2 = D.d_alpha_exact(P.factorial_moments(a, a.n), P.factorial_moments(b, b.n), 2)
        if tv > d2:
            return _fail(f"tv={tv} > d2={d2}")
    return True, "1000 random pairs"


def _grid():
    for lam in LAMBDA_GRID:
        for n in range(1, 31):
            yield n, lam


@check("fm-sandwich")
def _fm_sandwich(opt):
    for n, lam in _grid():
        for alpha in ALPHA_GRID:
            r = D.d_alpha_matching(n, alpha, lam, digits=opt.digits)
            if not r.sandwich_holds():
                return _fail(f"n={n}, lambda={lam}, alpha={alpha}")
    return True, "n = 1..30, 3 lambdas, 4 alphas, margin 10x error"


@check("tv-sandwich")
def _tv_sandwich(opt):
    for n, lam in _grid():
        if not D.tv_matching(n, lam, digits=opt.digits).sandwich_holds():
            return _fail(f"n={n}, lambda={lam}")
    return True, "n = 1..30, 3 lambdas, margin 10x error"


@check("series-vs-integral")
def _series_integral(opt):
    for n, lam in _grid():
        if not D.tv_matching(n, lam, digits=opt.digits).routes_agree():
            return _fail(f"tv n={n}, lambda={lam}")
        for alpha in ALPHA_GRID:
            if not D.d_alpha_matching(n, alpha, lam, digits=opt.digits).routes_agree():
                return _fail(f"fm n={n}, lambda={lam}, alpha={alpha}")
    return True, "quadrature tol 1e-12"


@check("closed-form-vs-definition")
def _closed_vs_def(opt):
    for n in range(1, 21):
        for lam in LAMBDA_GRID:
            moments = P.FactorialMomentSeq(tuple(P.matching_factorial_moment(n, k, lam) for k in range(n + 1)))
            for alpha in ALPHA_GRID:
                generic = D.d_alpha_generic(moments, D.PoissonMoments(lam), alpha, opt.digits)
                closed = D.d_alpha_matching(n, alpha, lam, digits=opt.digits).exact
                if abs(generic.exact_value - closed.exact_value) > generic.error + closed.error:
                    return _fail(f"n={n}, lambda={lam}, alpha={alpha}")
    return True, "n <= 20"


@check("asymptotic-ratio-containment")
def _asym(opt):
    e = {al: N.exp_eval(al, 40) for al in ALPHA_GRID}
    for n in range(1, 31):
        r = D.tv_matching(n, 1, digits=opt.digits).ratio_to_asymptotic
        lower = 1 - Fraction(2, n + 2) * (1 - Fraction(1, 2 ** (n + 1)))
        if not (r.lo > lower and r.hi < 1):
            return _fail(f"tv n={n}")
        for al in ALPHA_GRID:
            r = D.d_alpha_matching(n, al, 1, digits=opt.digits).ratio_to_asymptotic
            base = 1 + al / (n + 2)
            c = al**2 / ((n + 2) * (n + 3))
            if not (r.lo > base + c and r.hi < (e[al] * c + base).lo):
                return _fail(f"fm n={n}, alpha={al}")
    return True, "lambda = 1, n = 1..30"


@check("fm-minimality")
def _fm_min(opt):
    rng = random.Random(opt.seed + 1)
    lams = (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10), Fraction(1))
    cache = {}
    for _ in range(500):
        n = rng.randint(3, 8)
        lam = rng.choice(lams)
        alpha = rng.choice(ALPHA_GRID)
        x = P.random_finite_pmf(rng, size=n + 1)
        key = (n, lam, alpha)
        if key not in cache:
            cache[key] = D.d_alpha_matching(n, alpha, lam, digits=opt.digits, quad_tol=Fraction(1, 10**6)).exact
        best = cache[key]
        d = D.d_alpha_generic(P.factorial_moments(x, n), D.PoissonMoments(lam), alpha, opt.digits)
        if x.probs == P.generalized_matching_pmf(n, lam).probs:
            ok = abs(d.exact_value - best.exact_value) <= d.error + best.error
        else:
            ok = best.certainly_lt(d)
        if not ok:
            return _fail(f"n={n}, lambda={lam}, alpha={alpha}")
    # the matching law itself attains the minimum
    for n in range(3, 9):
        for lam in lams:
            m = P.factorial_moments(P.generalized_matching_pmf(n, lam), n)
            d = D.d_alpha_generic(m, D.PoissonMoments(lam), 1, opt.digits)
            best = D.d_alpha_matching(n, 1, lam, digits=opt.digits, quad_tol=Fraction(1, 10**6)).exact
            if abs(d.exact_value - best.exact_value) > d.error + best.error:
                return _fail(f"matching law misses the minimum at n={n}, lambda={lam}")
    return True, "500 random X in D_n, n = 3..8"


def dominating_pmf(n: int, lam, digits: int = 40) -> P.FinitePmf:
    """A pmf on {0..n} with every mass >= the Poisson(lam) mass."""
    masses = [Fraction(m.hi) for m in P.poisson_pmf_prefix(lam, n, digits)]
    rest = 1 - sum(masses)
    if rest < 0:
        raise ValueError("Poisson prefix bounds too loose")
    masses[0] += rest
    return P.FinitePmf(tuple(masses), f"dominating n={n}")


@check("tv-minimum-attained")
def _tv_min(opt):
    for n in range(0, 13):
        for lam in (Fraction(1, 10), Fraction(1, 2), Fraction(1)):
            target = D.min_tv_over_support(n, lam, 30)
            tv = D.tv_generic(dominating_pmf(n, lam), D.PoissonMoments(lam), 40)
            if abs(tv.exact_value - target.exact_value) > tv.error + target.error + Fraction(1, 10**38):
                return _fail(f"n={n}, lambda={lam}")
    return True, "n = 0..12"


@check("tv-fm-ratio-growth")
def _ratio(opt):
    prev = None
    for n in range(10, 26):
        r = D.tv_fm_ratio(n, 1, 1, opt.digits)
        if r.lo < Fraction(2**n, 2) or (prev is not None and not prev.certainly_lt(r)):
            return _fail(f"alpha=1 ratio at n={n}")
        prev = r
    for n in range(5, 21):
        if not D.tv_fm_ratio(n, 2, 1, opt.digits).certainly_lt(1):
            return _fail(f"alpha=2 ratio >= 1 at n={n}")
    return True, "alpha=1 ratio >= 2**n/2 and increasing (n=10..25); alpha=2 ratio < 1 (n=5..20)"


# simulation -----------------------------------------------------------------


@check("enumeration-agrees")
def _enum(opt):
    for n in range(1, 9):
        for lam in (Fraction(1, 10), Fraction(1, 3), Fraction(1, 2), Fraction(1)):
            if S.enumerate_exact(n, lam, opt.workers).probs != P.generalized_matching_pmf(n, lam).probs:
                return _fail(f"n={n}, lambda={lam}")
    return True, "n <= 8, 4 lambdas, exact"


@check("derangements")
def _derangements(opt):
    d = [1, 0]
    for n in range(2, 9):
        d.append((n - 1) * (d[-1] + d[-2]))
    for n in range(1, 9):
        tally = S.fixed_point_tally(n)
        pmf = S.enumerate_exact(n, 1)
        if tally[0] != d[n] or (n >= 2 and pmf[n - 1] != 0):
            return _fail(f"n={n}")
    return True, "D_n recurrence, n <= 8"


@check("monte-carlo-concordance")
def _mc(opt):
    cfg = S.SimConfig(5, Fraction(1, 2), 10**6, seed=opt.seed, workers=max(opt.workers, 1))
    emp, stats = S.run_monte_carlo(cfg)
    if not stats.passed or stats.max_abs_dev >= 0.002:
        return _fail(f"max dev {stats.max_abs_dev:.2e}")
    emp3, stats3 = S.run_monte_carlo(S.SimConfig(3, 1, 10**5, seed=opt.seed))
    if emp3.counts[2] != 0 or not stats3.passed:
        return _fail("mass observed at n-1 for lambda=1")
    return True, f"n=5, lambda=1/2, 1e6 samples, max dev {stats.max_abs_dev:.1e}"


@check("monte-carlo-reproducible")
def _mc_repro(opt):
    cfg = S.SimConfig(3, 1, 1000, seed=7, workers=4)
    first = S.run_monte_carlo(cfg)
    if S.run_monte_carlo(cfg) != first:
        return _fail("reruns differ")
    return True, "identical counts on rerun"


@check("shuffle-uniform")
def _shuffle(opt):
    rng = SplitMix64(opt.seed)
    counts: dict[tuple[int, ...], int] = {}
    samples = 10**6
    for _ in range(samples):
        perm = tuple(S.sample_permutation(4, rng))
        counts[perm] = counts.get(perm, 0) + 1
    p = 1 / 24
    se = math.sqrt(p * (1 - p) / samples)
    worst = max(abs(c / samples - p) / se for c in counts.values())
    if len(counts) != 24 or worst > 5:
        return _fail(f"worst z {worst:.2f}")
    return True, f"24 permutations, worst |z| = {worst:.2f}"


def run(only: list[str] | None = None, options: Options | None = None) -> list[CheckResult]:
    options = options or Options()
    names = list(CHECKS) if not only else only
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(unknown)}")
    results = []
    for name in names:
        try:
            ok, detail = CHECKS[name](options)
        except Exception as exc:  # a crash is a failed property, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, ok, detail))
    return results
