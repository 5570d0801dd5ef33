"""Monte Carlo and exhaustive realizations of the censored matching count.

A sample draws a uniform permutation by Fisher-Yates, finds its fixed points,
and keeps each one independently with probability lam.  The enumeration
oracle tallies fixed points over all n! permutations and then thins them;
it never touches the closed-form pmf.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .distributions import FinitePmf, MatchingParams, generalized_matching_pmf
from .numerics import as_fraction
from .rng import GOLDEN_GAMMA, MASK64, SplitMix64, stream_seeds

__all__ = [
    "SimConfig",
    "EmpiricalPmf",
    "ComparisonStats",
    "ENUMERATION_LIMIT",
    "sample_permutation",
    "sample_censored_matches",
    "run_monte_carlo",
    "compare_to_pmf",
    "fixed_point_tally",
    "enumerate_exact",
]

ENUMERATION_LIMIT = 10
DEFAULT_Z_THRESHOLD = 5.0


@dataclass(frozen=True)
class SimConfig:
    n: int
    lam: Fraction
    samples: int
    seed: int = 0
    workers: int = 1
    z_threshold: float = DEFAULT_Z_THRESHOLD

    def __post_init__(self):
        MatchingParams(self.n, self.lam)  # validates n and lam
        object.__setattr__(self, "lam", as_fraction(self.lam))
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class EmpiricalPmf:
    counts: tuple[int, ...]
    total: int

    def __post_init__(self):
        if sum(self.counts) != self.total:
            raise ValueError("counts do not add up to total")

    def frequencies(self) -> list[float]:
        return [c / self.total for c in self.counts]


@dataclass(frozen=True)
class ComparisonStats:
    max_abs_dev: float
    per_bin_z: tuple[float | None, ...]  # None where the exact mass is zero
    passed: bool
    z_threshold: float = DEFAULT_Z_THRESHOLD


def sample_permutation(n: int, rng: SplitMix64) -> list[int]:
    """Uniform permutation of 0..n-1 (Fisher-Yates)."""
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def sample_censored_matches(n: int, lam, rng: SplitMix64) -> int:
    lam = as_fraction(lam)
    perm = sample_permutation(n, rng)
    kept = 0
    for i, v in enumerate(perm):
        if v == i and rng.bernoulli(lam):
            kept += 1
    return kept


def _tally_stream(args) -> list[int]:
    """Counts of the censored match number over one worker stream.

    Same draws as sample_censored_matches, with the generator inlined.
    """
    n, num, den, samples, seed = args
    counts = [0] * (n + 1)
    state = seed & MASK64
    threshold = num << 64
    for _ in range(samples):
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            bound = i + 1
            while True:
                state = (state + GOLDEN_GAMMA) & MASK64
                z = ((state ^ (state >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
                z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
                z ^= z >> 31
                m = z * bound
                low = m & MASK64
                if low >= bound or low >= ((1 << 64) - bound) % bound:
                    break
            j = m >> 64
            perm[i], perm[j] = perm[j], perm[i]
        kept = 0
        for i in range(n):
            if perm[i] == i:
                state = (state + GOLDEN_GAMMA) & MASK64
                z = ((state ^ (state >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
                z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
                z ^= z >> 31
                if z * den < threshold:
                    kept += 1
        counts[kept] += 1
    return counts


def _split(samples: int, workers: int) -> list[int]:
    base, extra = divmod(samples, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def _run_parallel(fn, tasks, workers: int):
    if workers > 1 and len(tasks) > 1 and (os.cpu_count() or 1) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def compare_to_pmf(emp: EmpiricalPmf, exact: FinitePmf, z_threshold: float = DEFAULT_Z_THRESHOLD) -> ComparisonStats:
    total = emp.total
    zs: list[float | None] = []
    ok = True
    max_dev = 0.0
    for j, count in enumerate(emp.counts):
        p = float(exact[j])
        freq = count / total
        max_dev = max(max_dev, abs(freq - p))
        if exact[j] == 0 or exact[j] == 1:
            # degenerate bins must match exactly
            zs.append(None)
            if (exact[j] == 0 and count != 0) or (exact[j] == 1 and count != total):
                ok = False
            continue
        z = (freq - p) / math.sqrt(p * (1 - p) / total)
        zs.append(z)
        if abs(z) > z_threshold:
            ok = False
    return ComparisonStats(max_dev, tuple(zs), ok, z_threshold)


def run_monte_carlo(cfg: SimConfig) -> tuple[EmpiricalPmf, ComparisonStats]:
    """Simulate, merge worker tallies in stream order, compare to the exact pmf."""
    seeds = stream_seeds(cfg.seed, cfg.workers)
    tasks = [
        (cfg.n, cfg.lam.numerator, cfg.lam.denominator, size, s)
        for size, s in zip(_split(cfg.samples, cfg.workers), seeds)
    ]
    counts = [0] * (cfg.n + 1)
    for part in _run_parallel(_tally_stream, tasks, cfg.workers):
        counts = [a + b for a, b in zip(counts, part)]
    emp = EmpiricalPmf(tuple(counts), cfg.samples)
    exact = generalized_matching_pmf(MatchingParams(cfg.n, cfg.lam))
    return emp, compare_to_pmf(emp, exact, cfg.z_threshold)


def _tally_block(args) -> list[int]:
    """Fixed-point counts over permutations starting with ``first``, visited
    in lexicographic order by the successor rule."""
    n, first = args
    counts = [0] * (n + 1)
    perm = [first] + [v for v in range(n) if v != first]
    while True:
        fixed = 0
        for i in range(n):
            if perm[i] == i:
                fixed += 1
        counts[fixed] += 1
        # successor of perm[1:]
        i = n - 2
        while i >= 1 and perm[i] >= perm[i + 1]:
            i -= 1
        if i < 1:
            return counts
        j = n - 1
        while perm[j] <= perm[i]:
            j -= 1
        perm[i], perm[j] = perm[j], perm[i]
        perm[i + 1 :] = reversed(perm[i + 1 :])


def fixed_point_tally(n: int, workers: int = 1) -> list[int]:
    """Number of permutations of n items with exactly m fixed points, m = 0..n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to n <= {ENUMERATION_LIMIT} (got {n})")
    counts = [0] * (n + 1)
    for part in _run_parallel(_tally_block, [(n, f) for f in range(n)], workers):
        counts = [a + b for a, b in zip(counts, part)]
    return counts


def enumerate_exact(n: int, lam, workers: int = 1) -> FinitePmf:
    """Censored matching pmf by brute force over all n! permutations."""
    lam = as_fraction(lam)
    MatchingParams(n, lam)
    tally = fixed_point_tally(n, workers)
    total = math.factorial(n)
    probs = [
        sum(
            Fraction(tally[m], total) * math.comb(m, j) * lam**j * (1 - lam) ** (m - j)
            for m in range(j, n + 1)
        )
        for j in range(n + 1)
    ]
    return FinitePmf(tuple(probs), f"enumerated n={n} lambda={lam}")
