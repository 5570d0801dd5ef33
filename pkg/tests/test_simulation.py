import math
from collections import Counter
from fractions import Fraction as F

import pytest

from fmdist.distributions import classical_matching_pmf, generalized_matching_pmf
from fmdist.rng import SplitMix64, stream_seeds
from fmdist.simulation import (
    EmpiricalPmf,
    SimConfig,
    _tally_stream,
    compare_to_pmf,
    enumerate_exact,
    fixed_point_tally,
    run_monte_carlo,
    sample_censored_matches,
    sample_permutation,
)

SPLITMIX_1234567 = [
    6457827717110365317,
    3203168211198807973,
    9817491932198370423,
    4593380528125082431,
    16408922859458223821,
]


def test_splitmix_reference_outputs():
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == SPLITMIX_1234567


def test_stream_seeds_are_parent_outputs():
    assert stream_seeds(1234567, 3) == SPLITMIX_1234567[:3]


def test_below_rejects_nonpositive_bound():
    with pytest.raises(ValueError):
        SplitMix64(1).below(0)


def test_bernoulli_extremes():
    rng = SplitMix64(3)
    assert not any(rng.bernoulli(F(0)) for _ in range(100))
    assert all(rng.bernoulli(F(1)) for _ in range(100))


def test_golden_draws():
    rng = SplitMix64(42)
    assert sample_permutation(5, rng) == [1, 2, 4, 0, 3]
    assert [rng.below(10) for _ in range(8)] == [0, 8, 2, 8, 3, 6, 2, 4]
    rng = SplitMix64(42)
    draws = [sample_censored_matches(5, F(1, 2), rng) for _ in range(20)]
    assert draws == [0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 0, 2, 0, 1, 2, 0, 0, 0, 0, 0]


def test_inlined_stream_matches_reference_sampler():
    rng = SplitMix64(99)
    expected = Counter(sample_censored_matches(6, F(2, 3), rng) for _ in range(2000))
    counts = _tally_stream((6, 2, 3, 2000, 99))
    assert counts == [expected[j] for j in range(7)]


def test_golden_monte_carlo_counts():
    emp, stats = run_monte_carlo(SimConfig(5, F(1, 2), 10000, seed=42, workers=3))
    assert emp.counts == (5993, 3128, 730, 133, 14, 2)
    assert stats.passed


def test_runs_are_reproducible():
    cfg = SimConfig(6, F(1, 3), 5000, seed=7, workers=2)
    assert run_monte_carlo(cfg) == run_monte_carlo(cfg)


def test_zero_bin_for_classical_case():
    emp, stats = run_monte_carlo(SimConfig(5, 1, 20000, seed=1))
    assert emp.counts[4] == 0
    assert stats.per_bin_z[4] is None
    assert stats.passed


def test_degenerate_bin_with_hits_fails():
    exact = classical_matching_pmf(3)
    stats = compare_to_pmf(EmpiricalPmf((1, 1, 1, 1), 4), exact)
    assert not stats.passed


def test_comparison_flags_wrong_law():
    emp, _ = run_monte_carlo(SimConfig(4, F(1, 2), 20000, seed=3))
    stats = compare_to_pmf(emp, generalized_matching_pmf(4, 1))
    assert not stats.passed


@pytest.mark.parametrize(
    "kwargs",
    [dict(samples=0), dict(workers=0), dict(seed=-1), dict(lam=F(3, 2)), dict(n=0)],
)
def test_sim_config_validation(kwargs):
    base = dict(n=4, lam=F(1, 2), samples=10)
    base.update(kwargs)
    with pytest.raises(ValueError):
        SimConfig(**base)


def test_empirical_pmf_validation():
    with pytest.raises(ValueError):
        EmpiricalPmf((1, 2), 4)


@pytest.mark.parametrize("n", range(1, 9))
def test_derangement_counts(n):
    tally = fixed_point_tally(n)
    assert sum(tally) == math.factorial(n)
    # subfactorial by its recurrence
    d = [1, 0]
    for k in range(2, n + 1):
        d.append((k - 1) * (d[-1] + d[-2]))
    assert tally[0] == d[n]
    assert tally == [math.comb(n, m) * d[n - m] for m in range(n + 1)]


def test_parallel_enumeration_matches_serial():
    assert fixed_point_tally(7, workers=3) == fixed_point_tally(7, workers=1)


@pytest.mark.parametrize("lam", [F(1, 10), F(1, 2), F(1)])
def test_enumeration_agrees_with_closed_form(lam):
    for n in range(1, 8):
        assert enumerate_exact(n, lam).probs == generalized_matching_pmf(n, lam).probs


def test_enumeration_limit():
    with pytest.raises(ValueError):
        enumerate_exact(11, 1)


def test_shuffle_is_uniform_for_small_n():
    rng = SplitMix64(2024)
    draws = 24000
    counts = Counter(tuple(sample_permutation(4, rng)) for _ in range(draws))
    assert len(counts) == 24
    # chi-square with 23 degrees of freedom; 0.1% critical value is about 49.7
    expected = draws / 24
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 49.7


@pytest.mark.slow
def test_million_sample_concordance():
    emp, stats = run_monte_carlo(SimConfig(5, F(1, 2), 10**6, seed=42, workers=4))
    assert stats.passed
    assert stats.max_abs_dev < 0.002
