import math
import random
from fractions import Fraction

import numpy as np
import pytest

from cachetrie import CacheTrie
from cachetrie import analysis as A


def exact_p(d, n):
    """p(d, n) in exact rational arithmetic."""
    a = (1 - Fraction(1, 16 ** (d + 1))) ** n
    b = (1 - Fraction(1, 16 ** d)) ** n if d else Fraction(0)
    return float(a - b)


@pytest.mark.parametrize("n", [1, 2, 16, 300])
def test_depth_probability_matches_rational_arithmetic(n):
    for d in range(6):
        assert A.depth_probability(d, n) == pytest.approx(exact_p(d, n), rel=1e-12, abs=1e-300)


def monte_carlo_depths(n_other, trials, seed):
    """Depth of one key among ``n_other`` others: the longest shared chunk prefix."""
    rng = np.random.default_rng(seed)
    me = rng.integers(0, 2**63, size=trials, dtype=np.int64)
    others = rng.integers(0, 2**63, size=(trials, n_other), dtype=np.int64)
    diff = np.bitwise_xor(others, me[:, None])
    depth = np.zeros((trials, n_other), dtype=np.int64)
    alive = np.ones_like(diff, dtype=bool)
    for _ in range(15):
        alive &= (diff & 15) == 0
        depth += alive
        diff >>= 4
    return depth.max(axis=1)


def test_depth_probability_against_simulation():
    n = 16
    trials = 200_000
    depths = monte_carlo_depths(n, trials, seed=3)
    for d in range(4):
        p = A.depth_probability(d, n)
        freq = np.mean(depths == d)
        sigma = math.sqrt(p * (1 - p) / trials)
        assert abs(freq - p) < 5 * sigma + 1e-9


def test_extremes():
    # one other key: depth d with probability 15/16 * 16**-d
    for d in range(5):
        assert A.depth_probability(d, 1) == pytest.approx(15 / 16 * 16.0 ** -d)
    # huge n: all mass has left the shallow levels
    assert A.depth_probability(0, 10**9) == 0.0
    assert A.depth_probability(40, 10**6) >= 0.0


def test_input_validation():
    with pytest.raises(ValueError):
        A.depth_probability(0, 0)
    with pytest.raises(ValueError):
        A.depth_probability(-1, 5)
    with pytest.raises(ValueError):
        A.n_max(0)
    with pytest.raises(ValueError):
        A.mu(0.5)


@pytest.mark.parametrize("n", [1, 10, 1e3, 1e6, 1e9])
def test_normalization(n):
    assert A.normalization_error(n) < 1e-9


def test_normalization_matches_closed_form():
    # sum_{d<=D} p(d, n) telescopes to (1 - 16**-(D+1))**n
    n, D = 1000, 4
    total = sum(A.depth_probability(d, n) for d in range(D + 1))
    assert total == pytest.approx((1 - 16.0 ** -(D + 1)) ** n, rel=1e-12)


def test_expected_depth_single_other_key():
    # P(depth >= j) = 16**-j, so E = 1/15
    assert A.expected_depth(1) == pytest.approx(1 / 15, rel=1e-12)


@pytest.mark.parametrize("n", [3, 100, 5000, 1e6])
def test_expected_depth_equals_mean_of_distribution(n):
    limit = math.ceil(A.log16(n)) + 12
    mean = math.fsum(d * A.depth_probability(d, n) for d in range(limit))
    assert A.expected_depth(n) == pytest.approx(mean, rel=1e-9)


def test_expected_depth_sum_split():
    n = 16**3
    head = math.fsum(-math.expm1(n * math.log1p(-(16.0 ** -j))) for j in range(1, 4))
    assert A.expected_depth(n) == pytest.approx(head + A.root_sum(n), rel=1e-12)


def test_exponential_sum_against_direct_evaluation():
    for t in (1, 2, 3):
        direct = sum((1 - Fraction(1, 16**j)) ** (16**t) for j in range(1, t + 1))
        assert A.exponential_sum(t) == pytest.approx(float(direct), rel=1e-12)


def test_mu_values_and_argmax():
    expected = {1e3: (0.96489, 2), 1e4: (0.90350, 3), 1e5: (0.90904, 3), 1e6: (0.94214, 4), 1e7: (0.96336, 5)}
    for n, (value, d) in expected.items():
        got, arg = A.mu(n)
        assert got == pytest.approx(value, abs=1e-5)
        assert arg == d
        assert A.log16(n) - 2 <= arg <= A.log16(n)


def test_n_max_is_the_peak_of_eta():
    for d in (1, 2, 3, 5):
        peak = A.n_max(d)
        eta = A.pair_probability(d, peak)
        assert eta >= A.pair_probability(d, peak * 0.9)
        assert eta >= A.pair_probability(d, peak * 1.1)


def test_n_max_growth():
    values = [A.n_max(d) for d in range(1, 10)]
    ratios = [b / a for a, b in zip(values, values[1:])]
    assert values[0] == pytest.approx(86.74, abs=0.01)
    # consecutive peaks sit a factor of 16 apart, approached from above
    assert all(16 < r2 < r1 for r1, r2 in zip(ratios, ratios[1:]))
    assert ratios[-1] == pytest.approx(16, rel=1e-4)


def test_mu_bounds_constants():
    assert A.mu_upper_bound() == pytest.approx(0.9746667188693483, rel=1e-14)
    x0 = A.mu_lower_crossing()
    assert x0 == pytest.approx(34.31498117103207, rel=1e-10)
    assert A.mu_lower_bound() == pytest.approx(0.8745525496927778, rel=1e-12)


def test_mu_stays_between_limits_over_a_decade_range():
    for n in np.logspace(3, 8, 60):
        value, _ = A.mu(n)
        assert A.mu_lower_bound() - 1e-4 < value < 0.9754


def test_empirical_histogram_and_tv():
    t = CacheTrie(cached=False)
    for k in range(20_000):
        t.insert(k, k)
    h = A.empirical_histogram(t)
    assert h.total == 20_000
    assert A.compare_distributions(h, 20_000) < 0.02
    assert h.most_populated_pair() == A.mu(20_000)[1]
    with pytest.raises(ValueError):
        A.compare_distributions(h, 19_999)


def test_tv_detects_skew():
    h = A.DepthHistogram({0: 100}, 100)
    assert A.compare_distributions(h, 100) > 0.9
    with pytest.raises(ValueError):
        A.DepthHistogram({0: 3}, 4)


def test_depth_table_and_summary():
    rows = A.depth_table(1000, 5)
    assert [r[0] for r in rows] == list(range(6))
    assert rows[2][2] == pytest.approx(rows[2][1] + rows[3][1])
    s = A.summary(1000)
    assert s["argmax_depth"] == 2 and s["mu"] == pytest.approx(0.96489, abs=1e-5)


def test_random_seeded_histogram_reproducible():
    def build(seed):
        r = random.Random(seed)
        t = CacheTrie(cached=False)
        for k in r.sample(range(1 << 40), 5000):
            t.insert(k, 0)
        return A.empirical_histogram(t).counts

    assert build(1) == build(1)
