"""Key-depth distribution of a 16-way hash trie under a uniform hash.

A key sits at depth ``d`` when its hash shares a ``d``-chunk prefix with
some other key but no ``(d+1)``-chunk prefix.  With ``n`` other keys::

    p(d, n)  = (1 - 16**-(d+1))**n - (1 - 16**-d)**n
    eta(d, n) = p(d, n) + p(d+1, n)           # mass on the depth pair (d, d+1)
    mu(n)     = max_d eta(d, n)
    E[d](n)   = sum_{j>=1} 1 - (1 - 16**-j)**n

Powers ``(1 - x)**n`` are evaluated as ``exp(n * log1p(-x))`` so that tiny
``x`` and huge ``n`` keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from cachetrie.invariants import iter_leaves
from cachetrie.nodes import LNode

INV_E_MINUS_1 = 1.0 / (math.e - 1.0)


def _check_n(n) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")


def _log_survival(d: int) -> float:
    """log(1 - 16**-d); -inf at d = 0."""
    if d == 0:
        return -math.inf
    return math.log1p(-(16.0 ** -d))


def log16(n: float) -> float:
    return math.log(n) / math.log(16.0)


def depth_probability(d: int, n: float) -> float:
    """Probability that a key occupies depth ``d`` when ``n`` other keys exist."""
    _check_n(n)
    if d < 0:
        raise ValueError(f"depth must be >= 0, got {d}")
    upper = _log_survival(d + 1)
    if d == 0:
        return math.exp(n * upper)
    lower = _log_survival(d)
    # a - b = a * (1 - b/a); b/a <= 1 so nothing overflows
    return math.exp(n * upper) * -math.expm1(n * (lower - upper))


def pair_probability(d: int, n: float) -> float:
    """eta(d, n): probability of occupying depth ``d`` or ``d + 1``."""
    return depth_probability(d, n) + depth_probability(d + 1, n)


def depth_search_limit(n: float) -> int:
    return math.ceil(log16(n)) + 4


def mu(n: float) -> tuple[float, int]:
    """Mass of the most populated depth pair and the pair's first depth."""
    _check_n(n)
    best_d = 0
    best = -1.0
    for d in range(depth_search_limit(n) + 1):
        value = pair_probability(d, n)
        if value > best:
            best, best_d = value, d
    return best, best_d


def expected_depth(n: float, tail: float = 1e-15) -> float:
    _check_n(n)
    total = 0.0
    j = 1
    while True:
        term = -math.expm1(n * _log_survival(j))
        total += term
        # terms shrink at least 16x once n * 16**-j < 1
        if term < tail and n * 16.0 ** -j < 1.0:
            return total
        j += 1


def expected_depth_bounds(n: float) -> tuple[float, float]:
    """``(log16 n - 1/(e-1), ceil(log16 n) + 1/(e-1))``."""
    return log16(n) - INV_E_MINUS_1, math.ceil(log16(n)) + INV_E_MINUS_1


def n_max(d: int) -> float:
    """Key count at which eta(d, .) peaks (real-valued)."""
    if d < 1:
        raise ValueError("n_max is defined for d >= 1")
    wide = math.log1p(-(16.0 ** (-d - 2)))
    narrow = math.log1p(-(16.0 ** -d))
    return math.log(narrow / wide) / (wide - narrow)


def mu_upper_bound() -> float:
    return 2.0 ** (-8.0 / 255.0) - 2.0 ** (-2048.0 / 255.0)


def mu_lower_crossing() -> float:
    """x0 > 0 where adjacent pair curves cross in the limit of deep tries.

    Solves exp(-x/16**3) - exp(-x/16) = exp(-x/16**2) - exp(-x).
    """
    def gap(x: float) -> float:
        return (math.exp(-x / 4096.0) - math.exp(-x / 16.0)) - (math.exp(-x / 256.0) - math.exp(-x))
    return brentq(gap, 1.0, 1000.0, xtol=1e-12)


def mu_lower_bound() -> float:
    x0 = mu_lower_crossing()
    return math.exp(-x0 / 256.0) - math.exp(-x0)


def exponential_sum(t: int) -> float:
    """S1(t) = sum_{j=1..t} (1 - 16**-j) ** (16**t)."""
    n = 16.0 ** t
    return sum(math.exp(n * _log_survival(j)) for j in range(1, t + 1))


def root_sum(n: float, tail: float = 1e-15) -> float:
    """Tail sum_{j > ceil(log16 n)} 1 - (1 - 16**-j)**n of the expected depth."""
    _check_n(n)
    total = 0.0
    j = math.ceil(log16(n)) + 1
    while True:
        term = -math.expm1(n * _log_survival(j))
        total += term
        if term < tail:
            return total
        j += 1


def normalization_error(n: float, max_depth: int | None = None) -> float:
    """|1 - sum_{d <= max_depth} p(d, n)|, default depth ceil(log16 n) + 8."""
    if max_depth is None:
        max_depth = math.ceil(log16(n)) + 8
    return abs(1.0 - math.fsum(depth_probability(d, n) for d in range(max_depth + 1)))


def depth_table(n: float, max_depth: int) -> list[tuple[int, float, float]]:
    return [(d, depth_probability(d, n), pair_probability(d, n)) for d in range(max_depth + 1)]


@dataclass
class DepthHistogram:
    counts: dict[int, int] = field(default_factory=dict)
    total: int = 0

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.total:
            raise ValueError("histogram counts do not sum to total")

    def frequency(self, depth: int) -> float:
        return self.counts.get(depth, 0) / self.total if self.total else 0.0

    def most_populated_pair(self) -> int:
        """Depth ``d`` maximising count(d) + count(d + 1); shallowest on ties."""
        depths = sorted(set(self.counts) | {d - 1 for d in self.counts if d > 0})
        return max(depths, key=lambda d: (self.counts.get(d, 0) + self.counts.get(d + 1, 0), -d))


def empirical_histogram(trie) -> DepthHistogram:
    """Keys per depth of a quiescent trie (LNode entries count one each)."""
    counts: dict[int, int] = {}
    total = 0
    for depth, leaf in iter_leaves(trie.root):
        k = len(leaf.entries) if type(leaf) is LNode else 1
        counts[depth] = counts.get(depth, 0) + k
        total += k
    return DepthHistogram(dict(sorted(counts.items())), total)


def compare_distributions(emp: DepthHistogram, n: int) -> float:
    """Total-variation distance between ``emp`` and p(., n)."""
    if emp.total != n:
        raise ValueError(f"histogram holds {emp.total} keys, expected {n}")
    _check_n(n)
    max_depth = max(max(emp.counts, default=0), math.ceil(log16(n)) + 8)
    diffs = [abs(emp.frequency(d) - depth_probability(d, n)) for d in range(max_depth + 1)]
    covered = math.fsum(depth_probability(d, n) for d in range(max_depth + 1))
    return 0.5 * (math.fsum(diffs) + max(0.0, 1.0 - covered))


def summary(n: float) -> dict:
    value, argmax = mu(n)
    return {
        "n": n,
        "mu": value,
        "argmax_depth": argmax,
        "expected_depth": expected_depth(n),
        "expected_depth_bounds": list(expected_depth_bounds(n)),
        "log16_n": log16(n),
    }
