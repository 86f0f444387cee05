"""Level cache: a hash-indexed array of trie nodes at one level.

A cache for level ``L`` is a list of ``1 + 2**L`` entries.  Entry 0 is the
:class:`CacheDescriptor`; entry ``1 + (hash mod 2**L)`` holds the SNode or
A-node last seen at level ``L`` along that hash prefix.  Caches form a chain
through ``descriptor.parent``, deepest first, starting at ``trie.cache_head``.

Entries are written with plain stores and may be stale.  Staleness is always
detectable: a node that left the trie is frozen (A-node) or carries a
non-``NO_TXN`` transaction (leaf), and the fast paths fall back on either.
"""

from __future__ import annotations

import threading
from typing import TYPE_CHECKING

from cachetrie.nodes import FROZEN, FV, NO_TXN, NOTFOUND, RESTART, ENode, FNode, LNode, SNode

if TYPE_CHECKING:
    from cachetrie.trie import CacheTrie

MAX_MISSES = 2048
SAMPLE_PROBES = 128
THROUGHPUT_FACTOR = 8
ADJUST_THRESHOLD = 1.5
#: Level of the first cache, installed once some key sits at level >= 12.
FIRST_CACHE_LEVEL = 8
FIRST_CACHE_TRIGGER = 12
MIN_CACHE_LEVEL = 8
#: 2**20 entries; deeper caches would cost more memory than the trie.
MAX_CACHE_LEVEL = 20

#: ``cache_level`` argument of the slow lookup when no cache exists yet.
NO_CACHE = -1
#: ``cache_level`` argument that turns off all cache housekeeping.
CACHE_DISABLED = -2


class CacheDescriptor:
    __slots__ = ("parent", "misses", "level")

    def __init__(self, level: int, parent: list | None, counters: int) -> None:
        self.level = level
        self.parent = parent
        self.misses = [0] * max(1, counters)

    def __repr__(self) -> str:
        parent = None if self.parent is None else self.parent[0].level
        return f"CacheDescriptor(level={self.level}, parent_level={parent})"


def create_cache(level: int, parent: list | None = None, counters: int = THROUGHPUT_FACTOR) -> list:
    if level % 4 or not MIN_CACHE_LEVEL <= level <= MAX_CACHE_LEVEL:
        raise ValueError(f"cache level must be a multiple of 4 in "
                         f"[{MIN_CACHE_LEVEL}, {MAX_CACHE_LEVEL}], got {level}")
    cache = [None] * (1 + (1 << level))
    cache[0] = CacheDescriptor(level, parent, counters)
    return cache


def cache_chain(trie: CacheTrie) -> list[list]:
    chain = []
    cache = trie.cache_head
    while cache is not None:
        chain.append(cache)
        cache = cache[0].parent
    return chain


def inhabit(trie: CacheTrie, node, hash: int, node_level: int) -> None:
    """Record ``node``, seen at ``node_level`` on the path of ``hash``."""
    cache = trie.cache_head
    if cache is None:
        if node_level >= FIRST_CACHE_TRIGGER:
            first = create_cache(FIRST_CACHE_LEVEL, None, trie.miss_counters)
            if trie.cas_cache_head(None, first):
                trie.stats.level_history.append(FIRST_CACHE_LEVEL)
            cache = trie.cache_head
        if cache is None:
            return
    level = cache[0].level
    if level == node_level:
        # a plain store: the cache tolerates lost and stale writes
        cache[1 + (hash & ((1 << level) - 1))] = node


def record_cache_miss(trie: CacheTrie) -> None:
    cache = trie.cache_head
    if cache is None:
        return
    trie.stats.misses += 1
    misses = cache[0].misses
    i = threading.get_native_id() % len(misses)
    count = misses[i] + 1
    if count >= trie.max_misses:
        misses[i] = 0
        sample_and_adjust(trie)
    else:
        misses[i] = count


def _leaf_count(node: list) -> int:
    count = 0
    for slot in node:
        t = type(slot)
        if t is SNode:
            count += 1
        elif t is LNode:
            count += len(slot.entries)
    return count


def _children(slot):
    t = type(slot)
    if t is list:
        return slot
    if t is FNode:
        return slot.frozen
    if t is ENode:
        return slot.narrow
    return None


def sample_snode_levels(trie: CacheTrie, probes: int, rng=None) -> dict[int, float]:
    """Estimate the number of leaves at each level from random root paths.

    At every A-node on a path the leaves of all its child A-nodes are
    counted, weighted by the inverse probability that a random hash visits
    that A-node (the product of the widths above it), so the estimate is
    unbiased for the whole trie.  Looking one level ahead keeps the weights
    a factor of the node width smaller than counting only the nodes on the
    path, which matters for the sparse deepest levels.  Root leaves are
    counted exactly.  LNode entries count individually.
    """
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = rng or trie.rng
    root = trie.root
    totals: dict[int, float] = {}
    at_root = _leaf_count(root)
    if at_root:
        totals[0] = float(at_root * probes)
    for _ in range(probes):
        h = rng.getrandbits(64)
        cur = root
        lev = 0
        weight = 1
        while True:
            count = 0
            for slot in cur:
                child = _children(slot)
                if child is not None:
                    count += _leaf_count(child)
            if count:
                totals[lev + 4] = totals.get(lev + 4, 0.0) + weight * count
            weight *= len(cur)
            cur = _children(cur[(h >> lev) & (len(cur) - 1)])
            if cur is None:
                break
            lev += 4
    return {lev: total / probes for lev, total in sorted(totals.items())}


def pair_mass(histogram: dict[int, float], level: int) -> float:
    return histogram.get(level, 0.0) + histogram.get(level + 4, 0.0)


def most_populated_level(histogram: dict[int, float]) -> tuple[int, float]:
    """Level ``l`` maximising the mass at ``l`` and ``l + 4`` (shallowest on ties)."""
    candidates = sorted(set(histogram) | {lev - 4 for lev in histogram if lev >= 4})
    best = max(candidates, key=lambda lev: (pair_mass(histogram, lev), -lev))
    return best, pair_mass(histogram, best)


def sample_and_adjust(trie: CacheTrie) -> bool:
    """Sample the leaf-depth histogram and move the cache if clearly better."""
    cache = trie.cache_head
    if cache is None:
        return False
    trie.stats.samplings += 1
    histogram = sample_snode_levels(trie, trie.sample_probes)
    if not histogram:
        return False
    best, best_mass = most_populated_level(histogram)
    current = cache[0].level
    if best_mass > pair_mass(histogram, current) * ADJUST_THRESHOLD:
        target = min(max(best, MIN_CACHE_LEVEL), MAX_CACHE_LEVEL)
        if target != current:
            return adjust_cache_level(trie, target)
    return False


def adjust_cache_level(trie: CacheTrie, level: int) -> bool:
    """Install a fresh cache at ``level`` as the new head.

    A deeper cache keeps the old head as its parent; a shallower one takes
    over the part of the old chain that lies above it.
    """
    head = trie.cache_head
    parent = head
    while parent is not None and parent[0].level >= level:
        parent = parent[0].parent
    cache = create_cache(level, parent, trie.miss_counters)
    if trie.cas_cache_head(head, cache):
        trie.stats.adjustments += 1
        trie.stats.level_history.append(level)
        return True
    return False


def _slot_frozen(slot) -> bool:
    if slot is FV or type(slot) is FNode:
        return True
    t = type(slot)
    return (t is SNode or t is LNode) and slot.txn is FROZEN


def fast_lookup(trie: CacheTrie, key, h: int):
    cache = trie.cache_head
    if cache is None:
        return trie._lookup(key, h, 0, trie.root, None, NO_CACHE, 0)
    top = cache[0].level
    visits = 0
    while cache is not None:
        desc = cache[0]
        level = desc.level
        cachee = cache[1 + (h & ((1 << level) - 1))]
        visits += 1
        t = type(cachee)
        if t is SNode:
            if cachee.txn is NO_TXN:
                trie.stats.hits += 1
                if cachee.hash == h and (cachee.key is key or cachee.key == key):
                    return cachee.value, visits
                return NOTFOUND, visits
        elif t is list:
            old = cachee[(h >> level) & (len(cachee) - 1)]
            visits += 1
            if not _slot_frozen(old):
                trie.stats.hits += 1
                return trie._lookup(key, h, level, cachee, cachee, top, visits)
        cache = desc.parent
    trie.stats.fallbacks += 1
    return trie._lookup(key, h, 0, trie.root, None, top, visits)


def fast_insert(trie: CacheTrie, key, value, h: int):
    cache = trie.cache_head
    visits = 0
    if cache is not None:
        level = cache[0].level
        cachee = cache[1 + (h & ((1 << level) - 1))]
        visits += 1
        if type(cachee) is list:
            old = cachee[(h >> level) & (len(cachee) - 1)]
            visits += 1
            if not _slot_frozen(old):
                r, visits = trie._insert(key, value, h, level, cachee, None, visits)
                if r is not RESTART:
                    trie.stats.hits += 1
                    return r, visits
    r, v = trie.insert_from_root(key, value, h)
    return r, visits + v
