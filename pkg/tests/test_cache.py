import random

import pytest

from cachetrie import CacheTrie
from cachetrie import cache as C
from cachetrie.invariants import check_cache_coherence, iter_leaves, validate_invariants
from cachetrie.nodes import NOTFOUND, SNode
from conftest import chunks, clustered


def deep_trie(n=3000, **kw):
    t = CacheTrie(clustered, seed=0, **kw)
    for k in range(n):
        t.insert(k, -k)
    return t


def exhaustive_levels(trie):
    hist = {}
    for d, _ in iter_leaves(trie.root):
        hist[4 * d] = hist.get(4 * d, 0) + 1
    return hist


def test_create_cache_layout_and_validation():
    c = C.create_cache(8)
    assert len(c) == 1 + 256
    assert c[0].level == 8 and c[0].parent is None
    assert all(x is None for x in c[1:])
    for bad in (4, 10, 24, -8):
        with pytest.raises(ValueError):
            C.create_cache(bad)


def test_no_cache_for_shallow_trie(id_trie):
    keys = [chunks(i, j, 5) for i in range(16) for j in range(0, 16, 3)]
    for k in keys:
        id_trie.insert(k, k)
    for k in keys:
        id_trie.lookup(k)
    assert max(d for d, _ in iter_leaves(id_trie.root)) == 1
    assert id_trie.cache_head is None


def test_first_cache_installed_by_deep_lookup():
    t = deep_trie(50)
    assert t.cache_head is None
    t.lookup(0)
    assert t.cache_level() == C.FIRST_CACHE_LEVEL
    assert t.stats.level_history == [C.FIRST_CACHE_LEVEL]


def test_slow_lookup_inhabits_and_fast_lookup_hits():
    t = deep_trie(2000)
    for k in range(2000):
        t.lookup(k)
    assert t.cache_level() is not None
    hits = t.stats.hits
    t.visit_log = []
    for k in range(2000):
        assert t.lookup(k) == -k
    assert t.stats.hits - hits == 2000
    assert not check_cache_coherence(t)


def test_fast_lookup_matches_slow_lookup():
    t = deep_trie(3000)
    r = random.Random(0)
    for k in r.sample(range(3000), 1500):
        t.remove(k)
    probe = list(range(0, 4000, 3))
    for k in probe:
        t.lookup(k)
    for k in probe:
        fast = t.lookup(k, NOTFOUND)
        assert fast is t.slow_lookup(k, NOTFOUND) if fast is NOTFOUND else fast == t.slow_lookup(k)


def test_removed_key_not_served_from_cache():
    t = deep_trie(500)
    for k in range(500):
        t.lookup(k)
    cache = t.cache_head
    h = clustered(7)
    entry = cache[1 + (h & ((1 << cache[0].level) - 1))]
    assert entry is not None
    t.remove(7)
    assert t.lookup(7) is None
    assert not check_cache_coherence(t)


def test_fast_insert_through_cached_node():
    t = deep_trie(2000)
    for k in range(2000):
        t.lookup(k)
    hits = t.stats.hits
    for k in range(2000, 3000):
        assert t.insert(k, -k) is None
    assert t.stats.hits > hits
    assert all(t.lookup(k) == -k for k in range(3000))
    report = validate_invariants(t)
    assert report.ok, report.first


def test_miss_counter_triggers_sampling_at_threshold():
    t = deep_trie(100, max_misses=5)
    t.lookup(0)
    assert t.cache_head is not None
    counters = t.cache_head[0].misses
    for _ in range(4):
        C.record_cache_miss(t)
    assert t.stats.samplings == 0 and sum(counters) == 4
    C.record_cache_miss(t)
    assert t.stats.samplings == 1 and sum(counters) == 0


def test_adjust_deeper_keeps_old_head_as_parent():
    t = deep_trie(100)
    t.lookup(0)
    head = t.cache_head
    assert C.adjust_cache_level(t, 16)
    assert t.cache_level() == 16 and t.cache_head[0].parent is head


def test_adjust_shallower_drops_deeper_caches():
    t = deep_trie(100)
    t.lookup(0)
    c8 = t.cache_head
    C.adjust_cache_level(t, 12)
    C.adjust_cache_level(t, 16)
    assert [c[0].level for c in C.cache_chain(t)] == [16, 12, 8]
    C.adjust_cache_level(t, 12)
    chain = C.cache_chain(t)
    assert [c[0].level for c in chain] == [12, 8] and chain[1] is c8


def test_cache_moves_deeper_as_trie_grows():
    t = CacheTrie(seed=0)
    keys = list(range(120_000))
    for k in keys:
        t.insert(k, k)
    for k in keys:
        t.lookup(k)
    assert t.cache_level() == 12
    assert 8 in t.stats.level_history and t.stats.adjustments >= 1


def test_most_populated_level_prefers_heaviest_pair_then_shallowest():
    assert C.most_populated_level({8: 10, 12: 50, 16: 45, 20: 1}) == (12, 95)
    assert C.most_populated_level({4: 5, 8: 5}) == (4, 10)
    # a pair may start at an empty level
    assert C.most_populated_level({12: 3}) == (8, 3)


def test_sampling_single_key_and_empty():
    t = CacheTrie()
    assert C.sample_snode_levels(t, 16) == {}
    t.insert("only", 1)
    assert C.sample_snode_levels(t, 16) == {0: 1.0}
    with pytest.raises(ValueError):
        C.sample_snode_levels(t, 0)


class FixedBits:
    def __init__(self, h):
        self.h = h

    def getrandbits(self, _):
        return self.h


def test_sampling_counts_lnode_entries():
    h = chunks(1, 2)
    t = CacheTrie(lambda k: h)
    for i in range(5):
        t.insert(i, i)
    (depth, ln), = iter_leaves(t.root)
    # every probe follows the collision path; each entry counts once,
    # weighted by the inverse probability of visiting the LNode's parent
    hist = C.sample_snode_levels(t, 4, FixedBits(h))
    assert hist == {4 * depth: 5 * 16 ** (depth - 1)}


@pytest.mark.slow
def test_sampling_matches_exhaustive_argmax():
    t = CacheTrie(cached=False)
    for k in range(100_000):
        t.insert(k, k)
    best, _ = C.most_populated_level(exhaustive_levels(t))
    agree = sum(
        C.most_populated_level(C.sample_snode_levels(t, C.SAMPLE_PROBES, random.Random(seed)))[0] == best
        for seed in range(100)
    )
    assert agree >= 95


def test_sampling_is_unbiased_on_small_trie():
    t = CacheTrie(cached=False)
    for k in range(3000):
        t.insert(k, k)
    exact = exhaustive_levels(t)
    r = random.Random(5)
    runs = [C.sample_snode_levels(t, 64, r) for _ in range(200)]
    for level, count in exact.items():
        if count < 50:
            continue
        mean = sum(h.get(level, 0.0) for h in runs) / len(runs)
        assert mean == pytest.approx(count, rel=0.05)


def test_stale_snode_entry_falls_back():
    t = deep_trie(300)
    for k in range(300):
        t.lookup(k)
    level = t.cache_level()
    h = clustered(11)
    slot = 1 + (h & ((1 << level) - 1))
    # plant an SNode that has been replaced (non-NO_TXN) in the cache
    ghost = SNode(h, 11, "ghost")
    ghost.txn = None
    t.cache_head[slot] = ghost
    assert t.lookup(11) == -11
