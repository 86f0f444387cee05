import pytest

from cachetrie import CacheTrie
from cachetrie.invariants import (
    InvariantViolation,
    check_cache_coherence,
    validate_invariants,
)
from cachetrie.nodes import FROZEN, FV, ENode, FNode, SNode
from conftest import chunks, clustered


def populated(id_trie):
    for k in (chunks(1, 1), chunks(1, 2), chunks(2), chunks(3, 4, 5), chunks(3, 4, 6)):
        id_trie.insert(k, k)
    return id_trie


def kinds(report):
    return {v.invariant for v in report.violations}


def test_valid_trie_passes(id_trie):
    report = validate_invariants(populated(id_trie))
    assert report.ok and report.keys == 5
    report.raise_if_invalid()
    assert report.depth_counts == {0: 1, 1: 2, 2: 2}


def test_empty_trie_passes():
    assert validate_invariants(CacheTrie()).ok


def test_root_must_be_wide(id_trie):
    id_trie.root = [None] * 4
    assert kinds(validate_invariants(id_trie)) == {"INV1"}


def test_bad_width_is_reported(id_trie):
    populated(id_trie)
    id_trie.root[7] = [None] * 8
    report = validate_invariants(id_trie)
    assert kinds(report) == {"INV2"} and report.first.path == (7,)
    with pytest.raises(InvariantViolation):
        report.raise_if_invalid()


def test_misplaced_leaf_violates_inv3(id_trie):
    populated(id_trie)
    k = chunks(9)
    id_trie.root[8] = SNode(k, k, k)
    assert "INV3" in kinds(validate_invariants(id_trie))


def test_stale_hash_is_reported(id_trie):
    populated(id_trie)
    id_trie.root[2].key = chunks(2, 1)
    assert "hash" in kinds(validate_invariants(id_trie))


@pytest.mark.parametrize("residue", ["fv", "fnode", "enode", "frozen_leaf", "pending"])
def test_protocol_residue_is_reported(id_trie, residue):
    t = populated(id_trie)
    if residue == "fv":
        t.root[9] = FV
    elif residue == "fnode":
        t.root[9] = FNode([None] * 4)
    elif residue == "enode":
        t.root[1] = ENode(t.root, 1, t.root[1], chunks(1), 4)
    elif residue == "frozen_leaf":
        t.root[2].txn = FROZEN
    else:
        t.root[2].txn = None
    assert "residue" in kinds(validate_invariants(t))


def test_duplicate_key_is_reported():
    t = CacheTrie(lambda k: 0)
    t.insert("a", 1)
    t.insert("b", 2)
    # corrupt: a second copy of "a" beside the LNode's parent
    t.root[1] = SNode(0, "a", 3)
    report = validate_invariants(t)
    assert "duplicate" in kinds(report) and "INV3" in kinds(report)


def test_cache_coherence_detects_wrong_level_entry():
    t = CacheTrie(clustered, seed=0)
    for k in range(500):
        t.insert(k, k)
    for k in range(500):
        t.lookup(k)
    assert check_cache_coherence(t) == []
    cache = t.cache_head
    level = cache[0].level
    # a live node that is not at the cache level on that prefix
    imposter = SNode(clustered(1), 1, 1)
    cache[1 + (clustered(1) & ((1 << level) - 1))] = imposter
    problems = check_cache_coherence(t)
    assert problems and problems[0].invariant == "cache"


def test_cache_coherence_ignores_stale_entries():
    t = CacheTrie(clustered, seed=0)
    for k in range(300):
        t.insert(k, k)
    for k in range(300):
        t.lookup(k)
    for k in range(300):
        t.remove(k)
    assert check_cache_coherence(t) == []
