import pytest

from cachetrie.nodes import (
    FROZEN,
    HASH_MASK,
    NO_TXN,
    NOTFOUND,
    LNode,
    SNode,
    default_hash,
    is_leaf,
    mix64,
    position,
)
from conftest import chunks


def test_position_reads_the_chunk_at_level():
    h = chunks(0x3, 0xA, 0xF, 0x6)
    assert position(h, 0, 16) == 0x3
    assert position(h, 4, 16) == 0xA
    assert position(h, 8, 16) == 0xF
    # a narrow node uses the low two bits of the chunk
    assert position(h, 4, 4) == 0xA & 3
    assert position(h, 12, 4) == 0x6 & 3


@pytest.mark.parametrize("level", [0, 4, 28, 60])
def test_position_in_range(level):
    for h in (0, HASH_MASK, 0x0123456789ABCDEF):
        assert 0 <= position(h, level, 16) < 16
        assert 0 <= position(h, level, 4) < 4


def test_default_hash_is_64_bit_and_spreads_small_ints():
    hs = [default_hash(i) for i in range(1000)]
    assert all(0 <= h <= HASH_MASK for h in hs)
    assert len(set(hs)) == 1000
    # consecutive ints should not share their root chunk
    assert len({h & 15 for h in hs[:64]}) > 8


def test_mix64_is_injective_on_a_sample():
    xs = range(0, 1 << 20, 97)
    assert len({mix64(x) for x in xs}) == len(xs)


def test_snode_starts_without_transaction():
    s = SNode(5, "k", "v")
    assert s.txn is NO_TXN
    assert is_leaf(s)
    assert not is_leaf([None] * 4)


def test_lnode_get_update_and_remove():
    ln = LNode(7, (("a", 1), ("b", 2)))
    assert ln.get("a") == 1
    assert ln.get("zz") is NOTFOUND

    ln2, prev = ln.updated("a", 10)
    assert prev == 1 and ln2.get("a") == 10 and ln.get("a") == 1
    ln3, prev = ln.updated("c", 3)
    assert prev is NOTFOUND and len(ln3.entries) == 3
    assert ln3.txn is NO_TXN

    single = ln.without("a")
    assert type(single) is SNode and single.key == "b" and single.hash == 7
    assert type(ln3.without("c")) is LNode


def test_markers_are_distinct_singletons():
    import pickle

    assert FROZEN is not NO_TXN
    assert pickle.loads(pickle.dumps(FROZEN)) is FROZEN
