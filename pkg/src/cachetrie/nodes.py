"""Node types shared by the trie and its cache.

Inner nodes (A-nodes) are plain Python lists of length 4 or 16, which keeps
slot reads as cheap as a list index.  ``type(x) is list`` is therefore the
A-node test everywhere in the package; nothing else stored in a slot is a
list.
"""

from __future__ import annotations

HASH_BITS = 64
HASH_MASK = (1 << HASH_BITS) - 1

NARROW = 4
WIDE = 16


class _Marker:
    __slots__ = ("name",)

    def __init__(self, name: str) -> None:
        self.name = name

    def __repr__(self) -> str:
        return self.name

    def __reduce__(self):
        return self.name


#: Initial ``txn`` of a leaf: no pending transaction.
NO_TXN = _Marker("NO_TXN")
#: ``txn`` of a frozen leaf (FSNode).  Terminal.
FROZEN = _Marker("FROZEN")
#: Frozen empty slot (FVNode).  Terminal.
FV = _Marker("FV")
#: Internal "not found" result, distinct from a stored ``None`` value.
NOTFOUND = _Marker("NOTFOUND")
#: Internal signal: restart the operation from the root.
RESTART = _Marker("RESTART")


class SNode:
    """Leaf holding one key/value pair.

    ``txn`` starts as :data:`NO_TXN` and changes at most once: to
    :data:`FROZEN`, or to the slot's next content (a replacement leaf, an
    A-node, or ``None`` for a removal), which is then committed into the
    parent slot.
    """

    __slots__ = ("hash", "key", "value", "txn")

    def __init__(self, hash: int, key, value) -> None:
        self.hash = hash
        self.key = key
        self.value = value
        self.txn = NO_TXN

    def __repr__(self) -> str:
        return f"SNode({self.key!r}={self.value!r}, hash={self.hash:#x}, txn={self.txn!r})"


class LNode:
    """Leaf for keys whose 64-bit hashes are fully equal.

    ``entries`` is an immutable tuple of ``(key, value)`` pairs; updates
    build a new LNode and swap it in through the same two-step ``txn``
    protocol as :class:`SNode`.
    """

    __slots__ = ("hash", "entries", "txn")

    def __init__(self, hash: int, entries: tuple) -> None:
        self.hash = hash
        self.entries = entries
        self.txn = NO_TXN

    def get(self, key):
        for k, v in self.entries:
            if k == key:
                return v
        return NOTFOUND

    def updated(self, key, value) -> tuple[LNode, object]:
        """Return ``(new_lnode, previous_value_or_NOTFOUND)``."""
        entries = []
        previous = NOTFOUND
        for k, v in self.entries:
            if k == key:
                previous = v
            else:
                entries.append((k, v))
        entries.append((key, value))
        return LNode(self.hash, tuple(entries)), previous

    def without(self, key):
        """Leaf left after removing ``key``: an LNode, a lone SNode, or None."""
        rest = tuple((k, v) for k, v in self.entries if k != key)
        if len(rest) == 1:
            return SNode(self.hash, rest[0][0], rest[0][1])
        return LNode(self.hash, rest) if rest else None

    def __repr__(self) -> str:
        return f"LNode({list(self.entries)!r}, hash={self.hash:#x}, txn={self.txn!r})"


class ENode:
    """Announces that ``narrow`` (reached from ``parent[parentpos]``) is being
    replaced.

    Expansion swaps a narrow node for a wide copy.  With ``compress`` set, the
    same machinery replaces an emptied node with ``None`` (or with a rebuilt
    copy when freezing trapped live keys).  ``wide`` is written once.
    """

    __slots__ = ("parent", "parentpos", "narrow", "hash", "level", "wide", "compress")

    def __init__(self, parent: list, parentpos: int, narrow: list, hash: int, level: int,
                 compress: bool = False) -> None:
        self.parent = parent
        self.parentpos = parentpos
        self.narrow = narrow
        self.hash = hash
        self.level = level
        self.wide = None
        self.compress = compress

    def __repr__(self) -> str:
        kind = "compress" if self.compress else "expand"
        return f"ENode({kind}, level={self.level}, parentpos={self.parentpos})"


class FNode:
    """Frozen wrapper around a child A-node."""

    __slots__ = ("frozen",)

    def __init__(self, frozen: list) -> None:
        self.frozen = frozen

    def __repr__(self) -> str:
        return f"FNode(width={len(self.frozen)})"


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a cheap bijective scrambler on 64-bit ints."""
    x &= HASH_MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & HASH_MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & HASH_MASK
    return x ^ (x >> 31)


def default_hash(key) -> int:
    """Uniform 64-bit hash: Python's ``hash`` scrambled so that every 4-bit
    chunk is well mixed (``hash`` of small ints is the identity)."""
    return mix64(hash(key))


def position(hash: int, level: int, width: int) -> int:
    """Slot index of ``hash`` in a node of ``width`` slots at bit offset ``level``."""
    return (hash >> level) & (width - 1)


def is_leaf(node) -> bool:
    t = type(node)
    return t is SNode or t is LNode
