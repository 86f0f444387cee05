"""Single-word compare-and-swap on list slots and node fields.

CPython exposes no hardware CAS, so each primitive is a compare-then-store
made indivisible by a lock chosen from a fixed stripe by the target's
identity.  The critical section is two machine-word operations and never
calls back into the trie, so no thread can block while holding a stripe;
the algorithms built on top keep their lock-free helping structure.

Plain reads of list items and attributes are atomic in CPython and are used
directly as the "READ" operation.
"""

from __future__ import annotations

import threading

_STRIPES = 64
_locks = tuple(threading.Lock() for _ in range(_STRIPES))


def _lock_for(obj) -> threading.Lock:
    return _locks[(id(obj) >> 4) & (_STRIPES - 1)]


def cas_slot(array: list, index: int, expect, new) -> bool:
    """Set ``array[index] = new`` iff it currently *is* ``expect``."""
    with _locks[(id(array) >> 4) & (_STRIPES - 1)]:
        if array[index] is expect:
            array[index] = new
            return True
        return False


def cas_txn(node, expect, new) -> bool:
    """Set ``node.txn = new`` iff it currently *is* ``expect``."""
    with _locks[(id(node) >> 4) & (_STRIPES - 1)]:
        if node.txn is expect:
            node.txn = new
            return True
        return False


def cas_wide(enode, expect, new) -> bool:
    with _locks[(id(enode) >> 4) & (_STRIPES - 1)]:
        if enode.wide is expect:
            enode.wide = new
            return True
        return False


def cas_attr(obj, name: str, expect, new) -> bool:
    with _lock_for(obj):
        if getattr(obj, name) is expect:
            setattr(obj, name, new)
            return True
        return False


class AtomicCounter:
    """Monotone counter shared between threads."""

    __slots__ = ("_value", "_lock")

    def __init__(self, value: int = 0) -> None:
        self._value = value
        self._lock = threading.Lock()

    def increment(self, delta: int = 1) -> int:
        with self._lock:
            self._value += delta
            return self._value

    @property
    def value(self) -> int:
        return self._value
