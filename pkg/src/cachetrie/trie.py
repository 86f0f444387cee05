"""Lock-free 16-way hash trie with narrow (4-way) nodes and an auxiliary
level cache.

Slot contents are ``None`` (empty), :class:`~cachetrie.nodes.SNode`,
:class:`~cachetrie.nodes.LNode`, an A-node (``list``), :class:`ENode`,
:class:`FNode` or :data:`FV`.  Every mutation of a reachable slot or leaf is a
compare-and-swap; lookups never write to the trie.

Internal subroutines return ``(result, visits)`` where ``visits`` counts array
slot reads (trie nodes and cache arrays).  ``result`` is a value,
:data:`NOTFOUND`, or :data:`RESTART` for "start over from the root".
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from typing import Callable, Hashable

from cachetrie import cache as _cache
from cachetrie.atomic import cas_attr, cas_slot, cas_txn, cas_wide
from cachetrie.nodes import (
    FROZEN,
    FV,
    HASH_BITS,
    NARROW,
    NO_TXN,
    NOTFOUND,
    RESTART,
    WIDE,
    ENode,
    FNode,
    LNode,
    SNode,
    default_hash,
)

NO_CACHE = _cache.NO_CACHE
CACHE_DISABLED = _cache.CACHE_DISABLED


@dataclass
class CacheStats:
    """Advisory counters; updated without synchronisation."""

    hits: int = 0
    fallbacks: int = 0
    misses: int = 0
    samplings: int = 0
    adjustments: int = 0
    level_history: list = field(default_factory=list)


EventHook = Callable[..., None]


class CacheTrie:
    """Concurrent hash map backed by a cache-augmented hash trie.

    Args:
        hash_fn: key -> unsigned 64-bit int.  Defaults to a scrambled
            ``hash(key)``.
        cached: enable the level cache (fast paths, inhabitation, sampling).
        hook: optional ``hook(event, *details)`` callback receiving
            ``("cas", kind, target, index, expect, new, ok)``,
            ``("frozen", anode)`` and ``("expanded", enode)`` events.
        max_misses: cache-miss count per counter that triggers sampling.
        sample_probes: random paths walked per sampling pass.
        seed: seed of the sampling RNG.

    ``None`` is a legal value; the public methods take a ``default`` to
    distinguish "absent" where it matters.
    """

    def __init__(
        self,
        hash_fn: Callable[[Hashable], int] | None = None,
        *,
        cached: bool = True,
        hook: EventHook | None = None,
        max_misses: int = _cache.MAX_MISSES,
        sample_probes: int = _cache.SAMPLE_PROBES,
        seed: int | None = None,
    ) -> None:
        self.root: list = [None] * WIDE
        self.cache_head: list | None = None
        self.hash_fn = hash_fn or default_hash
        self.cached = cached
        self.max_misses = max_misses
        self.sample_probes = sample_probes
        self.miss_counters = _cache.THROUGHPUT_FACTOR * (os.cpu_count() or 1)
        self.stats = CacheStats()
        self.visit_log: list[int] | None = None
        self.rng = random.Random(seed)
        self.hook = hook
        if hook is None:
            self._cas_slot = cas_slot
            self._cas_txn = cas_txn
            self._cas_wide = cas_wide
        else:
            self._cas_slot, self._cas_txn, self._cas_wide = _instrumented(hook)

    # ------------------------------------------------------------------
    # public map interface

    def lookup(self, key, default=None):
        h = self.hash_fn(key)
        if self.cached:
            r, visits = _cache.fast_lookup(self, key, h)
        else:
            r, visits = self._lookup(key, h, 0, self.root, None, CACHE_DISABLED, 0)
        if self.visit_log is not None:
            self.visit_log.append(visits)
        return default if r is NOTFOUND else r

    get = lookup

    def slow_lookup(self, key, default=None):
        """Root-to-leaf lookup that bypasses and never touches the cache."""
        r, _ = self._lookup(key, self.hash_fn(key), 0, self.root, None, CACHE_DISABLED, 0)
        return default if r is NOTFOUND else r

    def insert(self, key, value, default=None):
        """Bind ``key`` to ``value``; return the previous value or ``default``."""
        h = self.hash_fn(key)
        if self.cached:
            r, visits = _cache.fast_insert(self, key, value, h)
        else:
            r, visits = self.insert_from_root(key, value, h)
        if self.visit_log is not None:
            self.visit_log.append(visits)
        return default if r is NOTFOUND else r

    def remove(self, key, default=None):
        """Unbind ``key``; return the removed value or ``default``."""
        h = self.hash_fn(key)
        visits = 0
        while True:
            r, visits = self._remove(key, h, visits)
            if r is not RESTART:
                break
        if self.visit_log is not None:
            self.visit_log.append(visits)
        return default if r is NOTFOUND else r

    def __contains__(self, key) -> bool:
        return self.lookup(key, NOTFOUND) is not NOTFOUND

    def __getitem__(self, key):
        r = self.lookup(key, NOTFOUND)
        if r is NOTFOUND:
            raise KeyError(key)
        return r

    def __setitem__(self, key, value) -> None:
        self.insert(key, value)

    def __delitem__(self, key) -> None:
        if self.remove(key, NOTFOUND) is NOTFOUND:
            raise KeyError(key)

    # ------------------------------------------------------------------
    # lookup

    def _lookup(self, key, h, lev, cur, last_cachee, cache_level, visits):
        while True:
            if lev == cache_level and cur is not last_cachee:
                _cache.inhabit(self, cur, h, lev)
            old = cur[(h >> lev) & (len(cur) - 1)]
            visits += 1
            if old is None or old is FV:
                return NOTFOUND, visits
            t = type(old)
            if t is list:
                cur = old
                lev += 4
            elif t is SNode:
                if cache_level >= 0:
                    if lev < cache_level or lev > cache_level + 4:
                        _cache.record_cache_miss(self)
                    if lev + 4 == cache_level:
                        _cache.inhabit(self, old, h, lev + 4)
                elif cache_level == NO_CACHE and lev >= 8:
                    _cache.inhabit(self, old, h, lev + 4)
                if old.hash == h and (old.key is key or old.key == key):
                    return old.value, visits
                return NOTFOUND, visits
            elif t is LNode:
                if old.hash != h:
                    return NOTFOUND, visits
                return old.get(key), visits
            elif t is ENode:
                cur = old.narrow
                lev += 4
            else:
                cur = old.frozen
                lev += 4

    # ------------------------------------------------------------------
    # insert

    def insert_from_root(self, key, value, h):
        visits = 0
        while True:
            r, visits = self._insert(key, value, h, 0, self.root, None, visits)
            if r is not RESTART:
                return r, visits

    def _insert(self, key, value, h, lev, cur, prev, visits):
        """Insert starting at node ``cur`` on level ``lev``.

        ``prev`` is the parent of ``cur``; ``None`` when unknown (fast path),
        in which case a required narrow-node expansion restarts instead.
        """
        cas_slot_ = self._cas_slot
        cas_txn_ = self._cas_txn
        while True:
            pos = (h >> lev) & (len(cur) - 1)
            old = cur[pos]
            visits += 1
            if old is None:
                if cas_slot_(cur, pos, None, SNode(h, key, value)):
                    return NOTFOUND, visits
                continue
            t = type(old)
            if t is list:
                prev = cur
                cur = old
                lev += 4
                continue
            if t is SNode or t is LNode:
                txn = old.txn
                if txn is NO_TXN:
                    if old.hash == h:
                        if t is SNode:
                            if old.key is key or old.key == key:
                                sn = SNode(h, key, value)
                                if cas_txn_(old, NO_TXN, sn):
                                    cas_slot_(cur, pos, old, sn)
                                    return old.value, visits
                                continue
                        else:
                            ln, previous = old.updated(key, value)
                            if cas_txn_(old, NO_TXN, ln):
                                cas_slot_(cur, pos, old, ln)
                                return previous, visits
                            continue
                    if len(cur) == NARROW:
                        if prev is None:
                            return RESTART, visits
                        ppos = (h >> (lev - 4)) & (len(prev) - 1)
                        en = ENode(prev, ppos, cur, h, lev)
                        if cas_slot_(prev, ppos, cur, en):
                            self.complete_expansion(en)
                            cur = en.wide
                            continue
                        return RESTART, visits
                    an = create_anode(copy_leaf(old), SNode(h, key, value), lev + 4)
                    if cas_txn_(old, NO_TXN, an):
                        cas_slot_(cur, pos, old, an)
                        return NOTFOUND, visits
                    continue
                if txn is FROZEN:
                    return RESTART, visits
                cas_slot_(cur, pos, old, txn)
                continue
            if t is ENode:
                self.complete_expansion(old)
            return RESTART, visits

    # ------------------------------------------------------------------
    # remove

    def _remove(self, key, h, visits):
        cur = self.root
        lev = 0
        path = []
        while True:
            pos = (h >> lev) & (len(cur) - 1)
            old = cur[pos]
            visits += 1
            if old is None:
                return NOTFOUND, visits
            t = type(old)
            if t is list:
                path.append(cur)
                cur = old
                lev += 4
                continue
            if t is SNode or t is LNode:
                txn = old.txn
                if txn is NO_TXN:
                    if old.hash != h:
                        return NOTFOUND, visits
                    if t is SNode:
                        if not (old.key is key or old.key == key):
                            return NOTFOUND, visits
                        result = old.value
                        replacement = None
                    else:
                        result = old.get(key)
                        if result is NOTFOUND:
                            return NOTFOUND, visits
                        replacement = old.without(key)
                    if self._cas_txn(old, NO_TXN, replacement):
                        self._cas_slot(cur, pos, old, replacement)
                        if replacement is None and lev > 0:
                            self._compress(cur, lev, h, path)
                        return result, visits
                    continue
                if txn is FROZEN:
                    return RESTART, visits
                self._cas_slot(cur, pos, old, txn)
                continue
            if t is ENode:
                self.complete_expansion(old)
            return RESTART, visits

    def _compress(self, cur, lev, h, path):
        """Unlink ``cur`` (and then its emptied ancestors) if it holds nothing."""
        while lev > 0:
            for slot in cur:
                if slot is not None:
                    return
            prev = path.pop()
            ppos = (h >> (lev - 4)) & (len(prev) - 1)
            en = ENode(prev, ppos, cur, h, lev, compress=True)
            if not self._cas_slot(prev, ppos, cur, en):
                return
            self.complete_expansion(en)
            if not is_vacant(en.wide):
                return
            cur = prev
            lev -= 4

    # ------------------------------------------------------------------
    # freezing and expansion

    def complete_expansion(self, en: ENode) -> None:
        """Freeze ``en.narrow``, publish its replacement, commit it in the parent.

        Idempotent; any number of threads may help the same ENode.
        """
        self.freeze(en.narrow)
        wide = en.wide
        if wide is None:
            wide = rebuild(en.narrow, en.level)
            if not self._cas_wide(en, None, wide):
                wide = en.wide
        replacement = None if en.compress and is_vacant(wide) else wide
        self._cas_slot(en.parent, en.parentpos, en, replacement)
        if self.hook is not None:
            self.hook("expanded", en)

    def freeze(self, cur: list) -> None:
        """Make ``cur`` and its whole subtree immutable.

        On return every slot is FV, an FNode wrapping a frozen child, or a leaf
        whose ``txn`` is FROZEN.  Pending leaf transactions are committed and
        nested expansions completed first.
        """
        cas_slot_ = self._cas_slot
        i = 0
        n = len(cur)
        while i < n:
            node = cur[i]
            if node is None:
                if cas_slot_(cur, i, None, FV):
                    i += 1
                continue
            t = type(node)
            if t is SNode or t is LNode:
                txn = node.txn
                if txn is NO_TXN:
                    if self._cas_txn(node, NO_TXN, FROZEN):
                        i += 1
                    continue
                if txn is not FROZEN:
                    cas_slot_(cur, i, node, txn)
                    continue
            elif t is list:
                cas_slot_(cur, i, node, FNode(node))
                continue
            elif t is FNode:
                self.freeze(node.frozen)
            elif t is ENode:
                self.complete_expansion(node)
                continue
            i += 1
        if self.hook is not None:
            self.hook("frozen", cur)

    # ------------------------------------------------------------------

    def cas_cache_head(self, expect, new) -> bool:
        ok = cas_attr(self, "cache_head", expect, new)
        if self.hook is not None:
            self.hook("cas", "head", self, None, expect, new, ok)
        return ok

    def cache_level(self) -> int | None:
        head = self.cache_head
        return None if head is None else head[0].level

    def __repr__(self) -> str:
        return f"CacheTrie(cached={self.cached}, cache_level={self.cache_level()})"


# ----------------------------------------------------------------------
# private node construction (no CAS: nodes are unpublished)


def copy_leaf(leaf):
    """Fresh, un-transacted copy of a leaf."""
    if type(leaf) is SNode:
        return SNode(leaf.hash, leaf.key, leaf.value)
    return LNode(leaf.hash, leaf.entries)


def merge_leaves(leaves) -> LNode:
    entries = []
    for leaf in leaves:
        if type(leaf) is SNode:
            entries.append((leaf.key, leaf.value))
        else:
            entries.extend(leaf.entries)
    return LNode(leaves[0].hash, tuple(entries))


def create_anode(a, b, level: int):
    """Node at ``level`` holding two colliding leaves.

    Narrow when their 2-bit positions differ, wide otherwise; a wide node
    whose two leaves share the 4-bit chunk holds a nested node one level
    down.  Past the last hash bit the pair becomes an LNode.
    """
    return build_node([a, b], level)


def build_node(leaves: list, level: int, width: int | None = None):
    if level >= HASH_BITS:
        return merge_leaves(leaves)
    if width is None:
        narrow_positions = {(leaf.hash >> level) & (NARROW - 1) for leaf in leaves}
        width = NARROW if len(narrow_positions) == len(leaves) else WIDE
    node = [None] * width
    groups: dict[int, list] = {}
    for leaf in leaves:
        groups.setdefault((leaf.hash >> level) & (width - 1), []).append(leaf)
    for pos, group in groups.items():
        node[pos] = group[0] if len(group) == 1 else build_node(group, level + 4)
    return node


def frozen_leaves(node: list, out: list) -> list:
    """Fresh copies of the leaves in a frozen subtree."""
    for slot in node:
        t = type(slot)
        if t is SNode or t is LNode:
            out.append(copy_leaf(slot))
        elif t is FNode:
            frozen_leaves(slot.frozen, out)
    return out


def rebuild(frozen: list, level: int) -> list:
    """Wide node at ``level`` with exactly the leaves of ``frozen``."""
    return build_node(frozen_leaves(frozen, []), level, WIDE)


def is_vacant(node) -> bool:
    for slot in node:
        if slot is not None:
            return False
    return True


def _instrumented(hook: EventHook):
    def slot(array, index, expect, new):
        ok = cas_slot(array, index, expect, new)
        hook("cas", "slot", array, index, expect, new, ok)
        return ok

    def txn(node, expect, new):
        ok = cas_txn(node, expect, new)
        hook("cas", "txn", node, None, expect, new, ok)
        return ok

    def wide(enode, expect, new):
        ok = cas_wide(enode, expect, new)
        hook("cas", "wide", enode, None, expect, new, ok)
        return ok

    return slot, txn, wide
