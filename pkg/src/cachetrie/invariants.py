"""Structural audits of a quiescent trie and its cache."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator

from cachetrie.cache import cache_chain
from cachetrie.nodes import FROZEN, FV, NARROW, NO_TXN, WIDE, ENode, FNode, LNode, SNode


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class Violation:
    invariant: str
    path: tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        return f"{self.invariant} at path {list(self.path)}: {self.detail}"


@dataclass
class InvariantReport:
    violations: list[Violation] = field(default_factory=list)
    node_counts: Counter = field(default_factory=Counter)
    depth_counts: Counter = field(default_factory=Counter)
    keys: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None

    def raise_if_invalid(self) -> None:
        if self.violations:
            raise InvariantViolation(str(self.first))


def iter_leaves(root: list) -> Iterator[tuple[int, object]]:
    """Yield ``(depth, leaf)`` for every SNode/LNode reachable through A-nodes.

    Only meaningful at quiescence; protocol nodes are not followed.
    """
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        for slot in node:
            t = type(slot)
            if t is SNode or t is LNode:
                yield depth, slot
            elif t is list:
                stack.append((slot, depth + 1))


def validate_invariants(trie) -> InvariantReport:
    """Check the validity invariants of a quiescent trie.

    * INV1: the root is a wide A-node.
    * INV2: every child is empty, a leaf, or an A-node of width 4 or 16.
    * INV3: every leaf hash agrees with the slot indices on its path.

    Also flags protocol residue (ENode, FNode, FV, non-``NO_TXN`` leaves),
    stale leaf hashes, malformed LNodes and duplicate keys.
    """
    report = InvariantReport()
    bad = report.violations.append
    root = trie.root
    if type(root) is not list or len(root) != WIDE:
        bad(Violation("INV1", (), f"root is {type(root).__name__} of length "
                                  f"{len(root) if isinstance(root, list) else '-'}"))
        return report
    hash_fn = trie.hash_fn
    seen_keys: set = set()
    # (node, level, path, constraints) where constraints are (level, width, index)
    stack = [(root, 0, (), ())]
    while stack:
        node, level, path, constraints = stack.pop()
        report.node_counts["anode_wide" if len(node) == WIDE else "anode_narrow"] += 1
        for i, slot in enumerate(node):
            here = path + (i,)
            cons = constraints + ((level, len(node), i),)
            if slot is None:
                report.node_counts["empty"] += 1
                continue
            t = type(slot)
            if t is list:
                if len(slot) not in (NARROW, WIDE):
                    bad(Violation("INV2", here, f"A-node of width {len(slot)}"))
                    continue
                if level + 4 >= 64:
                    bad(Violation("INV2", here, "A-node below the last hash chunk"))
                    continue
                stack.append((slot, level + 4, here, cons))
            elif t is SNode or t is LNode:
                _check_leaf(slot, here, cons, level // 4, hash_fn, seen_keys, report)
            elif slot is FV or t is FNode or t is ENode:
                bad(Violation("residue", here, f"protocol node {slot!r} at quiescence"))
            else:
                bad(Violation("INV2", here, f"unexpected slot content {slot!r}"))
    return report


def _check_leaf(leaf, path, constraints, depth, hash_fn, seen_keys, report) -> None:
    bad = report.violations.append
    kind = "snode" if type(leaf) is SNode else "lnode"
    report.node_counts[kind] += 1
    if leaf.txn is not NO_TXN:
        label = "frozen" if leaf.txn is FROZEN else "pending txn"
        bad(Violation("residue", path, f"{label} leaf {leaf!r}"))
    h = leaf.hash
    for level, width, index in constraints:
        if (h >> level) & (width - 1) != index:
            bad(Violation("INV3", path, f"hash {h:#018x} does not select slot {index} "
                                        f"at level {level}"))
            break
    entries = [(leaf.key, leaf.value)] if kind == "snode" else list(leaf.entries)
    if kind == "lnode" and len(entries) < 2:
        bad(Violation("lnode", path, f"LNode with {len(entries)} entries"))
    for key, _ in entries:
        if hash_fn(key) != h:
            bad(Violation("hash", path, f"stored hash {h:#x} != hash({key!r})"))
        if key in seen_keys:
            bad(Violation("duplicate", path, f"key {key!r} stored twice"))
        seen_keys.add(key)
        report.depth_counts[depth] += 1
        report.keys += 1


def check_cache_coherence(trie) -> list[Violation]:
    """Every live cache entry must be the trie node at the cache's level.

    Live means an SNode with ``NO_TXN`` or an A-node with a non-frozen slot;
    anything else is a stale entry that the fast paths already skip.
    """
    violations = []
    for cache in cache_chain(trie):
        level = cache[0].level
        if len(cache) != 1 + (1 << level):
            violations.append(Violation("cache", (level,), f"cache length {len(cache)}"))
            continue
        for j in range(1, len(cache)):
            entry = cache[j]
            if entry is None or not _is_live(entry):
                continue
            found = _node_at(trie.root, j - 1, level)
            if found is not entry:
                violations.append(Violation(
                    "cache", (level, j - 1),
                    f"live entry {entry!r} is not the trie node at level {level} "
                    f"(found {found!r})"))
    return violations


def _is_live(node) -> bool:
    t = type(node)
    if t is SNode:
        return node.txn is NO_TXN
    if t is list:
        for slot in node:
            if slot is FV or type(slot) is FNode:
                continue
            if (type(slot) is SNode or type(slot) is LNode) and slot.txn is FROZEN:
                continue
            return True
    return False


def _node_at(root: list, prefix: int, target_level: int):
    cur = root
    lev = 0
    while True:
        slot = cur[(prefix >> lev) & (len(cur) - 1)]
        if lev + 4 == target_level:
            return slot
        if type(slot) is not list:
            return None
        cur = slot
        lev += 4
