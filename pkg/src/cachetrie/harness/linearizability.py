"""Per-key linearizability checking of map histories.

Every map operation touches one key, and operations on distinct keys act on
disjoint sub-objects, so a history is linearizable iff each per-key
subhistory is linearizable against a single-cell specification:

* ``insert(k, v)`` returns the prior binding and binds ``v``;
* ``remove(k)`` returns the prior binding and unbinds;
* ``lookup(k)`` returns the current binding.

``None`` stands for "absent".  Each per-key subhistory is checked by a
sweep over call and return events that keeps every reachable configuration
``(cell state, operations linearised but not yet returned)``.  At a return
event the configuration set is closed under linearising pending
operations, then filtered to those where the returning operation took
effect.  An empty set means no linearisation exists.  The configuration
count is bounded by the number of concurrently pending operations, which
for a thread-per-operation history is at most the thread count.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from cachetrie.harness.stress import INSERT, LOOKUP, REMOVE, OpRecord


@dataclass
class Verdict:
    ok: bool
    key: int | None = None
    records: list[OpRecord] = field(default_factory=list)
    reason: str = ""
    keys_checked: int = 0

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return f"linearizable ({self.keys_checked} keys)"
        lines = [f"not linearizable at key {self.key}: {self.reason}"]
        lines += [f"  {r}" for r in self.records]
        return "\n".join(lines)


def _apply(op: OpRecord, state):
    """Next cell state if ``op`` may take effect on ``state``, else a miss."""
    if op.result != state:
        return _MISS
    if op.op == INSERT:
        return op.arg
    if op.op == REMOVE:
        return None
    return state


_MISS = object()


def check_key(records: list[OpRecord], initial=None) -> tuple[bool, list[OpRecord], str]:
    """Check one key's subhistory; returns ``(ok, offending records, reason)``."""
    events = []
    for i, r in enumerate(records):
        # calls sort before returns at equal ticks: such operations overlap
        events.append((r.invoke, 0, i))
        events.append((r.response, 1, i))
    events.sort()
    pending: set[int] = set()
    configs: set[tuple] = {(initial, frozenset())}
    for _, kind, i in events:
        if kind == 0:
            pending.add(i)
            continue
        closed = _closure(configs, pending, records)
        configs = {(state, done - {i}) for state, done in closed if i in done}
        if not configs:
            window = _window(records, pending)
            return False, window, f"no linearization explains {records[i].op} returning {records[i].result!r}"
        pending.discard(i)
    return True, [], ""


def _window(records: list[OpRecord], pending: set, context: int = 3) -> list[OpRecord]:
    """Pending operations at a failure plus the last few that completed before them."""
    start = min(records[j].invoke for j in pending)
    before = sorted((r for r in records if r.response < start), key=lambda r: r.response)[-context:]
    return before + sorted((records[j] for j in pending), key=lambda r: r.invoke)


def _closure(configs: set, pending: set, records: list[OpRecord]) -> set:
    seen = set(configs)
    frontier = list(configs)
    while frontier:
        state, done = frontier.pop()
        for j in pending:
            if j in done:
                continue
            nxt = _apply(records[j], state)
            if nxt is _MISS:
                continue
            c = (nxt, done | {j})
            if c not in seen:
                seen.add(c)
                frontier.append(c)
    return seen


def well_formed(history: list[OpRecord]) -> str | None:
    """Reason the history cannot be checked, or ``None``."""
    per_thread = defaultdict(list)
    for r in history:
        if r.op not in (INSERT, REMOVE, LOOKUP):
            return f"unknown operation {r.op!r}"
        if r.invoke >= r.response:
            return f"record {r} responds before it is invoked"
        per_thread[r.thread_id].append(r)
    for tid, rs in per_thread.items():
        rs.sort(key=lambda r: r.invoke)
        for a, b in zip(rs, rs[1:]):
            if b.invoke < a.response:
                return f"thread {tid} has overlapping operations {a} and {b}"
    return None


def check_linearizability(history: list[OpRecord], initial: dict | None = None) -> Verdict:
    """Accept iff every per-key subhistory of ``history`` is linearizable.

    ``initial`` maps keys to their binding before the history starts
    (absent by default).  On rejection the verdict names the first key (in
    key order) that fails, with the operations pending at the failure.
    """
    problem = well_formed(history)
    if problem is not None:
        return Verdict(False, None, [], f"malformed history: {problem}")
    by_key = defaultdict(list)
    for r in history:
        by_key[r.key].append(r)
    initial = initial or {}
    for key in sorted(by_key):
        ok, window, reason = check_key(by_key[key], initial.get(key))
        if not ok:
            return Verdict(False, key, window, reason, len(by_key))
    return Verdict(True, keys_checked=len(by_key))
