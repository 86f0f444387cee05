"""Randomised concurrent workloads that record a timed history."""

from __future__ import annotations

import itertools
import os
import random
import threading
from dataclasses import dataclass

from cachetrie.harness.workload import WorkloadConfig, make_trie, partition, split_ops

INSERT = "insert"
REMOVE = "remove"
LOOKUP = "lookup"


@dataclass(frozen=True)
class OpRecord:
    """One completed operation.

    ``arg`` is the inserted value (``None`` for lookup and remove);
    ``result`` is the returned binding, ``None`` when absent.  Ticks come
    from one process-wide counter, so they are totally ordered and
    consistent with real time.
    """

    thread_id: int
    op: str
    key: int
    arg: int | None
    result: int | None
    invoke: int
    response: int

    def __post_init__(self) -> None:
        if self.invoke >= self.response:
            raise ValueError(f"invocation tick {self.invoke} not before response {self.response}")

    def to_dict(self) -> dict:
        return {"thread_id": self.thread_id, "op": self.op, "key": self.key, "arg": self.arg,
                "result": self.result, "invoke": self.invoke, "response": self.response}

    @classmethod
    def from_dict(cls, d: dict) -> OpRecord:
        return cls(int(d["thread_id"]), d["op"], int(d["key"]), d.get("arg"), d.get("result"),
                   int(d["invoke"]), int(d["response"]))


def yielding_hook(rate: float, seed: int):
    """Trie event hook that yields the interpreter lock after some CASes.

    On a machine with few cores the OS time slice is far longer than one
    trie operation, so without explicit yields threads would interleave
    only every few hundred operations.  Yielding right after a CAS lets
    other threads observe announced-but-uncommitted transactions, pending
    expansions and frozen nodes.
    """
    rng = random.Random(seed)
    draw = rng.random
    sched_yield = os.sched_yield

    def hook(event, *details):
        if draw() < rate:
            sched_yield()

    return hook


def _op_kinds(workload: str) -> tuple[str, ...]:
    if workload == "mixed":
        return (INSERT, REMOVE, LOOKUP)
    # canonical constants so the worker can dispatch on identity
    return ({INSERT: INSERT, REMOVE: REMOVE, LOOKUP: LOOKUP}[workload],)


def _stress_worker(trie, tid, pool, n_ops, kinds, seed, yield_rate, tick, out, barrier) -> None:
    rng = random.Random((seed << 8) ^ tid)
    plan = [(rng.choice(kinds), pool[rng.randrange(len(pool))], rng.random() < yield_rate)
            for _ in range(n_ops)]
    sched_yield = os.sched_yield
    insert, remove, lookup = trie.insert, trie.remove, trie.lookup
    # values are unique per history, so a returned value names its writer
    base = (tid + 1) << 40
    raw = []
    append = raw.append
    barrier.wait()
    for seq, (kind, key, pause) in enumerate(plan):
        if pause:
            sched_yield()
        if kind is INSERT:
            value = base | seq
            t0 = next(tick)
            r = insert(key, value)
            append((kind, key, value, r, t0, next(tick)))
        elif kind is REMOVE:
            t0 = next(tick)
            r = remove(key)
            append((kind, key, None, r, t0, next(tick)))
        else:
            t0 = next(tick)
            r = lookup(key)
            append((kind, key, None, r, t0, next(tick)))
    out[tid] = raw


def run_stress(config: WorkloadConfig, *, hash_fn=None, yield_rate: float = 0.3,
               trie=None, **trie_options) -> list[OpRecord]:
    """Run ``config.total_ops`` random operations split over the threads.

    ``hash_fn`` replaces the trie's hash (a clustered hash drives small key
    sets deep enough to exercise the cache) and ``trie_options`` go to the
    trie constructor.  ``yield_rate`` is the
    probability of yielding to another thread before an operation and after
    each CAS inside one.  Returns the history sorted by invocation tick.
    """
    config.validate()
    keys = list(range(config.keys))
    if trie is None:
        hook = yielding_hook(yield_rate, config.seed) if yield_rate > 0 else None
        trie = make_trie(config, hash_fn=hash_fn, hook=hook, **trie_options)
    pools = partition(keys, config.threads) if config.contention == "disjoint" else [keys] * config.threads
    counts = split_ops(config.total_ops, config.threads)
    kinds = _op_kinds(config.workload)
    tick = itertools.count(1)
    out: list = [None] * config.threads
    barrier = threading.Barrier(config.threads)
    threads = [
        threading.Thread(target=_stress_worker,
                         args=(trie, tid, pools[tid], counts[tid], kinds, config.seed, yield_rate,
                               tick, out, barrier))
        for tid in range(config.threads)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    history = [
        OpRecord(tid, kind, key, arg, result, t0, t1)
        for tid, raw in enumerate(out)
        for kind, key, arg, result, t0, t1 in raw
    ]
    history.sort(key=lambda r: r.invoke)
    return history
