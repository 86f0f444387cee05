"""Throughput benchmark over a shared trie."""

from __future__ import annotations

import random
import threading
import time
from dataclasses import asdict, dataclass, field

from cachetrie.invariants import iter_leaves
from cachetrie.nodes import LNode
from cachetrie.trie import CacheTrie

WORKLOADS = ("insert", "lookup", "remove", "mixed")
CONTENTIONS = ("shared", "disjoint")
VARIANTS = ("cached", "uncached")

CSV_HEADER = ("variant,threads,keys,ops,workload,contention,seed,"
              "ops_per_sec,mean_visits,p99_visits,cache_hits,cache_misses,cache_level")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorkloadConfig:
    """One benchmark or stress run.

    ``ops`` is the total operation count over all threads; ``None`` means one
    operation per key.
    """

    threads: int = 1
    keys: int = 10_000
    ops: int | None = None
    workload: str = "insert"
    contention: str = "shared"
    seed: int = 0
    variant: str = "cached"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads!r}")
        if not isinstance(self.keys, int) or self.keys < 1:
            raise ConfigError(f"keys must be >= 1, got {self.keys!r}")
        if self.ops is not None and (not isinstance(self.ops, int) or self.ops < 0):
            raise ConfigError(f"ops must be >= 0, got {self.ops!r}")
        if self.workload not in WORKLOADS:
            raise ConfigError(f"workload must be one of {WORKLOADS}, got {self.workload!r}")
        if self.contention not in CONTENTIONS:
            raise ConfigError(f"contention must be one of {CONTENTIONS}, got {self.contention!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned int, got {self.seed!r}")
        if self.contention == "disjoint" and self.keys < self.threads:
            raise ConfigError("disjoint contention needs at least one key per thread")

    @property
    def total_ops(self) -> int:
        return self.keys if self.ops is None else self.ops


def key_universe(config: WorkloadConfig) -> list[int]:
    """Deterministic distinct keys for ``config.seed``."""
    return random.Random(config.seed).sample(range(1 << 48), config.keys)


def partition(items: list, parts: int) -> list[list]:
    """Split into ``parts`` contiguous slices whose sizes differ by at most one."""
    q, r = divmod(len(items), parts)
    out, start = [], 0
    for i in range(parts):
        end = start + q + (1 if i < r else 0)
        out.append(items[start:end])
        start = end
    return out


def split_ops(total: int, parts: int) -> list[int]:
    q, r = divmod(total, parts)
    return [q + (1 if i < r else 0) for i in range(parts)]


def make_trie(config: WorkloadConfig, **kwargs) -> CacheTrie:
    return CacheTrie(cached=config.variant == "cached", seed=config.seed, **kwargs)


def count_keys(trie: CacheTrie) -> int:
    return sum(len(leaf.entries) if type(leaf) is LNode else 1 for _, leaf in iter_leaves(trie.root))


@dataclass
class BenchmarkReport:
    variant: str
    threads: int
    keys: int
    ops: int
    workload: str
    contention: str
    seed: int
    ops_per_sec: float
    mean_visits: float
    p99_visits: float
    cache_hits: int
    cache_misses: int
    cache_level: int | None
    total_ops: int = 0
    elapsed: float = 0.0
    final_keys: int = 0
    hit_rate: float = 0.0
    level_history: list = field(default_factory=list)

    def csv_row(self) -> str:
        level = "" if self.cache_level is None else str(self.cache_level)
        return ",".join([
            self.variant, str(self.threads), str(self.keys), str(self.ops), self.workload,
            self.contention, str(self.seed), f"{self.ops_per_sec:.1f}",
            f"{self.mean_visits:.4f}", f"{self.p99_visits:g}",
            str(self.cache_hits), str(self.cache_misses), level,
        ])

    def to_dict(self) -> dict:
        return asdict(self)


def _thread_plan(config: WorkloadConfig, keys: list[int]) -> list[tuple[list[int], int]]:
    """Per-thread (key pool, op count)."""
    counts = split_ops(config.total_ops, config.threads)
    if config.contention == "disjoint":
        return list(zip(partition(keys, config.threads), counts))
    return [(keys, c) for c in counts]


def _prefill(trie: CacheTrie, config: WorkloadConfig, keys: list[int]) -> None:
    if config.workload == "insert":
        return
    pool = keys if config.workload != "mixed" else keys[::2]
    for k in pool:
        trie.insert(k, k)
    # warm the cache with one untimed lookup pass
    for k in keys:
        trie.lookup(k)


def _worker(trie: CacheTrie, workload: str, pool: list[int], n_ops: int, seed: int,
            tid: int, barrier: threading.Barrier) -> None:
    rng = random.Random((seed << 8) ^ tid)
    insert, lookup, remove = trie.insert, trie.lookup, trie.remove
    if workload == "insert":
        # insert each key of the pool once per pass, in a seeded order
        order = pool[:]
        rng.shuffle(order)
        plan = [order[i % len(order)] for i in range(n_ops)] if order else []
    else:
        plan = [pool[rng.randrange(len(pool))] for _ in range(n_ops)]
    kinds = [rng.random() for _ in range(n_ops)] if workload == "mixed" else None
    barrier.wait()
    if workload == "insert":
        for k in plan:
            insert(k, k)
    elif workload == "lookup":
        for k in plan:
            lookup(k)
    elif workload == "remove":
        for k in plan:
            remove(k)
    else:
        for k, x in zip(plan, kinds):
            if x < 0.5:
                lookup(k)
            elif x < 0.75:
                insert(k, k)
            else:
                remove(k)


def run_benchmark(config: WorkloadConfig) -> BenchmarkReport:
    """Run ``config`` and report throughput, node visits and cache activity.

    Non-insert workloads start from a prefilled trie (every key, or every
    other key for ``mixed``) warmed by one lookup pass; only the measured
    phase is timed and instrumented.  ``mixed`` is 50% lookups, 25%
    inserts and 25% removes.
    """
    config.validate()
    keys = key_universe(config)
    trie = make_trie(config)
    _prefill(trie, config, keys)
    hits0, misses0 = trie.stats.hits, trie.stats.misses
    trie.visit_log = []
    plan = _thread_plan(config, keys)
    barrier = threading.Barrier(config.threads + 1)
    threads = [
        threading.Thread(target=_worker, args=(trie, config.workload, pool, n, config.seed, tid, barrier))
        for tid, (pool, n) in enumerate(plan)
    ]
    for t in threads:
        t.start()
    barrier.wait()
    start = time.perf_counter()
    for t in threads:
        t.join()
    elapsed = time.perf_counter() - start
    visits = sorted(trie.visit_log)
    trie.visit_log = None
    total = len(visits)
    hits = trie.stats.hits - hits0
    misses = trie.stats.misses - misses0
    return BenchmarkReport(
        variant=config.variant,
        threads=config.threads,
        keys=config.keys,
        ops=config.total_ops,
        workload=config.workload,
        contention=config.contention,
        seed=config.seed,
        ops_per_sec=total / elapsed if elapsed > 0 else 0.0,
        mean_visits=sum(visits) / total if total else 0.0,
        p99_visits=visits[min(total - 1, int(0.99 * total))] if total else 0.0,
        cache_hits=hits,
        cache_misses=misses,
        cache_level=trie.cache_level(),
        total_ops=total,
        elapsed=elapsed,
        final_keys=count_keys(trie),
        hit_rate=hits / total if total else 0.0,
        level_history=list(trie.stats.level_history),
    )
