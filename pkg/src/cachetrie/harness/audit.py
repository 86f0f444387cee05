"""Scripted workloads followed by structural and statistical audits."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from cachetrie.analysis import compare_distributions, empirical_histogram
from cachetrie.invariants import check_cache_coherence, validate_invariants
from cachetrie.nodes import HASH_MASK, default_hash
from cachetrie.trie import CacheTrie, is_vacant


def constant_hash(key) -> int:
    """Every key collides on all 64 bits."""
    return 0x5DEECE66D


def clustered_hash(key) -> int:
    """Uniform hash with the low 12 bits cleared, so every key sits at level 12 or deeper."""
    return (default_hash(key) << 12) & HASH_MASK


HASHES = {"uniform": None, "constant": constant_hash, "clustered": clustered_hash}


def tv_threshold(n: int) -> float:
    """Total-variation tolerance: 0.02, loosened for small samples."""
    return max(0.02, 2.0 / math.sqrt(n))


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""

    def __str__(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


@dataclass
class AuditReport:
    keys: int
    seed: int
    hash: str
    variant: str
    checks: list[Check] = field(default_factory=list)
    expansions: int = 0
    tv_distance: float | None = None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def to_dict(self) -> dict:
        return {
            "keys": self.keys, "seed": self.seed, "hash": self.hash, "variant": self.variant,
            "ok": self.ok, "expansions": self.expansions, "tv_distance": self.tv_distance,
            "checks": [{"name": c.name, "ok": c.ok, "detail": c.detail} for c in self.checks],
        }


def _structure(report: AuditReport, trie: CacheTrie, stage: str, expected_keys: int) -> None:
    inv = validate_invariants(trie)
    detail = "; ".join(str(v) for v in inv.violations[:5])
    report.checks.append(Check(f"{stage}: invariants", inv.ok, detail))
    report.checks.append(Check(f"{stage}: key count", inv.keys == expected_keys,
                               f"{inv.keys} keys, expected {expected_keys}"))
    stale = check_cache_coherence(trie)
    report.checks.append(Check(f"{stage}: cache coherence", not stale,
                               "; ".join(str(v) for v in stale[:5])))


def run_audit(keys: int = 10_000, seed: int = 0, *, hash: str = "uniform",
              variant: str = "cached", expect_uniform: bool | None = None) -> AuditReport:
    """Build a trie from a scripted workload and audit it at each quiescent point.

    Stages: insert ``keys`` keys (expansions happen as narrow nodes fill),
    look every key up, remove half, then remove the rest.  After each stage
    the invariants, key count and cache coherence are checked.  With
    ``expect_uniform`` (default: on for the uniform hash) the full trie's
    depth histogram is compared with the analytic distribution.
    """
    if hash not in HASHES:
        raise ValueError(f"hash must be one of {sorted(HASHES)}, got {hash!r}")
    if keys < 0:
        raise ValueError("keys must be >= 0")
    if expect_uniform is None:
        expect_uniform = hash == "uniform"
    report = AuditReport(keys, seed, hash, variant)

    def hook(event, *details):
        if event == "expanded" and not details[0].compress:
            report.expansions += 1

    trie = CacheTrie(HASHES[hash], cached=variant == "cached", seed=seed, hook=hook)
    rng = random.Random(seed)
    universe = rng.sample(range(1 << 48), keys)
    values = {k: rng.getrandbits(32) for k in universe}

    for k in universe:
        trie.insert(k, values[k])
    for k in universe:
        trie.lookup(k)
    wrong = sum(1 for k in universe if trie.lookup(k, None) != values[k])
    report.checks.append(Check("populated: lookups", wrong == 0, f"{wrong} wrong"))
    _structure(report, trie, "populated", keys)

    if expect_uniform and keys:
        tv = compare_distributions(empirical_histogram(trie), keys)
        report.tv_distance = tv
        limit = tv_threshold(keys)
        report.checks.append(Check("populated: depth distribution", tv < limit,
                                   f"TV {tv:.4f} vs limit {limit:.4f}"))

    rng.shuffle(universe)
    half = keys // 2
    wrong = sum(1 for k in universe[:half] if trie.remove(k, None) != values[k])
    report.checks.append(Check("half removed: removals", wrong == 0, f"{wrong} wrong"))
    _structure(report, trie, "half removed", keys - half)

    wrong = sum(1 for k in universe[half:] if trie.remove(k, None) != values[k])
    report.checks.append(Check("emptied: removals", wrong == 0, f"{wrong} wrong"))
    _structure(report, trie, "emptied", 0)
    report.checks.append(Check("emptied: root vacant", is_vacant(trie.root),
                               "" if is_vacant(trie.root) else repr(trie.root)))
    return report
