import random

import pytest

from cachetrie import CacheTrie
from cachetrie.nodes import HASH_MASK, default_hash


def chunks(*parts: int) -> int:
    """64-bit hash whose 4-bit chunks, from level 0 upwards, are ``parts``."""
    h = 0
    for i, c in enumerate(parts):
        assert 0 <= c < 16
        h |= c << (4 * i)
    return h


def identity(key: int) -> int:
    return key & HASH_MASK


def clustered(key) -> int:
    """Uniform hash with the low 12 bits cleared: every key lives at level >= 12."""
    return (default_hash(key) << 12) & HASH_MASK


@pytest.fixture
def id_trie():
    """Trie whose keys are their own hashes, for hand-placed keys."""
    return CacheTrie(identity, seed=0)


@pytest.fixture
def rng():
    return random.Random(1234)


# acceptance criteria record one summary line each; printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
