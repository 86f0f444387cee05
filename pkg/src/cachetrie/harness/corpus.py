"""Hand-built histories with known linearizability verdicts.

Each entry is ``(name, history)``.  Ticks are chosen so the intended
overlaps (or their absence) are explicit.
"""

from __future__ import annotations

from cachetrie.harness.stress import INSERT, LOOKUP, REMOVE, OpRecord


def _op(tid, op, key, arg, result, invoke, response) -> OpRecord:
    return OpRecord(tid, op, key, arg, result, invoke, response)


def good_histories() -> list[tuple[str, list[OpRecord]]]:
    return [
        ("empty", []),
        ("insert then lookup", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(0, LOOKUP, 1, None, 10, 3, 4),
        ]),
        ("lookup of absent key", [
            _op(0, LOOKUP, 7, None, None, 1, 2),
        ]),
        ("overwrite returns prior", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(1, INSERT, 1, 20, 10, 3, 4),
            _op(0, REMOVE, 1, None, 20, 5, 6),
            _op(1, LOOKUP, 1, None, None, 7, 8),
        ]),
        ("concurrent lookup sees either side of insert", [
            _op(0, INSERT, 1, 10, None, 1, 4),
            _op(1, LOOKUP, 1, None, None, 2, 3),
            _op(2, LOOKUP, 1, None, 10, 2, 5),
        ]),
        ("concurrent inserts order chosen by results", [
            _op(0, INSERT, 1, 10, 20, 1, 4),
            _op(1, INSERT, 1, 20, None, 2, 3),
            _op(2, LOOKUP, 1, None, 10, 5, 6),
        ]),
        ("concurrent removes, one wins", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(1, REMOVE, 1, None, 10, 3, 6),
            _op(2, REMOVE, 1, None, None, 4, 5),
        ]),
        ("linearization point late in a long operation", [
            _op(0, INSERT, 1, 10, None, 1, 10),
            _op(1, LOOKUP, 1, None, None, 2, 3),
            _op(1, LOOKUP, 1, None, None, 4, 5),
            _op(1, LOOKUP, 1, None, 10, 6, 7),
        ]),
        ("independent keys", [
            _op(0, INSERT, 1, 10, None, 1, 3),
            _op(1, INSERT, 2, 20, None, 2, 4),
            _op(0, LOOKUP, 2, None, 20, 5, 6),
            _op(1, REMOVE, 1, None, 10, 5, 7),
        ]),
    ]


def bad_histories() -> list[tuple[str, list[OpRecord]]]:
    return [
        ("lookup after completed remove returns value", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(0, REMOVE, 1, None, 10, 3, 4),
            _op(1, LOOKUP, 1, None, 10, 5, 6),
        ]),
        ("lookup misses completed insert", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(1, LOOKUP, 1, None, None, 3, 4),
        ]),
        ("insert reports wrong prior", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(1, INSERT, 1, 20, None, 3, 4),
        ]),
        ("value never written", [
            _op(0, LOOKUP, 1, None, 99, 1, 2),
        ]),
        ("two sequential removes both succeed", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(0, REMOVE, 1, None, 10, 3, 4),
            _op(1, REMOVE, 1, None, 10, 5, 6),
        ]),
        ("concurrent removes both succeed", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(1, REMOVE, 1, None, 10, 3, 6),
            _op(2, REMOVE, 1, None, 10, 4, 5),
        ]),
        ("new-old inversion between readers", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(0, INSERT, 1, 20, 10, 3, 10),
            _op(1, LOOKUP, 1, None, 20, 4, 5),
            _op(2, LOOKUP, 1, None, 10, 6, 7),
        ]),
        ("lookup sees stale value after overwrite completed", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(1, INSERT, 1, 20, 10, 3, 4),
            _op(2, LOOKUP, 1, None, 10, 5, 6),
        ]),
        ("both concurrent inserts see absent", [
            _op(0, INSERT, 1, 10, None, 1, 4),
            _op(1, INSERT, 1, 20, None, 2, 3),
        ]),
        ("lookup reads value of a later insert", [
            _op(1, LOOKUP, 1, None, 10, 1, 2),
            _op(0, INSERT, 1, 10, None, 3, 4),
        ]),
        ("thread with overlapping operations", [
            _op(0, INSERT, 1, 10, None, 1, 4),
            _op(0, LOOKUP, 1, None, 10, 2, 3),
        ]),
        ("cross-key failure hidden among good keys", [
            _op(0, INSERT, 1, 10, None, 1, 2),
            _op(1, INSERT, 2, 20, None, 1, 3),
            _op(0, LOOKUP, 2, None, 20, 4, 5),
            _op(1, REMOVE, 1, None, 10, 4, 6),
            _op(2, LOOKUP, 1, None, 10, 7, 8),
        ]),
    ]
