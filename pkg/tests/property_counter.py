"""Counts examples that completed each property test (used by the acceptance run)."""

from collections import Counter

COUNTS: Counter = Counter()


def tick(name: str) -> None:
    COUNTS[name] += 1


def total() -> int:
    return sum(COUNTS.values())


def reset() -> None:
    COUNTS.clear()
