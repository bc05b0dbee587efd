"""Brute-force set semantics for name patterns over a finite universe of DNS names.

Denotations are computed from the pattern text with plain string operations and
stored as integer bitmasks over the universe, independent of the library code.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

ALPHABET = ("a", "b", "com", "x", "www")
MAX_DEPTH = 4

UNIVERSE: tuple[str, ...] = tuple(
    ".".join(labels)
    for depth in range(1, MAX_DEPTH + 1)
    for labels in itertools.product(ALPHABET, repeat=depth)
)
INDEX = {name: i for i, name in enumerate(UNIVERSE)}
ALL = (1 << len(UNIVERSE)) - 1

SUFFIXES = tuple(n for n in UNIVERSE if n.count(".") < MAX_DEPTH - 1)
PATTERN_TEXTS: tuple[str, ...] = UNIVERSE + tuple("*." + s for s in SUFFIXES) + tuple("." + s for s in SUFFIXES)


def text_matches(pattern: str, name: str) -> bool:
    if pattern.startswith("*."):
        suffix = pattern[2:]
        return name.endswith("." + suffix) and name.count(".") == suffix.count(".") + 1
    if pattern.startswith("."):
        return name.endswith(pattern)
    return name == pattern


@lru_cache(maxsize=None)
def pattern_mask(pattern: str) -> int:
    mask = 0
    for i, name in enumerate(UNIVERSE):
        if text_matches(pattern, name):
            mask |= 1 << i
    return mask


def set_mask(texts) -> int:
    """``texts`` is None for the universal set."""
    if texts is None:
        return ALL
    mask = 0
    for t in texts:
        mask |= pattern_mask(t)
    return mask


def shallow(pattern: str) -> bool:
    """Patterns whose denotation is not truncated by the depth bound."""
    if pattern.startswith("*."):
        return pattern[2:].count(".") <= MAX_DEPTH - 3
    if pattern.startswith("."):
        return pattern[1:].count(".") <= MAX_DEPTH - 3
    return True
