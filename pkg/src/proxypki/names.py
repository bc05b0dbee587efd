"""DNS name patterns and the finite set algebra used for permitted-subtree tracking.

Three pattern forms are supported, written as text:

* ``example.com``   -- exactly that name
* ``*.example.com`` -- any name one label below ``example.com``
* ``.example.com``  -- any proper subdomain of ``example.com``, at any depth

A :class:`NameSet` is either universal or a finite, normalized union of patterns.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

_LABEL = re.compile(r"^[a-z0-9-]+$")


class NameSyntaxError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class DnsName:
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise NameSyntaxError("empty DNS name")
        normalized = tuple(label.lower() for label in self.labels)
        for label in normalized:
            if not _LABEL.match(label):
                raise NameSyntaxError(f"invalid DNS label {label!r}")
        object.__setattr__(self, "labels", normalized)

    @classmethod
    def parse(cls, text: str) -> "DnsName":
        if not text or text.startswith(".") or text.endswith("."):
            raise NameSyntaxError(f"invalid DNS name {text!r}")
        return cls(tuple(text.split(".")))

    def __str__(self) -> str:
        return ".".join(self.labels)

    @property
    def depth(self) -> int:
        return len(self.labels)

    def is_proper_subdomain_of(self, other: "DnsName") -> bool:
        n = len(other.labels)
        return len(self.labels) > n and self.labels[-n:] == other.labels

    def parent(self) -> "DnsName | None":
        return DnsName(self.labels[1:]) if len(self.labels) > 1 else None


@dataclass(frozen=True, order=True)
class Exact:
    name: DnsName

    def __str__(self) -> str:
        return str(self.name)


@dataclass(frozen=True, order=True)
class Wildcard:
    suffix: DnsName

    def __str__(self) -> str:
        return f"*.{self.suffix}"


@dataclass(frozen=True, order=True)
class Subtree:
    suffix: DnsName

    def __str__(self) -> str:
        return f".{self.suffix}"


NamePattern = Union[Exact, Wildcard, Subtree]


def parse_pattern(text: str) -> NamePattern:
    text = text.strip().lower()
    if text.startswith("*."):
        return Wildcard(DnsName.parse(text[2:]))
    if "*" in text:
        raise NameSyntaxError(f"wildcard must be the entire leftmost label: {text!r}")
    if text.startswith("."):
        return Subtree(DnsName.parse(text[1:]))
    return Exact(DnsName.parse(text))


def parse_subject_name(text: str) -> NamePattern:
    """Parse a CN/SAN entry; only exact names and leftmost wildcards are allowed."""
    pattern = parse_pattern(text)
    if isinstance(pattern, Subtree):
        raise NameSyntaxError(f"subject names cannot be subtree constraints: {text!r}")
    return pattern


def parse_constraint(text: str) -> Subtree:
    """Parse a permitted-subtree constraint, which must carry a leading dot."""
    pattern = parse_pattern(text)
    if not isinstance(pattern, Subtree):
        raise NameSyntaxError(f"name constraints must start with '.': {text!r}")
    return pattern


def matches(pattern: NamePattern, name: DnsName) -> bool:
    if isinstance(pattern, Exact):
        return pattern.name == name
    if isinstance(pattern, Wildcard):
        return name.depth == pattern.suffix.depth + 1 and name.is_proper_subdomain_of(pattern.suffix)
    return name.is_proper_subdomain_of(pattern.suffix)


def subsumes(outer: NamePattern, inner: NamePattern) -> bool:
    """True iff every name matched by ``inner`` is matched by ``outer``."""
    if isinstance(inner, Exact):
        return matches(outer, inner.name)
    if isinstance(outer, Exact):
        return False
    if isinstance(inner, Wildcard):
        if isinstance(outer, Wildcard):
            return outer.suffix == inner.suffix
        return inner.suffix == outer.suffix or inner.suffix.is_proper_subdomain_of(outer.suffix)
    # inner is a Subtree: only a Subtree at or above it can cover an unbounded depth
    if isinstance(outer, Wildcard):
        return False
    return inner.suffix == outer.suffix or inner.suffix.is_proper_subdomain_of(outer.suffix)


def _intersect_patterns(a: NamePattern, b: NamePattern) -> NamePattern | None:
    # with these three forms the intersection is always empty or one of the operands
    if subsumes(a, b):
        return b
    if subsumes(b, a):
        return a
    return None


def _normalize(patterns: Iterable[NamePattern]) -> frozenset[NamePattern]:
    unique = set(patterns)
    kept = {
        p for p in unique
        if not any(q != p and subsumes(q, p) for q in unique)
    }
    return frozenset(kept)


class NameSet:
    """Either the universal set of names or a finite normalized union of patterns."""

    __slots__ = ("_patterns",)

    def __init__(self, patterns: Iterable[NamePattern] | None = None, *, universal: bool = False):
        if universal:
            if patterns is not None:
                raise ValueError("a universal NameSet takes no patterns")
            self._patterns = None
        else:
            self._patterns = _normalize(patterns or ())

    @classmethod
    def universal(cls) -> "NameSet":
        return cls(universal=True)

    @classmethod
    def empty(cls) -> "NameSet":
        return cls(())

    @classmethod
    def parse(cls, texts: Iterable[str]) -> "NameSet":
        return cls(parse_pattern(t) for t in texts)

    @property
    def is_universal(self) -> bool:
        return self._patterns is None

    @property
    def patterns(self) -> frozenset[NamePattern]:
        if self._patterns is None:
            raise ValueError("the universal NameSet has no finite pattern list")
        return self._patterns

    def is_empty(self) -> bool:
        return self._patterns is not None and not self._patterns

    def sorted_texts(self) -> list[str]:
        return sorted(str(p) for p in self.patterns)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NameSet):
            return NotImplemented
        return self._patterns == other._patterns

    def __hash__(self) -> int:
        return hash(self._patterns)

    def __repr__(self) -> str:
        if self._patterns is None:
            return "NameSet.universal()"
        return f"NameSet.parse({self.sorted_texts()!r})"

    def __str__(self) -> str:
        if self._patterns is None:
            return "*"
        return "[" + ",".join(self.sorted_texts()) + "]"

    def __contains__(self, name: DnsName) -> bool:
        return member(self, name)

    def __and__(self, other: "NameSet") -> "NameSet":
        return intersect(self, other)


def member(names: NameSet, name: DnsName) -> bool:
    if names.is_universal:
        return True
    return any(matches(p, name) for p in names.patterns)


def intersect(a: NameSet, b: NameSet) -> NameSet:
    if a.is_universal:
        return b
    if b.is_universal:
        return a
    out = []
    for p in a.patterns:
        for q in b.patterns:
            r = _intersect_patterns(p, q)
            if r is not None:
                out.append(r)
    return NameSet(out)


def is_subset(inner: NameSet, outer: NameSet) -> bool:
    """Denotational inclusion. Each finite pattern is covered by a single outer pattern or not at all."""
    if outer.is_universal:
        return True
    if inner.is_universal:
        return False
    return all(any(subsumes(q, p) for q in outer.patterns) for p in inner.patterns)


def union_san_cn(cert) -> NameSet:
    """The subject names a certificate speaks for: its common name plus its SAN entries."""
    return NameSet([cert.subject_common_name, *cert.extensions.subject_alt_names])
