"""The revocation/delegation comparison matrix and the scheme-combination calculus.

Base rows are letters ``a``-``s``; combination rows are labels such as
``p+s+(e|f)``. Combining takes the best level over the members for revocation,
delegation and security criteria (categories A-C) and the worst level for
efficiency, deployability and cross-category criteria (D-F), after replacing
the pair short-lived + proxy certificates by its fused row.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping

from .model import canonical_dumps

TABLE_FILE = "scheme_matrix.json"
# sha256 of the shipped data file; bump together with the file's "version"
TABLE_DIGEST = "2c6e70096c53f31caaab420073a66fdf2fdd12b28edf1793721502582ce86a8d"

FUSED_PAIR = frozenset({"p", "s"})
FUSED_LABEL = "p+s"
MAXIMIZED_CATEGORIES = frozenset("ABC")


class BenefitLevel(enum.IntEnum):
    NO = 0
    PARTIAL = 1
    YES = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, text: str) -> "BenefitLevel":
        return cls[text.upper()]


class UnknownScheme(KeyError):
    pass


class UnknownCriterion(KeyError):
    pass


class UnknownCombination(KeyError):
    pass


@dataclass(frozen=True)
class Criterion:
    id: str
    category: str
    name: str


@dataclass(frozen=True)
class SchemeProfile:
    key: str
    levels: Mapping[str, BenefitLevel]

    def __getitem__(self, criterion: str) -> BenefitLevel:
        return self.levels[criterion]

    def satisfies_requirements(self) -> tuple[bool, bool]:
        """(autonomous revocation, delegation without key sharing)."""
        return self.levels["A4"] is BenefitLevel.YES, self.levels["B2"] is BenefitLevel.YES


@dataclass(frozen=True)
class Matrix:
    criteria: tuple[Criterion, ...]
    schemes: Mapping[str, SchemeProfile]
    scheme_names: Mapping[str, str]
    combinations: Mapping[str, SchemeProfile]
    combination_members: Mapping[str, tuple[frozenset[str], ...]]
    version: int

    @property
    def criterion_ids(self) -> list[str]:
        return [c.id for c in self.criteria]

    def criterion(self, cid: str) -> Criterion:
        for c in self.criteria:
            if c.id == cid:
                return c
        raise UnknownCriterion(cid)


def _profile(key: str, levels: Mapping[str, str]) -> SchemeProfile:
    return SchemeProfile(key, {cid: BenefitLevel.parse(v) for cid, v in levels.items()})


def read_table_bytes() -> bytes:
    return resources.files("proxypki.data").joinpath(TABLE_FILE).read_bytes()


def parse_matrix(raw: bytes) -> Matrix:
    data = json.loads(raw)
    criteria = tuple(Criterion(c["id"], c["category"], c["name"]) for c in data["criteria"])
    ids = {c.id for c in criteria}
    schemes, names = {}, {}
    for key, row in data["schemes"].items():
        if set(row["levels"]) != ids:
            raise ValueError(f"row {key} does not cover every criterion")
        schemes[key] = _profile(key, row["levels"])
        names[key] = row["name"]
    combos, members = {}, {}
    for label, row in data["combinations"].items():
        combos[label] = _profile(label, row["levels"])
        members[label] = tuple(frozenset(alt) for alt in row["members"])
    return Matrix(criteria, schemes, names, combos, members, data["version"])


@lru_cache(maxsize=1)
def load_matrix() -> Matrix:
    return parse_matrix(read_table_bytes())


def lookup(scheme: str, criterion: str, matrix: Matrix | None = None) -> BenefitLevel:
    m = matrix or load_matrix()
    if scheme in m.schemes:
        profile = m.schemes[scheme]
    elif scheme in m.combinations:
        profile = m.combinations[scheme]
    else:
        raise UnknownScheme(scheme)
    if criterion not in profile.levels:
        raise UnknownCriterion(criterion)
    return profile.levels[criterion]


def combine(schemes: Iterable[str], matrix: Matrix | None = None) -> SchemeProfile:
    m = matrix or load_matrix()
    members = set(schemes)
    if not members:
        raise ValueError("combine needs at least one scheme")
    unknown = sorted(members - set(m.schemes))
    if unknown:
        raise UnknownScheme(", ".join(unknown))
    profiles = []
    if FUSED_PAIR <= members:
        profiles.append(m.combinations[FUSED_LABEL])
        members -= FUSED_PAIR
    profiles += [m.schemes[k] for k in sorted(members)]
    levels = {}
    for c in m.criteria:
        pick = max if c.category in MAXIMIZED_CATEGORIES else min
        levels[c.id] = pick(p.levels[c.id] for p in profiles)
    return SchemeProfile("+".join(sorted(set(schemes))), levels)


def diff_against_table(label: str, matrix: Matrix | None = None) -> list[tuple[str, BenefitLevel, BenefitLevel]]:
    """Cells where the calculus disagrees with the stored combination row.

    For rows with alternatives such as ``n+(e|f)`` every alternative is
    evaluated and each disagreeing cell is reported once.
    """
    m = matrix or load_matrix()
    if label not in m.combinations:
        raise UnknownCombination(label)
    stored = m.combinations[label]
    out = []
    for cid in m.criterion_ids:
        seen = set()
        for alt in m.combination_members[label]:
            predicted = combine(alt, m).levels[cid]
            if predicted != stored.levels[cid] and predicted not in seen:
                seen.add(predicted)
                out.append((cid, predicted, stored.levels[cid]))
    return out


@dataclass(frozen=True)
class CheckReport:
    canonical: bool
    digest_ok: bool
    base_rows: int
    combination_cells: int
    matching_cells: int
    mismatches: tuple[tuple[str, str, BenefitLevel, BenefitLevel], ...]

    @property
    def ok(self) -> bool:
        explained = all(cid == "C1" and "n" in label.split("+") for label, cid, _, _ in self.mismatches)
        return (self.canonical and self.digest_ok and self.base_rows == 19
                and self.matching_cells >= 130 and explained)

    def lines(self) -> list[str]:
        out = [
            f"data canonical: {'yes' if self.canonical else 'NO'}",
            f"data digest: {'match' if self.digest_ok else 'MISMATCH'}",
            f"base rows: {self.base_rows}",
            f"combination cells reproduced: {self.matching_cells}/{self.combination_cells}",
        ]
        out += [f"deviation {label} {cid}: predicted={p.label} table={s.label}" for label, cid, p, s in self.mismatches]
        out.append("CHECK OK" if self.ok else "CHECK FAILED")
        return out


def check(raw: bytes | None = None) -> CheckReport:
    raw = read_table_bytes() if raw is None else raw
    canonical = raw == canonical_dumps(json.loads(raw)) + b"\n"
    digest_ok = hashlib.sha256(raw).hexdigest() == TABLE_DIGEST
    m = parse_matrix(raw)
    mismatches = []
    for label in m.combinations:
        for cid, predicted, stored in diff_against_table(label, m):
            mismatches.append((label, cid, predicted, stored))
    total = len(m.combinations) * len(m.criteria)
    mismatched_cells = len({(label, cid) for label, cid, _, _ in mismatches})
    return CheckReport(canonical, digest_ok, len(m.schemes), total, total - mismatched_cells, tuple(mismatches))


def format_profile(profile: SchemeProfile, matrix: Matrix | None = None) -> list[str]:
    m = matrix or load_matrix()
    return [f"{c.id}={profile.levels[c.id].label}\t{c.name}" for c in m.criteria]
