import hashlib
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from proxypki.matrix import (TABLE_DIGEST, BenefitLevel, UnknownCombination, UnknownCriterion, UnknownScheme, check,
                             combine, diff_against_table, format_profile, load_matrix, lookup, read_table_bytes)

Y, P, N = BenefitLevel.YES, BenefitLevel.PARTIAL, BenefitLevel.NO

CRITERIA = ["A1", "A2", "A3", "A4", "B1", "B2", "C1", "C2", "C3", "D1", "D2", "D3",
            "E1", "E2", "E3", "E4", "E5", "E6", "F1"]

# hand transcription, one character per criterion in the order above (Y/P/N)
TRANSCRIPTION = {
    "a": "PNYNNNNYNNNYYYNYYPN",
    "b": "PNYNNNNYNNNYYYNYYPN",
    "c": "PNYNNNNYYYNYYYNYPPY",
    "d": "YYYNNNNYYYYYYYPPNNY",
    "e": "YNPNNNNYYYYYNYYNYPY",
    "f": "YNPNNNNYYYYYNYYNYPY",
    "g": "YNYNNNNYYYYYYYYNYNY",
    "h": "YNYNNNNYYYYYYNNYYNY",
    "i": "YNYNNNNYYYYYYPNYYNY",
    "j": "NNNNYYNYYNYYYYYYNYY",
    "k": "NNNNYYNYYNYYYYYYNYY",
    "l": "NNNNYNNYYYYYYYYYYYY",
    "m": "NNNNYYNYYNYYYYYYYNY",
    "n": "NNYYYYPYYYYYYYPYNNY",
    "o": "NNNNYYYPYYYYYYYYYPP",
    "p": "NNYNNNNYYYNNYYNYYYY",
    "q": "NNNNYYYYYYYNYYNYYPY",
    "r": "NNNNYNNYYYYYYYNYYYY",
    "s": "NNPPYYYYYYYYYYYYPNY",
    "n+d": "YYYYYYNYYYYYYYPPNNY",
    "n+(e|f)": "YNYYYYNYYYYYNYPNNNY",
    "n+g": "YNYYYYNYYYYYYYPNNNY",
    "p+s": "NNYYYYYYYYYYYYYYPNY",
    "p+s+d": "YYYYYYYYYYYYYYPPNNY",
    "p+s+(e|f)": "YNYYYYYYYYYYNYYNPNY",
    "p+s+g": "YNYYYYYYYYYYYYYNPNY",
}
LEVEL = {"Y": Y, "P": P, "N": N}


def row(text):
    return dict(zip(CRITERIA, (LEVEL[c] for c in text)))


def test_criteria_layout():
    m = load_matrix()
    assert m.criterion_ids == CRITERIA
    sizes = {}
    for c in m.criteria:
        sizes[c.category] = sizes.get(c.category, 0) + 1
    assert sizes == {"A": 4, "B": 2, "C": 3, "D": 3, "E": 6, "F": 1}


@pytest.mark.parametrize("key", sorted(TRANSCRIPTION))
def test_stored_rows_match_transcription(key):
    m = load_matrix()
    stored = m.schemes[key] if key in m.schemes else m.combinations[key]
    assert dict(stored.levels) == row(TRANSCRIPTION[key])


def test_row_counts():
    m = load_matrix()
    assert len(m.schemes) == 19 and len(m.combinations) == 7


def test_data_file_is_canonical_and_pinned():
    raw = read_table_bytes()
    assert hashlib.sha256(raw).hexdigest() == TABLE_DIGEST
    assert raw == json.dumps(json.loads(raw), sort_keys=True, separators=(",", ":"),
                             ensure_ascii=False).encode() + b"\n"


@pytest.mark.parametrize("scheme,criterion,level", [("s", "B2", Y), ("p", "A4", N), ("n", "C1", P),
                                                    ("p+s", "A3", Y)])
def test_lookup_examples(scheme, criterion, level):
    assert lookup(scheme, criterion) is level


def test_lookup_unknowns():
    with pytest.raises(UnknownScheme):
        lookup("z", "A1")
    with pytest.raises(UnknownCriterion):
        lookup("a", "Z9")


def test_combine_examples():
    ps = combine({"p", "s"})
    assert ps["A3"] is ps["A4"] is ps["B2"] is Y
    assert ps.satisfies_requirements() == (True, True)
    assert combine({"p", "s", "d"})["E3"] is P
    with pytest.raises(UnknownScheme):
        combine({"p", "zz"})
    with pytest.raises(ValueError):
        combine(set())


@pytest.mark.parametrize("key", sorted(k for k in TRANSCRIPTION if "+" not in k))
def test_combine_single_is_identity(key):
    assert dict(combine({key}).levels) == row(TRANSCRIPTION[key])


def test_neither_component_meets_both_requirements():
    assert combine({"p"}).satisfies_requirements() == (False, False)
    assert combine({"s"}).satisfies_requirements() == (False, True)


@pytest.mark.parametrize("label,expected", [
    ("p+s", []), ("p+s+g", []), ("p+s+d", []), ("p+s+(e|f)", []),
    ("n+d", [("C1", P, N)]), ("n+(e|f)", [("C1", P, N)]), ("n+g", [("C1", P, N)]),
])
def test_diff_examples(label, expected):
    assert diff_against_table(label) == expected


def test_diff_unknown_label():
    with pytest.raises(UnknownCombination):
        diff_against_table("a+b")


def test_check_report():
    report = check()
    assert report.ok
    assert report.base_rows == 19 and report.combination_cells == 133 and report.matching_cells == 130
    assert report.lines()[-1] == "CHECK OK"


def test_check_detects_tampering():
    data = json.loads(read_table_bytes())
    data["schemes"]["s"]["levels"]["B2"] = "No"
    raw = json.dumps(data, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    assert not check(raw).ok
    assert not check(read_table_bytes().replace(b",", b", ", 1)).ok


def test_format_profile():
    lines = format_profile(combine({"s"}))
    assert len(lines) == 19 and lines[5] == "B2=Yes\tDelegation without key sharing"


schemes = st.sets(st.sampled_from(sorted(k for k in TRANSCRIPTION if "+" not in k)), min_size=1, max_size=5)


@given(schemes, st.randoms())
def test_combine_order_insensitive_and_idempotent(members, rnd):
    order = list(members)
    rnd.shuffle(order)
    assert dict(combine(order).levels) == dict(combine(members).levels)
    assert dict(combine(order + order).levels) == dict(combine(members).levels)


@given(schemes)
def test_requirements_query(members):
    p = combine(members)
    assert p.satisfies_requirements() == (p["A4"] is Y, p["B2"] is Y)
