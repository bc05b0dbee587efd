import pytest
from hypothesis import given
from hypothesis import strategies as st

import nameoracle as oracle
from proxypki.names import (DnsName, Exact, NameSet, NameSyntaxError, Subtree, Wildcard, intersect, is_subset,
                            matches, member, parse_constraint, parse_pattern, parse_subject_name, subsumes)


def n(text):
    return DnsName.parse(text)


def test_dns_names_are_case_insensitive():
    assert n("WWW.Example.COM") == n("www.example.com")


@pytest.mark.parametrize("bad", ["", "www.example.com.", "a..b", "a_b.com", "*.com", "a.*.com", "foo*.com", ".com"])
def test_invalid_dns_names(bad):
    with pytest.raises(NameSyntaxError):
        DnsName.parse(bad)


@pytest.mark.parametrize("bad", ["a.*.com", "foo*.example.com", "**.com", "*", "*."])
def test_embedded_or_malformed_wildcards_rejected(bad):
    with pytest.raises(NameSyntaxError):
        parse_pattern(bad)


def test_pattern_forms():
    assert parse_pattern("a.com") == Exact(n("a.com"))
    assert parse_pattern("*.a.com") == Wildcard(n("a.com"))
    assert parse_pattern(".a.com") == Subtree(n("a.com"))
    for text in ["a.com", "*.a.com", ".a.com"]:
        assert str(parse_pattern(text)) == text


def test_subject_names_cannot_be_subtrees():
    with pytest.raises(NameSyntaxError):
        parse_subject_name(".example.com")


def test_constraints_need_leading_dot():
    assert parse_constraint(".example.com") == Subtree(n("example.com"))
    for bad in ["example.com", "*.example.com"]:
        with pytest.raises(NameSyntaxError):
            parse_constraint(bad)


# literal examples for the two non-exact forms
@pytest.mark.parametrize("name,expected", [
    ("host.example.com", True),
    ("my.host.example.com", True),
    ("example.com", False),
])
def test_subtree_literal_examples(name, expected):
    assert matches(parse_pattern(".example.com"), n(name)) is expected


@pytest.mark.parametrize("name,expected", [
    ("foo.example.com", True),
    ("bar.foo.example.com", False),
])
def test_wildcard_literal_examples(name, expected):
    assert matches(parse_pattern("*.example.com"), n(name)) is expected


def test_member_examples():
    s = NameSet.parse(["a.com", ".b.com"])
    assert member(s, n("x.b.com"))
    assert member(s, n("a.com"))
    assert not member(s, n("b.com"))
    assert member(NameSet.universal(), n("anything.test"))
    assert not member(NameSet.empty(), n("a.com"))


def test_intersect_examples():
    assert intersect(NameSet.parse([".b.com"]), NameSet.parse(["*.a.b.com"])) == NameSet.parse(["*.a.b.com"])
    assert intersect(NameSet.parse(["*.example.com"]), NameSet.parse(["www.example.com"])) == \
        NameSet.parse(["www.example.com"])
    assert intersect(NameSet.parse(["*.example.com"]), NameSet.parse(["example.com"])).is_empty()
    assert intersect(NameSet.parse(["*.a.com"]), NameSet.parse(["*.b.a.com"])).is_empty()
    assert intersect(NameSet.universal(), NameSet.parse(["a.com"])) == NameSet.parse(["a.com"])
    assert intersect(NameSet.universal(), NameSet.universal()).is_universal


def test_normalization_drops_subsumed_patterns():
    s = NameSet.parse([".example.com", "*.example.com", "www.example.com", "other.org"])
    assert s.sorted_texts() == [".example.com", "other.org"]


def test_subsumption_examples():
    assert subsumes(parse_pattern(".example.com"), parse_pattern("*.example.com"))
    assert subsumes(parse_pattern(".example.com"), parse_pattern(".a.example.com"))
    assert not subsumes(parse_pattern("*.example.com"), parse_pattern(".example.com"))
    assert not subsumes(parse_pattern("*.example.com"), parse_pattern("*.a.example.com"))
    assert subsumes(parse_pattern("*.example.com"), parse_pattern("a.example.com"))


def test_subset_examples():
    assert is_subset(NameSet.parse(["www.example.com"]), NameSet.parse(["*.example.com"]))
    assert not is_subset(NameSet.parse(["admin.example.com"]), NameSet.parse(["www.example.com"]))
    assert is_subset(NameSet.empty(), NameSet.empty())
    assert not is_subset(NameSet.universal(), NameSet.parse([".com"]))


# -- oracle-backed properties ------------------------------------------------

pattern_texts = st.sampled_from(oracle.PATTERN_TEXTS)
finite_sets = st.lists(pattern_texts, max_size=4)
name_sets = st.one_of(st.just(None), finite_sets)


def to_set(texts):
    return NameSet.universal() if texts is None else NameSet.parse(texts)


def texts_of(s: NameSet):
    return None if s.is_universal else s.sorted_texts()


@given(pattern_texts)
def test_matches_agrees_with_oracle(p):
    pattern = parse_pattern(p)
    for name in oracle.UNIVERSE[::7]:
        assert matches(pattern, n(name)) == oracle.text_matches(p, name)


@given(pattern_texts, pattern_texts)
def test_subsumes_agrees_with_oracle(a, b):
    inclusion = oracle.pattern_mask(b) & ~oracle.pattern_mask(a) == 0
    result = subsumes(parse_pattern(a), parse_pattern(b))
    if result:
        assert inclusion
    if oracle.shallow(a) and oracle.shallow(b):
        assert result == inclusion


@given(name_sets, name_sets)
def test_intersection_commutes(a, b):
    assert intersect(to_set(a), to_set(b)) == intersect(to_set(b), to_set(a))


@given(name_sets, name_sets, name_sets)
def test_intersection_associates(a, b, c):
    x, y, z = to_set(a), to_set(b), to_set(c)
    assert intersect(intersect(x, y), z) == intersect(x, intersect(y, z))


@given(name_sets)
def test_intersection_idempotent(a):
    s = to_set(a)
    assert intersect(s, s) == s


@given(name_sets)
def test_normalization_is_a_fixed_point(a):
    s = to_set(a)
    if not s.is_universal:
        assert NameSet(s.patterns) == s
        assert NameSet.parse(s.sorted_texts()) == s


@given(name_sets, name_sets)
def test_intersection_is_below_both_operands(a, b):
    r = intersect(to_set(a), to_set(b))
    assert is_subset(r, to_set(a)) and is_subset(r, to_set(b))


@given(name_sets, name_sets)
def test_is_subset_agrees_with_oracle_on_shallow_sets(a, b):
    if any(not oracle.shallow(p) for p in (a or []) + (b or [])):
        return
    inclusion = oracle.set_mask(texts_of(to_set(a))) & ~oracle.set_mask(texts_of(to_set(b))) == 0
    if a is None and b is not None:
        inclusion = False
    assert is_subset(to_set(a), to_set(b)) == inclusion
