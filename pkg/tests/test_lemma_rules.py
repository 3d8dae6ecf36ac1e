import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_force_lcsubstring, insert_delete_distance
from morphkit.errors import RuleApplicationError
from morphkit.lemma_rules import (
    ANCHOR_END,
    ANCHOR_START,
    CASE_LOWER,
    CASE_UPPER,
    DELETE,
    INSERT,
    CasingMark,
    EditOp,
    apply_rule,
    build_rule,
    encode_casing,
    longest_common_substring,
    parse_rule,
    shortest_edit_script,
)

# ----- longest common substring -----------------------------------------------


def test_lcs_identity():
    assert longest_common_substring("abc", "abc") == (0, 0, 3)


def test_lcs_disjoint():
    assert longest_common_substring("xyz", "abc") is None


def test_lcs_czech_pair():
    assert longest_common_substring("koček", "kočka") == (0, 0, 3)


def test_lcs_tie_break_smallest_starts():
    # both "ab" occurrences tie at length 2; smallest a_start, then b_start win
    assert longest_common_substring("abxab", "abyab") == (0, 0, 2)
    assert longest_common_substring("xxab", "abyab") == (2, 0, 2)


@settings(max_examples=150)
@given(st.text("abcč", max_size=8), st.text("abcč", max_size=8))
def test_lcs_matches_brute_force_length(a, b):
    expected = brute_force_lcsubstring(a, b)
    got = longest_common_substring(a, b)
    if expected == 0:
        assert got is None
    else:
        a0, b0, length = got
        assert length == expected
        assert a[a0 : a0 + length] == b[b0 : b0 + length]


# ----- shortest edit script ----------------------------------------------------


def _run_script(ops, src):
    out = []
    pos = 0
    for op in ops:
        out.append(src[pos : pos + op.copy_before])
        pos += op.copy_before
        if op.kind == DELETE:
            pos += 1
        else:
            out.append(op.char)
    out.append(src[pos:])
    return "".join(out)


def test_empty_script():
    assert shortest_edit_script("", "") == []


def test_pure_deletion():
    assert shortest_edit_script("e", "") == [EditOp(DELETE, None, 0)]


def test_ek_to_ka_is_two_ops():
    ops = shortest_edit_script("ek", "ka")
    assert ops == [EditOp(DELETE, None, 0), EditOp(INSERT, "a", 1)]
    assert _run_script(ops, "ek") == "ka"


def test_deletes_before_inserts():
    ops = shortest_edit_script("x", "y")
    assert [op.kind for op in ops] == [DELETE, INSERT]


@settings(max_examples=300)
@given(st.text("abcd", max_size=10), st.text("abcd", max_size=10))
def test_script_minimal_and_correct(src, dst):
    ops = shortest_edit_script(src, dst)
    assert len(ops) == insert_delete_distance(src, dst)
    assert _run_script(ops, src) == dst


# ----- casing ------------------------------------------------------------------


def test_casing_single_segment():
    assert encode_casing("iphone") == [CasingMark(ANCHOR_START, 0, CASE_LOWER)]


def test_casing_iphone():
    assert encode_casing("iPhone") == [
        CasingMark(ANCHOR_START, 0, CASE_LOWER),
        CasingMark(ANCHOR_START, 1, CASE_UPPER),
        CasingMark(ANCHOR_START, 2, CASE_LOWER),
    ]


def test_casing_second_half_anchors_to_end():
    assert encode_casing("aB") == [
        CasingMark(ANCHOR_START, 0, CASE_LOWER),
        CasingMark(ANCHOR_END, 0, CASE_UPPER),
    ]


def test_casing_caseless_extends_segment():
    # digits continue the uppercase segment rather than starting a new one
    assert encode_casing("AB12CD") == [
        CasingMark(ANCHOR_START, 0, CASE_UPPER),
    ]


def test_casing_all_caseless_is_single_lower_segment():
    assert encode_casing("123") == [CasingMark(ANCHOR_START, 0, CASE_LOWER)]


# ----- rule construction and application ----------------------------------------


def test_identity_rule():
    rule = build_rule("can", "can")
    assert rule.kind == "edit"
    assert rule.prefix.ops == () and rule.suffix.ops == ()
    assert rule.casing == (CasingMark(ANCHOR_START, 0, CASE_LOWER),)
    assert apply_rule(rule, "can") == "can"


def test_literal_rule_when_no_common_substring():
    rule = build_rule("xyz", "abc")
    assert rule.kind == "literal"
    assert rule.literal_lemma == "abc"
    assert apply_rule(rule, "anything") == "abc"


def test_czech_suffix_rule():
    rule = build_rule("koček", "kočka")
    assert rule.kind == "edit"
    assert rule.prefix.ops == ()
    assert rule.suffix.ops == (EditOp(DELETE, None, 0), EditOp(INSERT, "a", 1))
    assert apply_rule(rule, "koček") == "kočka"


def test_casing_applied_from_rule_not_form():
    rule = build_rule("PRAZE", "Praha")
    assert apply_rule(rule, "PRAZE") == "Praha"
    # edit rules fully determine output casing
    rule2 = build_rule("praze", "praha")
    assert apply_rule(rule2, "PRAZE") == "praha"


def test_identity_casing_trace():
    rule = build_rule("Praha", "Praha")
    assert apply_rule(rule, "Praha") == "Praha"
    assert apply_rule(rule, "praha") == "Praha"


def test_rule_shared_across_paradigm():
    rule1 = build_rule("kočkami", "kočka")
    rule2 = build_rule("rybami", "ryba")
    assert rule1 == rule2
    assert rule1.serialize() == rule2.serialize()


def test_application_error_on_short_form():
    rule = build_rule("abcdef", "abcxyz")
    with pytest.raises(RuleApplicationError):
        apply_rule(rule, "ab")


def test_serialization_roundtrip():
    for form, lemma in [
        ("koček", "kočka"),
        ("xyz", "abc"),
        ("PRAZE", "Praha"),
        ("iPhonu", "iPhone"),
        ("a|b", "a+b"),
        ("je", "být"),
    ]:
        rule = build_rule(form, lemma)
        assert parse_rule(rule.serialize()) == rule
        assert apply_rule(parse_rule(rule.serialize()), form) == lemma


# ----- the roundtrip law ---------------------------------------------------------

_letters = "abcdefghijkl mnoprstuvzáčďéěíňóřšťúůýžxq"
_mixed = (_letters + _letters.upper()).replace(" ", "")


def test_roundtrip_fuzz_seeded():
    rng = np.random.default_rng(20240811)
    chars = np.array(list(_mixed))
    for _ in range(2000):
        form = "".join(rng.choice(chars, size=rng.integers(1, 13)))
        lemma = "".join(rng.choice(chars, size=rng.integers(1, 13)))
        rule = build_rule(form, lemma)
        assert apply_rule(rule, form) == lemma, (form, lemma, rule.serialize())


@settings(max_examples=300)
@given(
    st.text(st.characters(whitelist_categories=("Lu", "Ll")), min_size=1, max_size=12),
    st.text(st.characters(whitelist_categories=("Lu", "Ll")), min_size=1, max_size=12),
)
def test_roundtrip_unicode_letters(form, lemma):
    assert apply_rule(build_rule(form, lemma), form) == lemma


def test_determinism():
    a = build_rule("kočkám", "kočka")
    b = build_rule("kočkám", "kočka")
    assert a == b and a.serialize() == b.serialize()
