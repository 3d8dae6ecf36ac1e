import numpy as np
import pytest

from morphkit.dictionary import MorphDictionary, constrained_decode, load_dictionary
from morphkit.errors import DataError
from morphkit.lemma_rules import build_rule


def _rules_for(forms_lemmas):
    return [build_rule(f, l) for f, l in forms_lemmas]


def test_no_analyses_falls_back_to_argmax():
    rules = _rules_for([("hradu", "hrad"), ("hradu", "hrada")])
    tag, lemma = constrained_decode(
        {"N1": 0.3, "N2": 0.7},
        [(rules[0], 0.6), (rules[1], 0.4)],
        "hradu",
        MorphDictionary(),
    )
    assert tag == "N2"
    assert lemma == "hrad"


def test_none_dictionary_is_unconstrained():
    rules = _rules_for([("psa", "pes")])
    tag, lemma = constrained_decode({"X": 1.0}, [(rules[0], 1.0)], "psa", None)
    assert (tag, lemma) == ("X", "pes")


def test_single_analysis_wins_regardless_of_scores():
    dictionary = MorphDictionary()
    dictionary.add("psa", tag="NN", lemma="pes")
    rules = _rules_for([("psa", "psa")])
    tag, lemma = constrained_decode({"VB": 0.99, "NN": 0.01}, [(rules[0], 1.0)], "psa", dictionary)
    assert (tag, lemma) == ("NN", "pes")


def test_two_analyses_larger_product_wins():
    dictionary = MorphDictionary()
    dictionary.add("can", tag="NOUN", lemma="can-1")
    dictionary.add("can", tag="VERB", lemma="can-2")
    rule_noun = build_rule("can", "can-1")
    rule_verb = build_rule("can", "can-2")
    # p(NOUN)*p(can-1) = 0.6*0.3 = 0.18 < p(VERB)*p(can-2) = 0.4*0.7 = 0.28
    tag, lemma = constrained_decode(
        {"NOUN": 0.6, "VERB": 0.4},
        [(rule_noun, 0.3), (rule_verb, 0.7)],
        "can",
        dictionary,
    )
    assert (tag, lemma) == ("VERB", "can-2")


def test_lemma_probability_marginalizes_over_rules():
    dictionary = MorphDictionary()
    dictionary.add("domy", tag="N", lemma="dom")
    dictionary.add("domy", tag="N", lemma="doma")
    edit_dom = build_rule("domy", "dom")  # strip the "y"
    literal_dom = build_rule("xyz", "dom")  # literal "dom", applies anywhere
    edit_doma = build_rule("domy", "doma")
    assert len({edit_dom.serialize(), literal_dom.serialize(), edit_doma.serialize()}) == 3
    # p(dom) = 0.3 + 0.25 = 0.55 beats p(doma) = 0.45 only because mass is summed
    tag, lemma = constrained_decode(
        {"N": 1.0},
        [(edit_dom, 0.30), (literal_dom, 0.25), (edit_doma, 0.45)],
        "domy",
        dictionary,
    )
    assert (tag, lemma) == ("N", "dom")


def test_inapplicable_rules_contribute_nothing():
    dictionary = MorphDictionary()
    dictionary.add("jde", tag="V", lemma="jit")
    long_rule = build_rule("kkkkaaaa", "kkkkjitt")  # consumes more chars than "jde" has
    lit = build_rule("xyz", "jit")  # literal: always applicable
    tag, lemma = constrained_decode({"V": 1.0}, [(long_rule, 0.9), (lit, 0.1)], "jde", dictionary)
    assert (tag, lemma) == ("V", "jit")


def test_all_rules_inapplicable_falls_back_to_form():
    long_rule = build_rule("kkkkaaaa", "kkkkbbbb")  # suffix script consumes 4 chars
    with pytest.raises(Exception):
        from morphkit.lemma_rules import apply_rule

        apply_rule(long_rule, "ab")
    tag, lemma = constrained_decode({"T": 1.0}, [(long_rule, 1.0)], "ab", MorphDictionary())
    assert (tag, lemma) == ("T", "ab")


def test_output_always_member_of_analyses():
    rng = np.random.default_rng(4)
    rules = _rules_for([("koček", "kočka"), ("psa", "pes"), ("xyz", "qqq"), ("domu", "dom")])
    tags = ["A", "B", "C"]
    for _ in range(200):
        dictionary = MorphDictionary()
        n = int(rng.integers(1, 4))
        for _ in range(n):
            dictionary.add(
                "form",
                tag=tags[int(rng.integers(3))],
                lemma=str(rng.integers(100)),
            )
        tag_probs = rng.dirichlet(np.ones(3))
        rule_probs = rng.dirichlet(np.ones(4))
        result = constrained_decode(
            dict(zip(tags, tag_probs)),
            list(zip(rules, rule_probs)),
            "form",
            dictionary,
        )
        assert result in dictionary.get("form")


def test_load_dictionary_tsv(tmp_path):
    path = tmp_path / "dict.tsv"
    path.write_text("psa\tpes\tNN\npsa\tpes\tNN\npsa\tpsa\tVB\n", encoding="utf-8")
    dictionary = load_dictionary(str(path))
    assert dictionary.get("psa") == [("NN", "pes"), ("VB", "psa")]  # deduplicated


def test_load_dictionary_bad_columns(tmp_path):
    path = tmp_path / "dict.tsv"
    path.write_text("psa\tpes\n", encoding="utf-8")
    with pytest.raises(DataError, match="line 1"):
        load_dictionary(str(path))
