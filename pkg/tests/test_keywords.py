import pytest
from hypothesis import given, strategies as st

from fabula.keywords import KeywordSet, extract_keywords, tokenize

GOLDEN_SENTENCE = "I brought the movie home and watched the whole thing."
GOLDEN_PHRASES = ("I", "the movie", "the whole thing")


def test_golden_sentence():
    assert extract_keywords(GOLDEN_SENTENCE).phrases == GOLDEN_PHRASES


def test_golden_fragment():
    assert extract_keywords(GOLDEN_SENTENCE).to_fragment() == "I, the movie, the whole thing"


def test_phrases_are_verbatim_substrings():
    for case in [
        GOLDEN_SENTENCE,
        "Mary had been feeling depressed lately.",
        "The old dog slept under a warm blanket.",
        "Sarah's cat chased two red birds.",
    ]:
        for phrase in extract_keywords(case).phrases:
            assert phrase in case


def test_determiner_adjective_noun_runs():
    got = extract_keywords("A small brown fox crossed the quiet road.").phrases
    assert got == ("A small brown fox", "the quiet road")


def test_subject_pronoun_kept_object_pronoun_dropped():
    got = extract_keywords("She told him a secret.").phrases
    assert got == ("She", "a secret")


def test_empty_and_punctuation_only():
    assert extract_keywords("").phrases == ()
    assert extract_keywords("...!?").phrases == ()


def test_tokenize_offsets_slice_back():
    sentence = "Mary's dog-house isn't large."
    for token in tokenize(sentence):
        assert sentence[token.start : token.end] == token.surface


def test_keyword_set_validation():
    with pytest.raises(ValueError):
        KeywordSet(["ok", "  "])


def test_keyword_set_roundtrip_and_merge():
    ks = KeywordSet.from_fragment("the movie, I")
    assert ks.phrases == ("the movie", "I")
    merged = ks.merge(KeywordSet(["I", "a dog"]))
    assert merged.phrases == ("the movie", "I", "a dog")
    assert "I" in merged
    assert len(merged) == 3


def test_without_determiners():
    ks = KeywordSet(["the movie", "The whole thing", "I"])
    assert ks.without_determiners().phrases == ("movie", "whole thing", "I")


def test_fixture_recall_and_precision(keyword_fixture):
    total = 0
    hit = 0
    for case in keyword_fixture:
        got = extract_keywords(case["sentence"])
        for phrase in got.phrases:
            assert phrase in case["sentence"], (case["sentence"], phrase)
        gold = set(case["entities"])
        total += len(gold)
        hit += len(gold & set(got.phrases))
    assert total >= 40
    assert hit / total >= 0.90


@given(st.text(max_size=80))
def test_extraction_never_crashes_and_stays_verbatim(text):
    for phrase in extract_keywords(text).phrases:
        assert phrase in text


@given(st.text(alphabet=st.characters(categories=["Lu", "Ll", "Zs"]), max_size=60))
def test_extraction_is_deterministic(text):
    assert extract_keywords(text).phrases == extract_keywords(text).phrases
