import re

import pytest
from hypothesis import given, settings, strategies as st

from patentminer.corpus import (
    NUM_TOKEN,
    HeadingConfig,
    NormResources,
    RawDocument,
    is_heading,
    is_number,
    load_resources,
    normalize,
    read_documents,
    segment_sections,
    suffix_lemma,
    tokenize,
    tokenize_section,
)


@pytest.fixture(scope="module")
def res():
    return load_resources()


def _squash(s):
    return re.sub(r"\s+", "", s)


def test_segment_empty():
    assert segment_sections(RawDocument("d", "")) == []


def test_segment_two_examples():
    secs = segment_sections(RawDocument("d", "EXAMPLE 1\nMix A and B.\nEXAMPLE 2\nDry."))
    assert [s.heading for s in secs] == ["EXAMPLE 1", "EXAMPLE 2"]
    assert [s.body for s in secs] == ["Mix A and B.", "Dry."]
    assert [s.section_id for s in secs] == ["d#0", "d#1"]


def test_segment_no_heading():
    body = "The tablets were compressed. They were then coated\nwith a film."
    secs = segment_sections(RawDocument("d", body))
    assert len(secs) == 1 and secs[0].heading == "" and secs[0].body == body


def test_preamble_becomes_headless_section():
    secs = segment_sections(RawDocument("x", "Some preamble text.\nDETAILED DESCRIPTION\nBody text."))
    assert [(s.heading, s.body) for s in secs] == [("", "Some preamble text."), ("DETAILED DESCRIPTION", "Body text.")]


@pytest.mark.parametrize("line,expected", [
    ("EXAMPLE 12", True),
    ("Step 3", True),
    ("Example 4", True),
    ("Preparation of Compound 7", True),
    ("PHARMACEUTICAL COMPOSITIONS", True),
    ("Mix A and B.", False),
    ("The solution was stirred for 1 h. Then it was filtered.", False),
    ("EXAMPLE 1. THE MIXTURE WAS STIRRED", False),
    ("A VERY LONG UPPER CASE LINE THAT HAS WAY TOO MANY TOKENS TO BE A HEADING AT ALL", False),
    ("", False),
])
def test_heading_predicate(line, expected):
    assert is_heading(line) is expected


def test_heading_custom_pattern():
    rules = HeadingConfig(patterns=(r"Formulation [A-Z]",), allow_upper=False, allow_title_ordinal=False)
    assert is_heading("Formulation B", rules)
    assert not is_heading("EXAMPLE 1", rules)


@given(st.lists(st.sampled_from(["EXAMPLE 1", "Mix well.", "Dry the cake", "", "  ", "STEP", "Step 2",
                                 "heat to 50 C. Then cool.", "Preparation of Salt 3"]), max_size=12))
def test_segment_is_partition(lines):
    body = "\n".join(lines)
    secs = segment_sections(RawDocument("d", body))
    assert _squash("".join(s.heading + s.body for s in secs)) == _squash(body)
    assert [s.section_id for s in secs] == [f"d#{i}" for i in range(len(secs))]


def test_tokenize_examples():
    assert tokenize("") == []
    assert tokenize("stirred at 25°C.") == ["stirred", "at", "25", "°C", "."]


def test_tokenize_keeps_chemical_names():
    name = "1-[2-chloro-7-(1-ethyl-propyl)-7H-pyrrolo[2,3-d]pyrimidin-6-yl]-ethanol"
    assert tokenize(f"A solution of {name} (61 mg, 0.2 mmol)") == [
        "A", "solution", "of", name, "(", "61", "mg", ",", "0.2", "mmol", ")"]
    assert tokenize("4-((2-methylphenyl)amino)benzoic acid") == ["4-((2-methylphenyl)amino)benzoic", "acid"]


def test_tokenize_deterministic():
    text = "The residue is purified by flash chromatography (SiO₂, EtOAc/Hexane 1:3) to afford 58 mg."
    assert tokenize(text) == tokenize(text)


def test_normalize_examples(res):
    assert normalize(["The", "mixtures", "were", "stirred"], res) == ["mixture", "stir"]
    assert normalize(["25", "mg"], res) == [NUM_TOKEN, "mg"]
    assert normalize([], res) == []


@pytest.mark.parametrize("tok,num", [("25", True), ("-3.5", True), ("10%", True), ("1:3", True), ("20-25", True),
                                     ("1,000.5", True), ("9i", False), ("h2o", False), ("[NUM]", False)])
def test_number_rule(tok, num):
    assert is_number(tok) is num


@pytest.mark.parametrize("word,lemma", [("mixtures", "mixture"), ("stirred", "stir"), ("heating", "heat"),
                                        ("batches", "batch"), ("process", "process"), ("bodies", "body"),
                                        ("gas", "gas")])
def test_suffix_lemma(word, lemma):
    assert suffix_lemma(word) == lemma


_word = st.text(alphabet=st.sampled_from(list("abcdesinrgy0123456789.,-%:()[]°") ), min_size=1, max_size=12)


@settings(max_examples=300)
@given(st.lists(_word, max_size=15))
def test_normalize_idempotent_and_masks_numbers(tokens):
    res = load_resources()
    once = normalize(tokens, res)
    assert normalize(once, res) == once
    for t in once:
        assert t == NUM_TOKEN or not is_number(t)
        assert t == t.lower() or t == NUM_TOKEN


@settings(max_examples=100)
@given(st.lists(_word, max_size=15), st.lists(st.sampled_from(["ga", "stir", "mix", "the", "abc"]), max_size=3),
       st.dictionaries(st.sampled_from(["abc", "mixes", "dig"]), st.sampled_from(["the", "12", "ab", "dig"])))
def test_normalize_idempotent_any_resources(tokens, stop, lemmas):
    res = NormResources(frozenset(stop), lemmas)
    once = normalize(tokens, res)
    assert normalize(once, res) == once


def test_tokenize_section_heading_flag(res):
    sec = segment_sections(RawDocument("d", "EXAMPLE 1\nTablets were compressed."))[0]
    assert tokenize_section(sec, res).tokens == ["tablet", "compress"]
    assert tokenize_section(sec, res, include_heading=True).tokens == ["example", NUM_TOKEN, "tablet", "compress"]


def test_read_documents_rejects_duplicates(tmp_path):
    p = tmp_path / "docs.jsonl"
    p.write_text('{"doc_id": "a", "body": "x"}\n{"doc_id": "a", "body": "y"}\n')
    with pytest.raises(ValueError, match="duplicate"):
        read_documents(p)
