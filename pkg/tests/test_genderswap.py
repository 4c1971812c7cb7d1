import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biascope.conll import read_documents, write_documents
from biascope.corpus_stats import scan
from biascope.errors import DocumentError, SwapError
from biascope.genderswap import (
    CorefDocument,
    augment_corpus,
    swap_coref_document,
    swap_sentence,
)
from biascope.lexicon import load_default_lexicon

LEX = load_default_lexicon()

# pair vocabulary without the ambiguous his/him/her/hers cluster
UNAMBIGUOUS = [m for m, _ in LEX.swap_pairs] + [f for _, f in LEX.swap_pairs]
NEUTRAL = ["the", "walked", "to", "town", "and", "slept", ".", "Big", "DOG", "42"]


def test_simple_swap():
    result = swap_sentence(["He", "likes", "his", "dog"], LEX)
    assert list(result.tokens) == ["She", "likes", "her", "dog"]
    assert result.swapped_positions == (0, 2)


def test_her_heuristic_objective_before_punctuation():
    result = swap_sentence(["I", "saw", "her", "."], LEX)
    assert list(result.tokens) == ["I", "saw", "him", "."]


def test_her_heuristic_possessive_before_noun():
    result = swap_sentence(["I", "saw", "her", "dog"], LEX)
    assert list(result.tokens) == ["I", "saw", "his", "dog"]


def test_her_heuristic_objective_before_auxiliary():
    result = swap_sentence(["they", "told", "her", "was", "wrong"], LEX)
    assert result.tokens[2] == "him"


def test_her_pos_tag_overrides_heuristic():
    result = swap_sentence(["her", "car"], LEX, pos=["PRP$", "NN"])
    assert list(result.tokens) == ["his", "car"]
    result = swap_sentence(["saw", "her", "car"], LEX, pos=["VBD", "PRP", "NN"])
    assert result.tokens[1] == "him"


def test_hers_requires_pronoun_pos():
    assert swap_sentence(["it", "is", "hers"], LEX).tokens[2] == "hers"
    assert swap_sentence(["it", "is", "hers"], LEX, pos=["PRP", "VBZ", "PRP"]).tokens[2] == "his"


def test_sentence_final_her_is_objective():
    assert swap_sentence(["we", "saw", "her"], LEX).tokens[2] == "him"


def test_case_preservation():
    result = swap_sentence(["HE", "He", "he", "FATHER", "Mother"], LEX)
    assert list(result.tokens) == ["SHE", "She", "she", "MOTHER", "Father"]


def test_empty_sentence_rejected():
    with pytest.raises(SwapError):
        swap_sentence([], LEX)


def test_pos_length_mismatch_rejected():
    with pytest.raises(SwapError):
        swap_sentence(["he"], LEX, pos=["PRP", "NN"])


@given(
    st.lists(
        st.sampled_from(UNAMBIGUOUS + NEUTRAL),
        min_size=1,
        max_size=12,
    )
)
@settings(max_examples=300, deadline=None)
def test_involution_on_unambiguous_tokens(tokens):
    once = swap_sentence(tokens, LEX)
    twice = swap_sentence(list(once.tokens), LEX)
    assert list(twice.tokens) == list(tokens)
    assert len(once.tokens) == len(tokens)


@given(st.lists(st.sampled_from(UNAMBIGUOUS + NEUTRAL), min_size=1, max_size=10))
@settings(max_examples=200, deadline=None)
def test_case_pattern_class_preserved(tokens):
    import random

    rng = random.Random(hash(tuple(tokens)) & 0xFFFF)
    styled = []
    for tok in tokens:
        style = rng.randrange(3)
        styled.append(tok.upper() if style == 0 else tok.capitalize() if style == 1 else tok)
    result = swap_sentence(styled, LEX)
    for i in result.swapped_positions:
        orig, new = styled[i], result.tokens[i]
        if orig.isupper() and len(orig) > 1:
            assert new.isupper()
        elif orig[:1].isupper():
            assert new[:1].isupper()
        else:
            assert new == new.lower() or not new.isalpha()


def make_doc():
    return CorefDocument(
        doc_id="d1",
        sentences=[["Mary", "said", "she", "left"]],
        coref_spans=[(0, 0, 0, 0), (0, 0, 2, 2)],
        ner=[["PERSON", "-", "-", "-"]],
    )


def test_swap_coref_document_spec_example():
    out = swap_coref_document(make_doc(), LEX, anonymize=True)
    assert out.sentences == [["E1", "said", "he", "left"]]
    assert out.coref_spans == [(0, 0, 0, 0), (0, 0, 2, 2)]
    assert out.ner == [["PERSON", "-", "-", "-"]]


def test_swap_fixed_point_without_gendered_tokens():
    doc = CorefDocument(doc_id="d2", sentences=[["the", "report", "arrived"]])
    out = swap_coref_document(doc, LEX)
    assert out.sentences == doc.sentences


def test_invalid_span_rejected_before_rewrite():
    doc = CorefDocument(doc_id="d3", sentences=[["a", "b"]], coref_spans=[(0, 0, 1, 5)])
    with pytest.raises(DocumentError):
        swap_coref_document(doc, LEX)


def test_duplicate_mention_rejected():
    doc = CorefDocument(
        doc_id="d4",
        sentences=[["a", "b"]],
        coref_spans=[(0, 0, 0, 0), (1, 0, 0, 0)],
    )
    with pytest.raises(DocumentError, match="more than one cluster"):
        doc.validate()


def test_anonymize_stable_placeholders():
    doc = CorefDocument(
        doc_id="d5",
        sentences=[["John", "met", "Mary"], ["Mary", "met", "John"]],
        ner=[["PERSON", "-", "PERSON"], ["PERSON", "-", "PERSON"]],
    )
    out = swap_coref_document(doc, LEX, anonymize=True)
    assert out.sentences == [["E1", "met", "E2"], ["E2", "met", "E1"]]


def test_augment_doubles_and_names(fixtures_dir):
    docs = read_documents(fixtures_dir / "docs_20.conll")
    assert len(docs) == 20
    augmented = augment_corpus(docs, LEX)
    assert len(augmented) == 40
    assert [d.doc_id for d in augmented[:20]] == [d.doc_id for d in docs]
    assert augmented[20].doc_id == docs[0].doc_id + "_swapped"
    buf_orig, buf_first = io.StringIO(), io.StringIO()
    write_documents(docs, buf_orig)
    write_documents(augmented[:20], buf_first)
    assert buf_orig.getvalue() == buf_first.getvalue()


def test_augment_equalizes_pronoun_totals(fixtures_dir):
    docs = read_documents(fixtures_dir / "docs_20.conll")
    augmented = augment_corpus(docs, LEX)
    stream = [s for d in augmented for s in d.sentences]
    stats = scan(stream, LEX)
    assert stats.male_total == stats.female_total
    before = scan([s for d in docs for s in d.sentences], LEX)
    assert before.male_total != before.female_total  # fixture is intentionally skewed


def test_annotation_preservation_on_fixture(fixtures_dir):
    docs = read_documents(fixtures_dir / "docs_20.conll")
    for doc in docs:
        out = swap_coref_document(doc, LEX)
        assert out.coref_spans == doc.coref_spans
        assert out.pos == doc.pos
        assert out.ner == doc.ner
        assert [len(s) for s in out.sentences] == [len(s) for s in doc.sentences]


def test_conll_round_trip(fixtures_dir):
    docs = read_documents(fixtures_dir / "docs_20.conll")
    buf = io.StringIO()
    write_documents(docs, buf)
    reparsed = read_documents(io.StringIO(buf.getvalue()))
    assert len(reparsed) == len(docs)
    for a, b in zip(docs, reparsed):
        assert a.doc_id == b.doc_id
        assert a.sentences == b.sentences
        assert sorted(a.coref_spans) == sorted(b.coref_spans)
        assert a.pos == b.pos
        assert a.ner == b.ner


def test_conll_rejects_bad_column_count():
    text = "#begin document x\nx\t0\tword\t-\t-\n#end document\n"
    with pytest.raises(DocumentError, match="6 columns"):
        read_documents(io.StringIO(text))


def test_conll_rejects_unclosed_span():
    text = "#begin document x\nx\t0\tword\t-\t-\t(3\n\n#end document\n"
    with pytest.raises(DocumentError, match="unclosed"):
        read_documents(io.StringIO(text))
