import pytest

from biascope.errors import LexiconError, LexiconParseError
from biascope.lexicon import (
    GenderLexicon,
    load_default_lexicon,
    load_lexicon,
)


def write_lexicon(tmp_path, text):
    path = tmp_path / "lex.tsv"
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_file(tmp_path):
    path = write_lexicon(tmp_path, "pronoun_m\the\npronoun_f\tshe\nocc\tnurse\tF\n")
    lex = load_lexicon(path)
    assert lex.male_pronouns == {"he"}
    assert lex.female_pronouns == {"she"}
    assert lex.occupations == ((("nurse",), "F"),)


def test_empty_file_rejected(tmp_path):
    path = write_lexicon(tmp_path, "")
    with pytest.raises(LexiconError, match="no pronouns"):
        load_lexicon(path)


def test_comments_and_blank_lines_ignored(tmp_path):
    path = write_lexicon(tmp_path, "# header\n\npronoun_m\the\n  # indented comment\n")
    lex = load_lexicon(path)
    assert lex.male_pronouns == {"he"}
    # no pronoun_f records: defaults kick in
    assert lex.female_pronouns == {"she", "her"}


def test_duplicate_female_column_rejected(tmp_path):
    path = write_lexicon(tmp_path, "pair\the\tshe\npair\this\tshe\n")
    with pytest.raises(LexiconError, match="duplicate female column"):
        load_lexicon(path)


def test_duplicate_male_column_rejected(tmp_path):
    path = write_lexicon(tmp_path, "pair\the\tshe\npair\the\ther\n")
    with pytest.raises(LexiconError, match="duplicate male column"):
        load_lexicon(path)


def test_overlapping_pronoun_sets_rejected(tmp_path):
    path = write_lexicon(tmp_path, "pronoun_m\the\npronoun_f\the\n")
    with pytest.raises(LexiconError, match="overlap"):
        load_lexicon(path)


def test_malformed_line_reports_line_number(tmp_path):
    path = write_lexicon(tmp_path, "pronoun_m\the\nocc\tnurse\n")
    with pytest.raises(LexiconParseError, match="line 2"):
        load_lexicon(path)


def test_unknown_record_kind(tmp_path):
    path = write_lexicon(tmp_path, "frobnicate\tx\n")
    with pytest.raises(LexiconParseError, match="unknown record kind"):
        load_lexicon(path)


def test_conflicting_occupation_labels(tmp_path):
    path = write_lexicon(tmp_path, "pronoun_m\the\nocc\tnurse\tF\nocc\tnurse\tM\n")
    with pytest.raises(LexiconError, match="two labels"):
        load_lexicon(path)


def test_ambig_source_cannot_be_pair_column(tmp_path):
    path = write_lexicon(tmp_path, "pair\this\ther\nambig\ther\this,him\ther\n")
    with pytest.raises(LexiconError, match="pair column"):
        load_lexicon(path)


def test_unknown_rule_tag(tmp_path):
    path = write_lexicon(tmp_path, "pronoun_m\the\nambig\ther\this,him\tbogus\n")
    with pytest.raises(LexiconError, match="unknown ambiguity rule"):
        load_lexicon(path)


def test_case_folding_on_load(tmp_path):
    path = write_lexicon(tmp_path, "pronoun_m\tHE\npair\tKing\tQueen\n")
    lex = load_lexicon(path)
    assert lex.male_pronouns == {"he"}
    assert ("king", "queen") in lex.swap_pairs


def test_lexicon_hash_is_content_addressed(tmp_path):
    a = load_lexicon(write_lexicon(tmp_path, "pronoun_m\the\npronoun_f\tshe\n"))
    b = GenderLexicon(male_pronouns=frozenset({"he"}), female_pronouns=frozenset({"she"}))
    assert a.lexicon_hash == b.lexicon_hash
    c = GenderLexicon(male_pronouns=frozenset({"him"}), female_pronouns=frozenset({"she"}))
    assert a.lexicon_hash != c.lexicon_hash


def test_default_lexicon_valid():
    lex = load_default_lexicon()
    assert lex.male_pronouns == {"he", "his", "him"}
    assert lex.female_pronouns == {"she", "her"}
    assert len(lex.occupations) == 40
    assert len(lex.swap_pairs) >= 100
    assert ("construction", "worker") in {s for s, _ in lex.occupations}
    # the ambiguous cluster is fully covered
    assert set(lex.ambiguous_map) == {"his", "him", "her", "hers"}
