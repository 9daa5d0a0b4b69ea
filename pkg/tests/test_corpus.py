"""Corpus data model, IOB codec and file format round trips."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stimulex.corpus import (
    CorpusFormatError,
    Dataset,
    Sentence,
    Span,
    Token,
    check_spans,
    iob_from_spans,
    load_corpus,
    parse_corpus,
    repair_iob,
    save_corpus,
    spans_from_iob,
    tokenization_warnings,
    write_corpus,
)
from helpers import random_any_tags, random_dataset, random_spans, random_strict_tags

TWO_LINE = "# id=h1\nHallo\tINTJ\t\t\tO\nWelt\tNOUN\t\t\tB\n"
DANGLING_I = "# id=h1\nHallo\tINTJ\t\t\tO\nWelt\tNOUN\t\t\tI\n"


def test_spans_from_iob_strict_examples():
    assert spans_from_iob(["O", "B", "I", "O"]) == [(1, 3)]
    assert spans_from_iob(["B", "I", "O", "B"]) == [(0, 2), (3, 4)]
    assert spans_from_iob([]) == []
    assert spans_from_iob(["O", "O", "O"]) == []


def test_spans_from_iob_lenient_promotes_dangling_i():
    assert spans_from_iob(["O", "I", "I", "O", "I"], "lenient") == [(1, 3), (4, 5)]
    assert spans_from_iob(["I", "I"], "lenient") == [(0, 2)]


def test_spans_from_iob_strict_rejects_dangling_i():
    with pytest.raises(ValueError, match="index 1"):
        spans_from_iob(["O", "I"])
    with pytest.raises(ValueError, match="index 0"):
        spans_from_iob(["I"])
    with pytest.raises(ValueError):
        spans_from_iob(["O", "X"])
    with pytest.raises(ValueError):
        spans_from_iob(["O", "B"], mode="sloppy")


def test_iob_from_spans_examples():
    assert iob_from_spans([], 3) == ["O", "O", "O"]
    assert iob_from_spans([(0, 3)], 3) == ["B", "I", "I"]
    assert iob_from_spans([(1, 2), (3, 5)], 5) == ["O", "B", "O", "B", "I"]


def test_iob_from_spans_touching_spans_stay_separate():
    assert iob_from_spans([(0, 2), (2, 4)], 4) == ["B", "I", "B", "I"]


def test_iob_from_spans_rejects_bad_spans():
    with pytest.raises(ValueError):
        iob_from_spans([(0, 0)], 3)
    with pytest.raises(ValueError):
        iob_from_spans([(2, 1)], 3)
    with pytest.raises(ValueError):
        iob_from_spans([(0, 4)], 3)
    with pytest.raises(ValueError):
        iob_from_spans([(0, 2), (1, 3)], 4)
    with pytest.raises(ValueError):
        iob_from_spans([(3, 4), (0, 1)], 4)


def test_span_helpers():
    assert Span(1, 4).length == 3
    assert Span(1, 4).overlaps(Span(3, 5))
    assert not Span(1, 4).overlaps(Span(4, 6))
    assert check_spans([(0, 1), (1, 3)], 3) == [(0, 1), (1, 3)]


def test_repair_iob():
    assert repair_iob(["I", "I", "O", "I"]) == ["B", "I", "O", "B"]
    assert repair_iob(["O", "B", "I"]) == ["O", "B", "I"]
    with pytest.raises(ValueError):
        repair_iob(["Q"])


# About 10^4 cases per direction; seeded, so failures reproduce.

def test_span_iob_round_trip_random():
    rng = random.Random(4711)
    for _ in range(10_000):
        n = rng.randint(0, 12)
        spans = random_spans(rng, n)
        assert spans_from_iob(iob_from_spans(spans, n)) == spans


def test_strict_tags_round_trip_random():
    rng = random.Random(4712)
    for _ in range(10_000):
        tags = random_strict_tags(rng, rng.randint(0, 12))
        assert iob_from_spans(spans_from_iob(tags), len(tags)) == tags


def test_lenient_equals_strict_after_repair_random():
    rng = random.Random(4713)
    for _ in range(10_000):
        tags = random_any_tags(rng, rng.randint(0, 12))
        assert spans_from_iob(tags, "lenient") == spans_from_iob(repair_iob(tags))


@settings(max_examples=300)
@given(st.lists(st.sampled_from("BIO"), max_size=30))
def test_lenient_spans_always_wellformed(tags):
    spans = spans_from_iob(tags, "lenient")
    check_spans(spans, len(tags))
    assert iob_from_spans(spans, len(tags)) == repair_iob(tags)


def test_parse_two_line_block():
    ds = parse_corpus(TWO_LINE)
    assert len(ds) == 1
    s = ds.sentences[0]
    assert s.id == "h1"
    assert s.surfaces() == ["Hallo", "Welt"]
    assert [t.pos for t in s.tokens] == ["INTJ", "NOUN"]
    assert s.gold == ("O", "B")
    assert s.gold_spans() == [(1, 2)]
    assert s.pred is None


def test_parse_strict_rejects_dangling_i_with_line():
    with pytest.raises(CorpusFormatError) as excinfo:
        parse_corpus(DANGLING_I)
    assert excinfo.value.line == 3


def test_parse_lenient_repairs_dangling_i():
    s = parse_corpus(DANGLING_I, mode="lenient").sentences[0]
    assert s.gold == ("O", "B")
    assert s.gold_spans() == [(1, 2)]


def test_parse_empty_file():
    assert parse_corpus("").sentences == []
    assert write_corpus(Dataset()) == ""


def test_parse_keeps_raw_pred_layer():
    text = "# id=h1\na\t\t\t\tO\tO\nb\t\t\t\tB\tI\n"
    s = parse_corpus(text).sentences[0]
    assert s.pred == ("O", "I")
    assert s.pred_spans() == [(1, 2)]
    assert write_corpus(parse_corpus(text)) == text


def test_parse_headers_round_trip():
    text = (
        "# id=h9\n# source=bild.de\n# emotion=positive surprise\n# cue=yes\n"
        "# experiencer=no\n# lang=de\n# url=https://example.org/a\n# date=2020-09-30\n"
        "Sieg\tNOUN\t\t\tB\n"
    )
    s = parse_corpus(text).sentences[0]
    assert s.emotion == "positive surprise"
    assert s.cue == "yes" and s.experiencer == "no"
    assert s.source == "bild.de" and s.lang == "de" and s.date == "2020-09-30"
    assert write_corpus(parse_corpus(text)) == text


@pytest.mark.parametrize("text,line", [
    ("# id=h1\nHallo\tX\t\n", 2),                               # 3 fields
    ("# id=h1\nHallo\tX\t\t\tO\tO\tO\n", 2),                    # 7 fields
    ("# id=h1\na\t\t\t\tQ\n", 2),                               # bad tag
    ("# id=h1\na\t\t\t\tO\n\n# id=h1\nb\t\t\t\tO\n", 4),        # duplicate id
    ("# id=h1\na\t\t\t\tO\nb\t\t\t\tO\tB\n", 3),                # 5 then 6 fields
    ("# id=h1\na\t\t\t\tO\tB\nb\t\t\t\tO\n", 3),                # 6 then 5 fields
    ("# id=h1\na\t\t\t\tO\nb\t\t\t\t\n", 3),                    # gold vanishes mid block
    ("# id=h1\n# id=h2\na\t\t\t\tO\n", 2),                      # repeated key
    ("# id=h1\n# genre=sport\na\t\t\t\tO\n", 2),                # unknown key
    ("# id=h1\n# source=\na\t\t\t\tO\n", 2),                    # empty value
    ("a\t\t\t\tO\n", 1),                                        # token before header
    ("# id=h1\na\t\t\t\tO\n# source=x\n", 3),                   # header after tokens
    ("\n# id=h1\na\t\t\t\tO\n", 1),                             # leading blank
    ("# id=h1\na\t\t\t\tO\n\n\n", 4),                           # double blank at EOF
    ("# id=h1\na\tVB\t\t\tO\n", 2),                             # unknown POS tag
    ("# id=h1\n# emotion=joy\na\t\t\t\tO\n", 1),                # unknown emotion
    ("# id=h1\n# cue=maybe\na\t\t\t\tO\n", 1),                  # bad tri-state
    ("# source=web\na\t\t\t\tO\n", 1),                          # missing id
    ("# id=h1\n\n# id=h2\na\t\t\t\tO\n", 1),                    # headers without tokens
], ids=[
    "columns3", "columns7", "badtag", "dupid", "pred-appears", "pred-vanishes",
    "gold-vanishes", "dupkey", "unknownkey", "emptyvalue", "token-first",
    "header-after-tokens", "leading-blank", "double-blank", "badpos",
    "bademotion", "badcue", "noid", "notokens",
])
def test_parse_errors_report_line(text, line):
    with pytest.raises(CorpusFormatError) as excinfo:
        parse_corpus(text)
    assert excinfo.value.line == line


def test_parse_rejects_crlf():
    with pytest.raises(CorpusFormatError):
        parse_corpus("# id=h1\r\na\t\t\t\tO\r\n")


def test_empty_pos_becomes_unk_and_writes_back_empty():
    text = "# id=h1\na\t\t\t\tO\nb\tUNK\t\t\tO\n"
    ds = parse_corpus(text)
    assert [t.pos for t in ds.sentences[0].tokens] == ["UNK", "UNK"]
    # canonical form spells UNK as an empty field on both lines
    assert write_corpus(ds) == "# id=h1\na\t\t\t\tO\nb\t\t\t\tO\n"


def test_parse_write_parse_is_parse_random():
    rng = random.Random(99)
    for _ in range(60):
        ds = random_dataset(rng)
        text = write_corpus(ds)
        again = parse_corpus(text)
        assert again.sentences == ds.sentences
        assert write_corpus(again) == text


def test_canonicalization_is_idempotent_on_noisy_input():
    noisy = "#id=h1\n#emotion=fear\nKrise\tNOUN\tsb\t\tB\n\n# id=h2\nTag\tUNK\t\t\tO\n\n"
    once = write_corpus(parse_corpus(noisy))
    assert write_corpus(parse_corpus(once)) == once
    assert parse_corpus(once).sentences == parse_corpus(noisy).sentences


def test_save_and_load(tmp_path):
    ds = random_dataset(random.Random(7))
    path = tmp_path / "tiny.conll"
    save_corpus(ds, path)
    back = load_corpus(path)
    assert back.sentences == ds.sentences
    assert back.provenance == str(path)


def test_dataset_rejects_duplicate_ids():
    tok = [Token("a")]
    with pytest.raises(ValueError):
        Dataset(sentences=[Sentence("x", tok), Sentence("x", tok)])


def test_sentence_validation():
    with pytest.raises(ValueError):
        Sentence("s1", [])
    with pytest.raises(ValueError):
        Sentence("s 1", [Token("a")])
    with pytest.raises(ValueError):
        Sentence("s1", [Token("a")], gold=["B", "I"])
    with pytest.raises(ValueError):
        Sentence("s1", [Token("a")], gold=["Q"])
    with pytest.raises(ValueError):
        Sentence("s1", [Token("a")], emotion="joy")
    with pytest.raises(ValueError):
        Sentence("s1", [Token("a")], cue="vielleicht")


def test_token_validation():
    with pytest.raises(ValueError):
        Token("")
    with pytest.raises(ValueError):
        Token("a b")
    with pytest.raises(ValueError):
        Token("a", pos="NN")
    with pytest.raises(ValueError):
        Token("a", dep="x\ty")


def test_tokenization_warnings_flag_but_never_edit():
    s = Sentence("h1", [Token("Ende."), Token("!"), Token("sauber"), Token("„Zitat")])
    ds = Dataset([s])
    warnings = tokenization_warnings(ds)
    assert len(warnings) == 2
    assert any("Ende." in w for w in warnings)
    assert s.tokens[0].surface == "Ende."
