"""Tokenization, lexicon handling, vocabulary, and region-document assembly."""

import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geotopics.corpus import (
    CorpusError,
    RawRecord,
    SlangLexicon,
    Vocabulary,
    assemble_region_documents,
    load_slang_lexicon,
    read_records_jsonl,
    slang_ratio,
    split_located,
    strip_to_slang,
    tfidf,
    tokenize,
    tokenize_record,
    write_records_jsonl,
)

TS = datetime(2015, 6, 1, tzinfo=timezone.utc)


def rec(text, region="r1", rid="t1"):
    return RawRecord(record_id=rid, text=text, region=region, timestamp=TS)


# ----------------------------------------------------------------- tokenizer


def test_tokenize_strips_urls_mentions_and_stopwords():
    assert tokenize("HIV testing @clinic http://t.co/x") == ["hiv", "testing"]


def test_tokenize_drops_short_tokens_and_stopwords():
    assert tokenize("a I ok") == []


def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("Flu-Season; STAYING healthy!") == [
        "flu",
        "season",
        "staying",
        "healthy",
    ]


def test_tokenize_strips_www_urls():
    assert tokenize("see www.example.com/page details") == ["see", "details"]


def test_tokenize_keeps_numbers_and_inner_apostrophes():
    toks = tokenize("covid19 y'all 'quoted'")
    assert toks == ["covid19", "y'all", "quoted"]


@given(st.text(max_size=200))
def test_tokenize_idempotent(text):
    once = tokenize(text)
    assert tokenize(" ".join(once)) == once


# ------------------------------------------------------------------- lexicon


def test_strip_to_slang_keeps_only_lexicon_tokens():
    lex = SlangLexicon(frozenset({"lit", "fam"}))
    tr = tokenize_record(rec("hiv lit fam"), lexicon=lex)
    assert strip_to_slang(tr, lex) == ["lit", "fam"]


def test_slang_ratio_direct_division():
    tr = tokenize_record(
        rec("aa bb cc dd ee ff gg hh ii lit fam dope"),
        lexicon=SlangLexicon(frozenset({"lit", "fam", "dope"})),
    )
    assert tr.token_count == 12
    assert tr.slang_count == 3
    assert slang_ratio(tr) == 0.25


def test_slang_ratio_zero_for_empty_record():
    tr = tokenize_record(rec(""), lexicon=SlangLexicon(frozenset({"lit"})))
    assert slang_ratio(tr) == 0.0


def test_load_slang_lexicon_normalizes_and_skips_comments(tmp_path):
    p = tmp_path / "slang.txt"
    p.write_text("# comment\nLit\n\nfam\n")
    lex = load_slang_lexicon(str(p))
    assert "lit" in lex and "fam" in lex and len(lex) == 2


def test_load_slang_lexicon_rejects_empty(tmp_path):
    p = tmp_path / "slang.txt"
    p.write_text("# nothing here\n")
    with pytest.raises(CorpusError, match="no terms"):
        load_slang_lexicon(str(p))


# ------------------------------------------------------------------ records


def test_records_jsonl_round_trip(tmp_path):
    recs = [
        RawRecord("a1", "hello world", "r1", TS),
        RawRecord("a2", "no region", None, TS),
    ]
    p = tmp_path / "r.jsonl"
    write_records_jsonl(recs, str(p))
    back = list(read_records_jsonl(str(p)))
    assert back == recs


def test_records_jsonl_accepts_zulu_timestamps(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text('{"id": "a", "text": "x", "region": "r", "ts": "2015-06-01T10:00:00Z"}\n')
    (r,) = read_records_jsonl(str(p))
    assert r.timestamp.year == 2015
    assert r.timestamp.tzinfo is not None


@pytest.mark.parametrize(
    "line,msg",
    [
        ("not json", "invalid JSON"),
        ('{"text": "x", "ts": "2015-01-01"}', "missing or empty 'id'"),
        ('{"id": "a", "text": "x"}', "missing 'ts'"),
        ('{"id": "a", "text": "x", "ts": "yesterday"}', "bad timestamp"),
        ('{"id": "a", "text": 5, "ts": "2015-01-01"}', "'text' must be a string"),
        ('{"id": "a", "text": "x", "region": 9, "ts": "2015-01-01"}', "'region'"),
    ],
)
def test_records_jsonl_rejects_malformed_lines(tmp_path, line, msg):
    p = tmp_path / "bad.jsonl"
    p.write_text(line + "\n")
    with pytest.raises(CorpusError, match=msg):
        list(read_records_jsonl(str(p)))


def test_split_located_quarantines_unknown_regions():
    recs = [
        tokenize_record(rec("aa bb", region="known")),
        tokenize_record(rec("cc dd", region=None)),
        tokenize_record(rec("ee ff", region="mystery")),
    ]
    located, unlocated = split_located(recs, known_regions={"known"})
    assert [r.region for r in located] == ["known"]
    assert len(unlocated) == 2


# --------------------------------------------------------------- vocabulary


def test_vocabulary_build_filters_by_document_frequency():
    docs = [["aa", "bb"], ["aa", "cc"], ["aa", "bb"], ["aa", "dd"]]
    vocab = Vocabulary.build(docs, min_df=2, max_df_fraction=0.5)
    # aa: df 4/4 too common; bb: df 2 kept; cc, dd: df 1 too rare
    assert vocab.tokens == ["bb"]
    assert vocab.doc_freq.tolist() == [2]


def test_vocabulary_order_is_input_independent():
    docs = [["zz", "mm"], ["mm", "aa"], ["zz", "aa"]]
    v1 = Vocabulary.build(docs, min_df=1, max_df_fraction=1.0)
    v2 = Vocabulary.build(list(reversed(docs)), min_df=1, max_df_fraction=1.0)
    assert v1.tokens == v2.tokens == sorted(v1.tokens)
    assert v1.content_hash() == v2.content_hash()


def test_vocabulary_map_tokens_drops_oov():
    vocab = Vocabulary(["aa", "bb"], [1, 1])
    assert vocab.map_tokens(["bb", "zz", "aa", "bb"]) == [1, 0, 1]


def test_vocabulary_rejects_duplicates():
    with pytest.raises(CorpusError, match="duplicate"):
        Vocabulary(["aa", "aa"], [1, 1])


def test_vocabulary_csv_round_trip(tmp_path):
    vocab = Vocabulary(["aa", "bb", "cc"], [3, 1, 2])
    p = tmp_path / "vocab.csv"
    vocab.save_csv(str(p))
    back = Vocabulary.load_csv(str(p))
    assert back.tokens == vocab.tokens
    assert back.doc_freq.tolist() == vocab.doc_freq.tolist()
    assert back.content_hash() == vocab.content_hash()


# ------------------------------------------------------- documents and tfidf


def test_region_documents_preserve_token_mass():
    lex = None
    records = [
        tokenize_record(rec("aa bb aa", region="r1", rid="x1"), lex),
        tokenize_record(rec("bb cc", region="r1", rid="x2"), lex),
        tokenize_record(rec("cc cc dd", region="r2", rid="x3"), lex),
    ]
    vocab = Vocabulary.build([r.tokens for r in records], min_df=1, max_df_fraction=1.0)
    docs = assemble_region_documents(records, vocab)
    total_bag = sum(d.token_total for d in docs.values())
    total_raw = sum(r.token_count for r in records)
    assert total_bag == total_raw == 8
    assert docs["r1"].record_count == 2
    assert docs["r2"].record_count == 1


def test_region_documents_require_region_ids():
    records = [tokenize_record(rec("aa bb", region=None))]
    vocab = Vocabulary(["aa", "bb"], [1, 1])
    with pytest.raises(CorpusError, match="no region id"):
        assemble_region_documents(records, vocab)


def test_tfidf_matches_hand_formula():
    records = [
        tokenize_record(rec("aa aa aa", region="r1", rid="x1")),
        tokenize_record(rec("bb", region="r2", rid="x2")),
    ]
    vocab = Vocabulary.build([r.tokens for r in records], min_df=1, max_df_fraction=1.0)
    docs = assemble_region_documents(records, vocab)
    region_ids, weights = tfidf(docs, vocab)
    assert region_ids == ["r1", "r2"]
    i_aa = vocab.index["aa"]
    # token in 1 of 2 docs with tf 3 -> 3 * ln(2)
    assert weights[0, i_aa] == pytest.approx(3 * math.log(2), abs=1e-12)
    assert weights[1, i_aa] == 0.0


def test_tfidf_zero_for_everywhere_tokens():
    records = [
        tokenize_record(rec("aa bb", region="r1", rid="x1")),
        tokenize_record(rec("aa cc", region="r2", rid="x2")),
    ]
    vocab = Vocabulary.build([r.tokens for r in records], min_df=1, max_df_fraction=1.0)
    _, weights = tfidf(assemble_region_documents(records, vocab), vocab)
    i_aa = vocab.index["aa"]
    assert np.all(weights[:, i_aa] == 0.0)  # idf = ln(2/2) = 0
