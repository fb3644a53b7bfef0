import pytest

from zhmt.para import (
    AlignmentError,
    ParaPipelineConfig,
    SensitiveLexicon,
    check_lengths,
    check_punct_ratio,
    check_rules,
    check_script_ratio,
    check_sensitive,
    dedup,
    normalize_pair,
    pair_files,
    read_records_tsv,
    run_para_pipeline,
    write_records_tsv,
)
from zhmt.registry import ParallelRecord
from zhmt.reporting import PipelineReport
from zhmt.tokenizer import TokenizerSpec
from zhmt.toydata import golden_para_fixture


CFG = ParaPipelineConfig()
TOK = TokenizerSpec.pipeline_spec()


def rec(src="plain source text", tgt="正常的中文句子", src_lang="en", tgt_lang="zh"):
    return ParallelRecord(src_lang, tgt_lang, src, tgt, "t")


def test_punct_ratio_examples():
    assert not check_punct_ratio(rec(src="!!!"), CFG).kept
    ok = check_punct_ratio(ParallelRecord("zh", "en", "你好。", "hi.", "t"), CFG)
    assert ok.kept  # both ratios are 1/3
    empty = check_punct_ratio(rec(src=""), CFG)
    assert not empty.kept and empty.reason == "empty"


def test_rules_examples():
    white = check_rules(rec(src="   "), CFG)
    assert not white.kept and white.reason == "whitespace_only"
    long_tok = check_rules(rec(src="x" * 150), CFG)
    assert not long_tok.kept and long_tok.reason == "long_token"
    assert check_rules(rec(), CFG).kept


def test_rules_nonprintable():
    noisy = check_rules(rec(src="ab​​​cd"), CFG)
    assert not noisy.kept and noisy.reason == "nonprintable"


def test_script_ratio_examples():
    assert not check_script_ratio(rec(tgt="hello there friend"), CFG).kept
    assert check_script_ratio(rec(tgt="你好世界"), CFG).kept
    # exactly at the threshold is kept
    assert check_script_ratio(rec(tgt="你好ok"), CFG).kept


def test_script_ratio_exempt_language():
    greek = ParallelRecord("el", "zh", "αβγδ", "中文正常", "t")
    assert check_script_ratio(greek, CFG).kept
    latin_in_greek_slot = ParallelRecord("el", "zh", "latin text", "中文正常", "t")
    assert check_script_ratio(latin_in_greek_slot, CFG).kept  # el is exempt


def test_lengths_examples():
    r = check_lengths(rec(src=" ".join(["w"] * 10), tgt="字" * 31), CFG, TOK)
    assert not r.kept and r.reason == "length_ratio"
    assert check_lengths(rec(src=" ".join(["w"] * 12), tgt="字" * 12), CFG, TOK).kept
    r = check_lengths(rec(src=" ".join(["w"] * 9), tgt="字" * 9), CFG, TOK)
    assert not r.kept and r.reason == "too_short"


def test_lengths_ratio_symmetric_and_boundary():
    # source 3x target is rejected too (symmetric), exactly 3.0 is kept
    r = check_lengths(rec(src=" ".join(["w"] * 31), tgt="字" * 10), CFG, TOK)
    assert not r.kept and r.reason == "length_ratio"
    assert check_lengths(rec(src=" ".join(["w"] * 30), tgt="字" * 10), CFG, TOK).kept


def test_lengths_empty_and_too_long():
    r = check_lengths(rec(src=""), CFG, TOK)
    assert not r.kept and r.reason == "empty"
    r = check_lengths(rec(src=" ".join(["w"] * 100), tgt="字" * 251), CFG, TOK)
    assert not r.kept and r.reason == "too_long"


def test_sensitive_examples():
    cfg = ParaPipelineConfig(sensitive=SensitiveLexicon(frozenset({"bad"})))
    r = check_sensitive(rec(src="bad bad ok"), cfg)
    assert not r.kept and r.measured == pytest.approx(2 / 3)
    assert check_sensitive(rec(src="bad ok ok"), cfg).kept
    assert check_sensitive(rec(src="bad bad bad"), CFG).kept  # empty lexicon disables


def test_sensitive_substring_for_character_mode():
    cfg = ParaPipelineConfig(sensitive=SensitiveLexicon(frozenset({"坏词"})), sensitive_freq_max=0.3)
    r = check_sensitive(rec(tgt="坏词坏词正常"), cfg)
    assert not r.kept and r.measured == pytest.approx(2 / 6)
    assert check_sensitive(rec(tgt="坏词正常正常正常正常"), cfg).kept


def test_dedup_examples():
    a = rec(src="first pair here")
    b = rec(src="second pair here")
    a2 = ParallelRecord(a.src_lang, a.tgt_lang, a.src_text, a.tgt_text, "other-id")
    assert list(dedup([a, a2])) == [a]
    assert list(dedup([a, b, a2])) == [a, b]
    assert list(dedup([])) == []


def test_normalize_examples():
    r = normalize_pair(rec(src="“hi”", tgt="１２３"))
    assert r.src_text == '"hi"'
    assert r.tgt_text == "123"
    already = rec(src='plain "text" here', tgt="中文，句子。")
    assert normalize_pair(already) == already


def test_normalize_collapses_whitespace_and_keeps_cjk_punct():
    r = normalize_pair(rec(src="  a  b  ", tgt="中文，句号。«q»"))
    assert r.src_text == "a b"
    # CJK punctuation survives; guillemets become ASCII quotes
    assert r.tgt_text == '中文，句号。"q"'


def test_pair_files(tmp_path):
    (tmp_path / "a.en").write_text("one\ntwo\n")
    (tmp_path / "a.zh").write_text("一\n二\n")
    (tmp_path / "b.en").write_text("three\n")
    pairs = pair_files(tmp_path, "en", "zh")
    assert [(p[0].name, p[1].name) for p in pairs] == [("a.en", "a.zh")]
    assert pair_files(tmp_path / "missing-empty", "en", "zh") == []


def test_pair_files_alignment_error(tmp_path):
    (tmp_path / "a.en").write_text("one\ntwo\nthree\n")
    (tmp_path / "a.zh").write_text("一\n二\n")
    with pytest.raises(AlignmentError, match="a"):
        pair_files(tmp_path, "en", "zh")


def test_golden_fixture_counts():
    records, lexicon = golden_para_fixture()
    cfg = ParaPipelineConfig(sensitive=lexicon)
    kept, report = run_para_pipeline(records, cfg)
    assert len(kept) == 6
    assert report.inputs == 12 and report.outputs == 6
    assert dict(report.stage_rejections) == {
        "punct_ratio": 1, "rules": 1, "script_ratio": 1,
        "lengths": 1, "sensitive": 1, "dedup": 1,
    }
    assert report.balanced()
    # rerun on own output rejects nothing
    again, report2 = run_para_pipeline(kept, cfg)
    assert [r.key() for r in again] == [r.key() for r in kept]
    assert report2.total_rejected() == 0


def test_empty_stream():
    kept, report = run_para_pipeline([], CFG)
    assert kept == [] and report.inputs == 0 and report.total_rejected() == 0


def test_order_preserved_across_workers():
    records, lexicon = golden_para_fixture()
    records = records * 5
    cfg = ParaPipelineConfig(sensitive=lexicon)
    base_kept, base_report = run_para_pipeline(records, cfg, workers=1)
    for w in (2, 3):
        kept, report = run_para_pipeline(records, cfg, workers=w)
        assert [r.key() for r in kept] == [r.key() for r in base_kept]
        assert report.to_text() == base_report.to_text()


def test_tsv_roundtrip_and_invalid_utf8(tmp_path):
    path = tmp_path / "in.tsv"
    good = "en\tzh\thello there\t你好世界\tsrc:1\n".encode("utf-8")
    bad = b"en\tzh\thello \xff\xfe broken\t\xba\xad\tsrc:2\n"
    path.write_bytes(good + bad)
    report = PipelineReport()
    records = read_records_tsv(path, report)
    assert len(records) == 1 and records[0].src_text == "hello there"
    assert report.reason_rejections[("ingest", "invalid_utf8")] == 1

    out = tmp_path / "out.tsv"
    write_records_tsv(records, out)
    assert read_records_tsv(out) == records


def test_config_validation():
    with pytest.raises(ValueError):
        ParaPipelineConfig(punct_ratio_max=1.5)
    with pytest.raises(ValueError):
        ParaPipelineConfig(length_ratio_max=0.5)
