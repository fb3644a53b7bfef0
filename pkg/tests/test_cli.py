import subprocess
import sys

import pytest

from zhmt.cli import main
from zhmt.para import read_records_tsv, write_records_tsv
from zhmt.runconfig import FullConfig, serialize_config
from zhmt.toydata import golden_para_fixture
from zhmt.trainer import RunConfig


@pytest.fixture
def para_input(tmp_path):
    records, lexicon = golden_para_fixture()
    path = tmp_path / "in.tsv"
    write_records_tsv(records, path)
    lex = tmp_path / "lex.txt"
    lex.write_text("contraband\n")
    cfg = tmp_path / "cfg.ini"
    full = FullConfig(run=RunConfig(stage="pretrain"))
    text = serialize_config(full).replace("sensitive_words = ", f"sensitive_words = {lex}")
    cfg.write_text(text)
    return path, cfg


def test_clean_para_golden(tmp_path, para_input):
    infile, cfg = para_input
    out, report = tmp_path / "out.tsv", tmp_path / "rep.txt"
    code = main(["clean-para", "--in", str(infile), "--out", str(out),
                 "--report", str(report), "--config", str(cfg)])
    assert code == 0
    assert len(read_records_tsv(out)) == 6
    text = report.read_text()
    for stage in ("punct_ratio", "rules", "script_ratio", "lengths", "sensitive", "dedup"):
        assert f"rejected\t{stage}\t1" in text

    # rerun on own output: zero rejections
    out2, report2 = tmp_path / "out2.tsv", tmp_path / "rep2.txt"
    assert main(["clean-para", "--in", str(out), "--out", str(out2),
                 "--report", str(report2), "--config", str(cfg)]) == 0
    assert "rejected" not in report2.read_text()


def test_clean_mono(tmp_path):
    infile = tmp_path / "mono.txt"
    sentence = "这是一个足够长的中文句子" * 5 + "。"
    infile.write_text(sentence + "\n")
    out, report = tmp_path / "out.txt", tmp_path / "rep.txt"
    assert main(["clean-mono", "--in", str(infile), "--out", str(out), "--report", str(report)]) == 0
    assert out.read_text().strip() == sentence
    assert "inputs\t1" in report.read_text()


def test_missing_input_exits_3(tmp_path):
    code = main(["clean-mono", "--in", str(tmp_path / "nope.txt"),
                 "--out", str(tmp_path / "o"), "--report", str(tmp_path / "r")])
    assert code == 3


def test_bad_config_exits_2(tmp_path, para_input):
    infile, _ = para_input
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[para]\nbogus_key = 1\n\n[run]\nstage = pretrain\n")
    code = main(["clean-para", "--in", str(infile), "--out", str(tmp_path / "o"),
                 "--report", str(tmp_path / "r"), "--config", str(cfg)])
    assert code == 2


def test_pair_dir_alignment_error_exits_4(tmp_path):
    (tmp_path / "a.en").write_text("one\ntwo\n")
    (tmp_path / "a.zh").write_text("一\n")
    code = main(["clean-para", "--pair-dir", str(tmp_path), "--src", "en", "--tgt", "zh",
                 "--out", str(tmp_path / "o"), "--report", str(tmp_path / "r")])
    assert code == 4


def test_augment_identity(tmp_path, para_input):
    infile, cfg = para_input
    cleaned = tmp_path / "clean.tsv"
    main(["clean-para", "--in", str(infile), "--out", str(cleaned),
          "--report", str(tmp_path / "r"), "--config", str(cfg)])
    out = tmp_path / "aug.tsv"
    assert main(["augment", "--in", str(cleaned), "--out", str(out),
                 "--translator", "identity"]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 12  # 6 originals + 6 synthetics
    assert sum(1 for l in lines if l.endswith("\tsynthetic")) == 6
    assert sum(1 for l in lines if l.endswith("\toriginal")) == 6


def test_augment_tier_filter(tmp_path, para_input):
    infile, cfg = para_input
    cleaned = tmp_path / "clean.tsv"
    main(["clean-para", "--in", str(infile), "--out", str(cleaned),
          "--report", str(tmp_path / "r"), "--config", str(cfg)])
    out = tmp_path / "aug.tsv"
    # all fixture pairs are en->zh (High tier), so low-tier filtering adds nothing
    assert main(["augment", "--in", str(cleaned), "--out", str(out),
                 "--translator", "identity", "--tiers", "low,verylow"]) == 0
    assert len(out.read_text().splitlines()) == 6


def test_augment_unknown_translator_exits_2(tmp_path, para_input):
    infile, _ = para_input
    assert main(["augment", "--in", str(infile), "--out", str(tmp_path / "o"),
                 "--translator", "nonexistent"]) == 2


def test_augment_dictionary_requires_dict(tmp_path, para_input):
    infile, _ = para_input
    assert main(["augment", "--in", str(infile), "--out", str(tmp_path / "o"),
                 "--translator", "dictionary"]) == 2


def test_score_identity(tmp_path, capsys):
    f = tmp_path / "hr.tsv"
    f.write_text("en\tzh\t你好世界\t你好世界\n")
    out = tmp_path / "scores.tsv"
    assert main(["score", "--hyp-ref", str(f), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "100.0000" in printed
    assert "bleu\t100.000000" in out.read_text()


def test_unknown_flag_exits_2():
    proc = subprocess.run(
        [sys.executable, "-m", "zhmt.cli", "score", "--hyp-ref", "x", "--out", "y", "--bogus"],
        capture_output=True,
    )
    assert proc.returncode == 2


def test_help_lists_subcommands():
    proc = subprocess.run([sys.executable, "-m", "zhmt.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("clean-mono", "clean-para", "augment", "train-stage1",
                "train-stage2", "evaluate", "score"):
        assert sub in proc.stdout
