import re
from pathlib import Path

import hypothesis.strategies as st
from hypothesis import given

from zhmt.charclass import CLASSES, RANGES, ScriptHistogram, classify_char, script_histogram


def test_empty_histogram_is_all_zero():
    assert script_histogram("") == ScriptHistogram()


def test_mixed_cjk_latin():
    h = script_histogram("你好ab")
    assert (h.cjk, h.latin) == (2, 2)
    assert h.total() == 4
    assert h.letters() == 4


def test_one_of_each_class():
    h = script_histogram("a 1.")
    assert (h.latin, h.whitespace, h.digit, h.punctuation) == (1, 1, 1, 1)


def test_classify_char_spot_checks():
    assert classify_char("你") == "cjk"
    assert classify_char("a") == "latin"
    assert classify_char("ж") == "cyrillic"
    assert classify_char("ب") == "arabic"
    assert classify_char("ह") == "devanagari"
    assert classify_char("α") == "other_letter"
    assert classify_char("。") == "punctuation"
    assert classify_char("　") == "punctuation"  # ideographic space block rule
    assert classify_char(" ") == "whitespace"
    assert classify_char("​") == "nonprintable"
    assert classify_char("€") == "other"
    assert classify_char("５") == "digit"


text_strategy = st.text(
    alphabet=st.characters(codec="utf-8", exclude_categories=("Cs",)), max_size=60
)


@given(text_strategy)
def test_total_equals_scalar_count(s):
    assert script_histogram(s).total() == len(s)


@given(text_strategy, text_strategy)
def test_histogram_additivity(a, b):
    assert script_histogram(a + b) == script_histogram(a) + script_histogram(b)


def test_ranges_sorted_and_disjoint():
    for (f1, l1, _), (f2, _, _) in zip(RANGES, RANGES[1:]):
        assert f1 <= l1 < f2


def test_scripts_md_matches_code_table():
    doc = Path(__file__).resolve().parents[1] / "SCRIPTS.md"
    rows = re.findall(r"\| U\+([0-9A-F]{4,6}) \| U\+([0-9A-F]{4,6}) \| (\w+) \|", doc.read_text())
    documented = [(int(a, 16), int(b, 16), cls) for a, b, cls in rows]
    assert documented == RANGES
    assert all(cls in CLASSES for _, _, cls in documented)
