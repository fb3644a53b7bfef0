import math
from collections import Counter

import numpy as np
import pytest

from zhmt.evaluator import EvalPair, bleu, build_report, chrf, render_report, report_tsv
from zhmt.registry import ResourceTier
from zhmt.tokenizer import TokenizerSpec

SPEC = TokenizerSpec.pipeline_spec()


def brute_force_chrf(hyp: str, ref: str, max_order: int = 6, beta: float = 2.0) -> float:
    """Independent chrF oracle: direct n-gram enumeration per order."""
    h = "".join(hyp.split())
    r = "".join(ref.split())
    precisions, recalls = [], []
    for n in range(1, max_order + 1):
        hgrams = Counter(h[i : i + n] for i in range(len(h) - n + 1))
        rgrams = Counter(r[i : i + n] for i in range(len(r) - n + 1))
        ht, rt = sum(hgrams.values()), sum(rgrams.values())
        if ht + rt == 0:
            continue
        overlap = sum((hgrams & rgrams).values())
        precisions.append(overlap / ht if ht else 0.0)
        recalls.append(overlap / rt if rt else 0.0)
    if not precisions:
        return 0.0
    p = sum(precisions) / len(precisions)
    q = sum(recalls) / len(recalls)
    if p + q == 0:
        return 0.0
    return 100.0 * (1 + beta**2) * p * q / (beta**2 * p + q)


def test_bleu_identity_is_100():
    pairs = [EvalPair("the cat sat down", "the cat sat down", ("fr", "en")),
             EvalPair("你好世界就在这里", "你好世界就在这里", ("en", "zh"))]
    assert bleu(pairs, SPEC) == pytest.approx(100.0, abs=1e-9)


def test_bleu_hand_case():
    pairs = [EvalPair("a b c d", "a b c e", ("fr", "en"))]
    # precisions 3/4, 2/3, 1/2 and smoothed 1/2 at order 4 -> 100 * (1/8)^(1/4)
    assert bleu(pairs, SPEC) == pytest.approx(100.0 * (1 / 8) ** 0.25, abs=1e-9)
    assert bleu(pairs, SPEC) == pytest.approx(59.46, abs=0.01)


def test_bleu_disjoint_is_smoothed_not_zero():
    pairs = [EvalPair("x y z", "a b c", ("fr", "en"))]
    # all orders smoothed: p = (1/4, 1/3, 1/2, 1/1), BP = 1
    expected = 100.0 * math.exp(sum(math.log(p) for p in (1 / 4, 1 / 3, 1 / 2, 1.0)) / 4)
    assert bleu(pairs, SPEC) == pytest.approx(expected, abs=1e-9)
    assert bleu(pairs, SPEC) > 0.0


def test_bleu_brevity_penalty():
    short = [EvalPair("a b", "a b c d", ("fr", "en"))]
    long_enough = [EvalPair("a b c d", "a b c d", ("fr", "en"))]
    assert bleu(short, SPEC) < bleu(long_enough, SPEC)
    # hypothesis longer than reference is not penalized
    longer = [EvalPair("a b c d e", "a b c d", ("fr", "en"))]
    assert bleu(longer, SPEC) > bleu(short, SPEC)


def test_bleu_permutation_invariance():
    pairs = [
        EvalPair("a b c", "a b d", ("fr", "en")),
        EvalPair("p q r s", "p q r t", ("fr", "en")),
        EvalPair("m n", "m n", ("fr", "en")),
    ]
    assert bleu(pairs, SPEC) == pytest.approx(bleu(pairs[::-1], SPEC), abs=1e-12)


def test_bleu_monotone_under_exact_match_append():
    base = [EvalPair("a b c d", "a b c d e f", ("fr", "en"))]
    # BP < 1 here, so construct a BP == 1 base instead
    base = [EvalPair("a b c d e f", "a b c e", ("fr", "en"))]
    score_before = bleu(base, SPEC)
    appended = base + [EvalPair("g h i j", "g h i j", ("fr", "en"))]
    assert bleu(appended, SPEC) >= score_before - 1e-12


def test_bleu_empty_corpus_errors():
    with pytest.raises(ValueError):
        bleu([], SPEC)


def test_chrf_identity_and_disjoint():
    assert chrf([EvalPair("ab", "ab", ("fr", "en"))]) == pytest.approx(100.0)
    assert chrf([EvalPair("你好世界", "你好世界", ("en", "zh"))]) == pytest.approx(100.0)
    assert chrf([EvalPair("abc", "xyz", ("fr", "en"))]) == 0.0


def test_chrf_hand_case_matches_oracle():
    got = chrf([EvalPair("abcd", "abce", ("fr", "en"))])
    assert got == pytest.approx(brute_force_chrf("abcd", "abce"), abs=1e-12)


def test_chrf_random_pairs_match_oracle():
    rng = np.random.default_rng(0)
    alphabet = "abcde你好 "
    for _ in range(100):
        h = "".join(rng.choice(list(alphabet), size=rng.integers(0, 12)))
        r = "".join(rng.choice(list(alphabet), size=rng.integers(1, 12)))
        assert chrf([EvalPair(h, r, ("en", "zh"))]) == pytest.approx(
            brute_force_chrf(h, r), abs=1e-9
        )


def test_chrf_whitespace_stripped():
    assert chrf([EvalPair("a b", "ab", ("fr", "en"))]) == pytest.approx(100.0)


def test_reference_must_be_nonempty():
    with pytest.raises(ValueError):
        EvalPair("h", "", ("fr", "en"))


def test_report_grouping_and_means():
    scores = {
        ("en", "zh"): {"bleu": 20.0},
        ("fr", "zh"): {"bleu": 30.0},
        ("bo", "zh"): {"bleu": 10.0},
    }
    rep = build_report(scores)
    assert rep.tier_means[ResourceTier.HIGH]["bleu"] == pytest.approx(25.0, abs=1e-9)
    assert rep.tier_means[ResourceTier.VERY_LOW]["bleu"] == pytest.approx(10.0)
    assert rep.overall["bleu"] == pytest.approx(20.0)


def test_report_renders_reference_row():
    scores = {("en", "zh"): {"bleu": 37.0257}, ("sw", "zh"): {"bleu": 25.2682},
              ("ne", "zh"): {"bleu": 20.6446}, ("bo", "zh"): {"bleu": 20.6649}}
    text = render_report(build_report(scores), model_name="toolkit")
    assert "37.0257 25.2682 20.6446 20.6649" in text


def test_report_single_pair_leaves_other_tiers_empty():
    text = render_report(build_report({("en", "zh"): {"bleu": 50.0}}))
    row = [l for l in text.splitlines() if l.startswith("model ")][0]
    assert row.split()[1:] == ["50.0000", "-", "-", "-"]


def test_report_tsv_shape():
    tsv = report_tsv(build_report({("en", "zh"): {"bleu": 1.0, "chrf": 2.0}}))
    assert "pair\ten-zh\tbleu\t1.000000" in tsv
    assert "tier\tHigh\tchrf\t2.000000" in tsv
    assert "overall\t-\tbleu\t1.000000" in tsv


def test_unknown_language_in_report():
    with pytest.raises(KeyError):
        build_report({("qq", "zh"): {"bleu": 1.0}})
