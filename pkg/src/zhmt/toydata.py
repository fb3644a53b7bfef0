"""Deterministic toy corpora for tests and demo runs.

Everything here is seeded and reproducible: the monolingual overfit corpus,
the dictionary copy-translation task, the 12-pair cleaning fixture with one
planned rejection per stage, and bulk synthetic pair generation for
throughput checks.
"""

from __future__ import annotations

import numpy as np

from .registry import ParallelRecord
from .para import SensitiveLexicon
from .templates import InstructionTemplate

_UNITS = ["今天天气", "我们出门", "孩子读书", "山上下雪", "河边种树", "大家吃饭", "老师讲课", "电车到站"]


def mono_toy_corpus(n: int = 32) -> list[str]:
    """Short, highly regular Chinese sentences that a desk-scale model can
    overfit within a few hundred steps."""
    out = []
    for i in range(n):
        a = _UNITS[i % len(_UNITS)]
        b = _UNITS[(i // len(_UNITS)) % len(_UNITS)]
        out.append(f"{a}的时候{b}。{a}真的很好。")
    return out


COPY_TASK_WORDS = ["one", "two", "three", "four", "five"]
COPY_TASK_CHARS = "一二三四五"


def copy_task_records(n: int = 20, seed: int = 42) -> list[ParallelRecord]:
    """en->zh pairs where each source word maps to one Chinese character."""
    table = dict(zip(COPY_TASK_WORDS, COPY_TASK_CHARS))
    rng = np.random.default_rng(seed)
    records: list[ParallelRecord] = []
    seen: set[str] = set()
    while len(records) < n:
        k = int(rng.integers(3, 6))
        words = [COPY_TASK_WORDS[int(i)] for i in rng.integers(0, len(COPY_TASK_WORDS), size=k)]
        src = " ".join(words)
        if src in seen:
            continue
        seen.add(src)
        tgt = "".join(table[w] for w in words)
        records.append(ParallelRecord("en", "zh", src, tgt, f"toy:{len(records)}"))
    return records


def copy_task_dictionary() -> dict[str, str]:
    """zh->en word map for the dictionary back-translator (keys are the
    Chinese characters of the copy task)."""
    return {c: w for w, c in zip(COPY_TASK_WORDS, COPY_TASK_CHARS)}


def copy_task_template() -> InstructionTemplate:
    return InstructionTemplate(id=0, pattern="Translate from {src_lang} to {tgt_lang}: {src_text}")


_CLEAN_EN = [
    "the morning train arrived at the small station right on time today",
    "several students walked along the river bank discussing their lessons",
    "my neighbour planted fruit trees behind the old house last spring",
    "the library opens early and the reading room fills up quickly",
    "heavy rain kept the farmers away from the fields all afternoon",
    "a quiet street runs from the market square to the harbour",
]
_CLEAN_ZH = [
    "早晨的火车今天准时到达了小车站。",
    "几个学生沿着河岸散步讨论功课。",
    "我的邻居去年春天在老房子后面种了果树。",
    "图书馆开门很早阅览室很快就坐满了。",
    "大雨让农民整个下午都没法下地干活。",
    "一条安静的街道从集市广场通到港口。",
]

SENSITIVE_WORD = "contraband"


def golden_para_fixture() -> tuple[list[ParallelRecord], SensitiveLexicon]:
    """Twelve en->zh pairs: six clean survivors plus exactly one rejection at
    each stage (punct_ratio, rules, script_ratio, lengths, sensitive, dedup)."""
    records = [
        ParallelRecord("en", "zh", s, t, f"clean:{i}")
        for i, (s, t) in enumerate(zip(_CLEAN_EN, _CLEAN_ZH))
    ]
    records.append(ParallelRecord(  # punct_ratio: source is almost all punctuation
        "en", "zh", "!!! ??? !!! ??? !!! ???", "标点太多的句子应该被过滤掉。", "bad:punct"))
    records.append(ParallelRecord(  # rules: one 150-character token
        "en", "zh", "the archive logged " + "x" * 150 + " as one token",
        "档案里记录了一个很长的符号串。", "bad:rules"))
    records.append(ParallelRecord(  # script_ratio: Chinese side has no Chinese
        "en", "zh", "the target side of this pair is not really chinese at all",
        "this target text is plainly english words", "bad:script"))
    records.append(ParallelRecord(  # lengths: 40 source tokens vs 10 target chars
        "en", "zh", " ".join(f"w{i:02d}" for i in range(40)), "十个汉字刚好十个字", "bad:ratio"))
    records.append(ParallelRecord(  # sensitive: frequency 7/12 > 0.5
        "en", "zh", ("contraband " * 7 + "and five ordinary words here").strip(),
        "这句话的英文那边有太多敏感词了。", "bad:sensitive"))
    records.append(ParallelRecord(  # dedup: exact copy of the first clean pair
        "en", "zh", _CLEAN_EN[0], _CLEAN_ZH[0], "bad:dup"))
    lexicon = SensitiveLexicon(entries=frozenset({SENSITIVE_WORD}))
    return records, lexicon


_ZH_FILLER = "春江潮水连海平面上明月共潮生滟随波千万里何处无月明"


def synthetic_para_corpus(n: int, seed: int = 0) -> list[ParallelRecord]:
    """Bulk en->zh pairs for throughput/determinism checks: mostly clean, with
    a failing record of a rotating kind every tenth position."""
    rng = np.random.default_rng(seed)
    records: list[ParallelRecord] = []
    for i in range(n):
        kind = i % 10
        if kind == 7:
            fail = i % 60 // 10
            if fail == 0:
                records.append(ParallelRecord("en", "zh", "?! " * 8, "标点问题的例子应当在这里被剔除。", f"s:{i}"))
                continue
            if fail == 1:
                records.append(ParallelRecord("en", "zh", "token " + "z" * 120 + " inside a sentence", "超长符号的例子应当在这里被剔除。", f"s:{i}"))
                continue
            if fail == 2:
                records.append(ParallelRecord("en", "zh", "these words look fine on the source side", "latin only target text here", f"s:{i}"))
                continue
            if fail == 3:
                records.append(ParallelRecord("en", "zh", " ".join(f"t{j}" for j in range(36)), "只有十个汉字在这里", f"s:{i}"))
                continue
            if fail == 4:
                records.append(ParallelRecord("en", "zh", "contraband contraband contraband over plain text", "敏感词频率超标的例子在这里。", f"s:{i}"))
                continue
            if records:
                dup = records[-1]
                records.append(ParallelRecord("en", "zh", dup.src_text, dup.tgt_text, f"s:{i}"))
                continue
        a = int(rng.integers(0, 10_000))
        words = " ".join(f"word{(a + j) % 97:02d}" for j in range(11))
        zh = "".join(_ZH_FILLER[(a + j) % len(_ZH_FILLER)] for j in range(12))
        records.append(ParallelRecord("en", "zh", f"sample {i} begins {words}", f"样本{zh}完", f"s:{i}"))
    return records
