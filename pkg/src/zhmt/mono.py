"""Monolingual Chinese cleaning: sentence extraction, charset normalization,
Chinese-character gating and length filtering.

Stage order is extract -> normalize -> has_chinese -> length, so the length
gate always sees final text and the pipeline is idempotent on its own output.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field

import numpy as np

from .charclass import script_histogram, _codepoints
from .registry import FilterVerdict, MonoRecord
from .reporting import PipelineReport
from .workers import map_ordered

DEFAULT_TERMINATORS = "。！？；!?;."
DEFAULT_CLOSING_QUOTES = "」』》〉】）”’\"')]"
# "Common punctuation" whitelist; overridable via config.
DEFAULT_PUNCTUATION = "。，、！？；：“”‘’（）《》—…·" + ".,!?;:'\"()[]-%"


@dataclass(frozen=True)
class MonoPipelineConfig:
    min_chars: int = 50
    max_chars: int = 250
    allowed_punctuation: str = DEFAULT_PUNCTUATION
    sentence_terminators: str = DEFAULT_TERMINATORS
    closing_quotes: str = DEFAULT_CLOSING_QUOTES

    def __post_init__(self):
        if not (0 < self.min_chars <= self.max_chars):
            raise ValueError("require 0 < min_chars <= max_chars")


@functools.lru_cache(maxsize=8)
def _sentence_re(terminators: str, quotes: str) -> re.Pattern:
    t, q = re.escape(terminators), re.escape(quotes)
    return re.compile(f"[^{t}]*[{t}]+[{q}]*")


def extract_sentences(paragraph: str, cfg: MonoPipelineConfig) -> list[MonoRecord]:
    """Split a paragraph at sentence terminators, keeping each terminator run
    (plus any closing quotes) with its sentence; a trailing segment without a
    terminator is kept as-is."""
    paragraph = re.sub(r"[\r\n\v\f  ]+", " ", paragraph)
    pattern = _sentence_re(cfg.sentence_terminators, cfg.closing_quotes)
    sentences = []
    end = 0
    for m in pattern.finditer(paragraph):
        piece = m.group(0).strip()
        if piece:
            sentences.append(piece)
        end = m.end()
    tail = paragraph[end:].strip()
    if tail:
        sentences.append(tail)
    return [MonoRecord(text=s) for s in sentences]


def check_length(text: str, cfg: MonoPipelineConfig) -> FilterVerdict:
    """Keep iff min_chars <= scalar count <= max_chars (bounds inclusive)."""
    n = len(text)
    if n < cfg.min_chars:
        return FilterVerdict.reject("length", "too_short", measured=n)
    if n > cfg.max_chars:
        return FilterVerdict.reject("length", "too_long", measured=n)
    return FilterVerdict.accept()


def check_has_chinese(text: str) -> FilterVerdict:
    hist = script_histogram(text)
    if hist.cjk >= 1:
        return FilterVerdict.accept()
    return FilterVerdict.reject("has_chinese", "no_chinese", measured=0)


@functools.lru_cache(maxsize=8)
def _punct_whitelist_cps(punct: str) -> np.ndarray:
    return np.sort(_codepoints(punct))


_SPACE_RUN = re.compile(" {2,}")


def normalize_charset(text: str, cfg: MonoPipelineConfig) -> str:
    """Delete characters outside the whitelist (CJK, ASCII letters/digits,
    space, configured punctuation), collapse space runs, trim."""
    cps = _codepoints(text)
    if cps.size == 0:
        return ""
    keep = (
        ((cps >= 0x4E00) & (cps <= 0x9FFF))
        | ((cps >= 0x3400) & (cps <= 0x4DBF))
        | ((cps >= 0xF900) & (cps <= 0xFAFF))
        | ((cps >= 0x41) & (cps <= 0x5A))
        | ((cps >= 0x61) & (cps <= 0x7A))
        | ((cps >= 0x30) & (cps <= 0x39))
        | (cps == 0x20)
    )
    punct = _punct_whitelist_cps(cfg.allowed_punctuation)
    if punct.size:
        pos = np.clip(np.searchsorted(punct, cps), 0, len(punct) - 1)
        keep |= punct[pos] == cps
    kept = cps[keep].tobytes()
    out = kept.decode("utf-32-le")
    return _SPACE_RUN.sub(" ", out).strip()


def process_paragraph(
    paragraph: str, cfg: MonoPipelineConfig
) -> tuple[list[str], list[tuple[str, str]]]:
    """Run one paragraph through all stages.

    Returns (surviving sentence texts, [(stage, reason)] for each rejected
    candidate); candidates = survivors + rejections.
    """
    kept: list[str] = []
    rejected: list[tuple[str, str]] = []
    for rec in extract_sentences(paragraph, cfg):
        text = normalize_charset(rec.text, cfg)
        verdict = check_has_chinese(text)
        if verdict.kept:
            verdict = check_length(text, cfg)
        if verdict.kept:
            kept.append(text)
        else:
            rejected.append((verdict.stage, verdict.reason))
    return kept, rejected


def run_mono_pipeline(
    paragraphs,
    cfg: MonoPipelineConfig,
    workers: int = 1,
    source_id: str = "",
) -> tuple[list[MonoRecord], PipelineReport]:
    """Clean an iterable of paragraphs; output order follows input order.

    The report counts extracted sentence candidates as inputs, so
    inputs == outputs + sum(stage rejections) always holds.
    """
    report = PipelineReport()
    records: list[MonoRecord] = []
    worker = functools.partial(process_paragraph, cfg=cfg)
    for i, (kept, rejected) in enumerate(map_ordered(worker, list(paragraphs), workers)):
        report.inputs += len(kept) + len(rejected)
        for j, text in enumerate(kept):
            records.append(MonoRecord(text=text, source_id=f"{source_id}:{i}:{j}" if source_id else ""))
        for stage, reason in rejected:
            report.count_rejection(stage, reason)
    report.outputs = len(records)
    return records, report
