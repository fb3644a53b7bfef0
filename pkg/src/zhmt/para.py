"""Parallel-corpus cleaning: normalization plus six rejecting stages applied
jointly to both sides of every sentence pair.

Stage order: normalize -> punct_ratio -> rules -> script_ratio -> lengths ->
sensitive -> dedup.  Any rejection removes the whole pair; reports count the
first failing stage.  Rerunning the pipeline on its own output rejects
nothing.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .charclass import script_histogram
from .registry import (
    DEFAULT_REGISTRY,
    FilterVerdict,
    ParallelRecord,
    Registry,
    primary_script_ratio,
)
from .reporting import PipelineReport
from .tokenizer import TokenizerSpec, token_count
from .workers import map_ordered


class AlignmentError(RuntimeError):
    """Paired corpus files with unequal line counts."""


@dataclass(frozen=True)
class SensitiveLexicon:
    """Lowercase surface strings to screen out; empty set disables the stage."""

    entries: frozenset[str] = frozenset()

    @classmethod
    def from_file(cls, path: Path) -> "SensitiveLexicon":
        words = set()
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                words.add(line.lower())
        return cls(entries=frozenset(words))


@dataclass(frozen=True)
class ParaPipelineConfig:
    punct_ratio_max: float = 0.5
    nonprintable_ratio_max: float = 0.1
    max_token_chars: int = 100
    script_ratio_min: float = 0.5
    length_ratio_max: float = 3.0
    min_avg_tokens: int = 10
    max_chars: int = 250
    sensitive: SensitiveLexicon = field(default_factory=SensitiveLexicon)
    sensitive_freq_max: float = 0.5

    def __post_init__(self):
        for name in ("punct_ratio_max", "nonprintable_ratio_max", "script_ratio_min",
                     "sensitive_freq_max"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.length_ratio_max <= 1.0:
            raise ValueError("length_ratio_max must exceed 1")


# -- normalization ----------------------------------------------------------

_QUOTE_MAP = str.maketrans({
    "“": '"', "”": '"', "«": '"', "»": '"',
    "„": '"', "″": '"',
    "‘": "'", "’": "'", "‚": "'", "′": "'",
})
_FULLWIDTH_DIGITS = str.maketrans({chr(0xFF10 + d): str(d) for d in range(10)})
_HSPACE_RUN = re.compile(r"[ \t   -   ]+")


def normalize_text(text: str) -> str:
    text = text.translate(_QUOTE_MAP).translate(_FULLWIDTH_DIGITS)
    text = _HSPACE_RUN.sub(" ", text)
    return text.strip()


def normalize_pair(record: ParallelRecord) -> ParallelRecord:
    """Map quote variants to ASCII, fullwidth digits to ASCII, collapse
    horizontal whitespace and trim, on both sides.  CJK punctuation is left
    untouched.  Idempotent."""
    return ParallelRecord(
        src_lang=record.src_lang,
        tgt_lang=record.tgt_lang,
        src_text=normalize_text(record.src_text),
        tgt_text=normalize_text(record.tgt_text),
        source_id=record.source_id,
    )


# -- rejecting stages -------------------------------------------------------

def check_punct_ratio(
    record: ParallelRecord,
    cfg: ParaPipelineConfig,
    hists: Optional[tuple] = None,
) -> FilterVerdict:
    """Reject the pair when either side's punctuation / non-whitespace ratio
    exceeds the threshold; sides empty after trimming are rejected outright."""
    if hists is None:
        hists = (script_histogram(record.src_text), script_histogram(record.tgt_text))
    for hist in hists:
        denom = hist.total() - hist.whitespace
        if denom == 0:
            return FilterVerdict.reject("punct_ratio", "empty", measured=0)
        ratio = hist.punctuation / denom
        if ratio > cfg.punct_ratio_max:
            return FilterVerdict.reject("punct_ratio", "punct_ratio", measured=ratio)
    return FilterVerdict.accept()


def check_rules(
    record: ParallelRecord,
    cfg: ParaPipelineConfig,
    hists: Optional[tuple] = None,
) -> FilterVerdict:
    """Whitespace-only sides, excessive non-printable characters, and
    overlong whitespace-delimited tokens."""
    if hists is None:
        hists = (script_histogram(record.src_text), script_histogram(record.tgt_text))
    for text, hist in zip((record.src_text, record.tgt_text), hists):
        if not text.strip():
            return FilterVerdict.reject("rules", "whitespace_only")
        ratio = hist.nonprintable / hist.total()
        if ratio > cfg.nonprintable_ratio_max:
            return FilterVerdict.reject("rules", "nonprintable", measured=ratio)
        longest = max(len(tok) for tok in text.split())
        if longest > cfg.max_token_chars:
            return FilterVerdict.reject("rules", "long_token", measured=longest)
    return FilterVerdict.accept()


def check_script_ratio(
    record: ParallelRecord,
    cfg: ParaPipelineConfig,
    registry: Optional[Registry] = None,
    hists: Optional[tuple] = None,
) -> FilterVerdict:
    """Reject when a side's expected-script ratio falls below the threshold
    (keep at exactly the threshold); script-exempt languages are skipped."""
    reg = registry if registry is not None else DEFAULT_REGISTRY
    if hists is None:
        hists = (script_histogram(record.src_text), script_histogram(record.tgt_text))
    for lang, hist in ((record.src_lang, hists[0]), (record.tgt_lang, hists[1])):
        if reg.is_script_exempt(lang):
            continue
        letters = hist.letters()
        if letters == 0:
            continue
        ratio = sum(hist.count(cls) for cls in reg.expected_scripts(lang)) / letters
        if ratio < cfg.script_ratio_min:
            return FilterVerdict.reject("script_ratio", "script_ratio", measured=ratio)
    return FilterVerdict.accept()


def check_lengths(
    record: ParallelRecord,
    cfg: ParaPipelineConfig,
    tokenizer: TokenizerSpec,
) -> FilterVerdict:
    """Symmetric token-count ratio cap, minimum average token count, and a
    per-side scalar-count cap."""
    src_n = token_count(record.src_text, record.src_lang, tokenizer)
    tgt_n = token_count(record.tgt_text, record.tgt_lang, tokenizer)
    if src_n == 0 or tgt_n == 0:
        return FilterVerdict.reject("lengths", "empty", measured=0)
    ratio = max(src_n, tgt_n) / min(src_n, tgt_n)
    if ratio > cfg.length_ratio_max:
        return FilterVerdict.reject("lengths", "length_ratio", measured=ratio)
    avg = (src_n + tgt_n) / 2
    if avg < cfg.min_avg_tokens:
        return FilterVerdict.reject("lengths", "too_short", measured=avg)
    longest = max(len(record.src_text), len(record.tgt_text))
    if longest > cfg.max_chars:
        return FilterVerdict.reject("lengths", "too_long", measured=longest)
    return FilterVerdict.accept()


def _sensitive_frequency(text: str, lang: str, lexicon: frozenset[str], tokenizer: TokenizerSpec) -> float:
    mode = tokenizer.mode_for(lang)
    folded = text.lower()
    if mode == "character":
        total = len(text)
        if total == 0:
            return 0.0
        hits = sum(_count_substring(folded, w) for w in lexicon)
        return hits / total
    tokens = folded.split()
    if not tokens:
        return 0.0
    hits = sum(1 for tok in tokens if tok in lexicon)
    return hits / len(tokens)


def _count_substring(haystack: str, needle: str) -> int:
    return haystack.count(needle) if needle else 0


def check_sensitive(
    record: ParallelRecord,
    cfg: ParaPipelineConfig,
    tokenizer: Optional[TokenizerSpec] = None,
) -> FilterVerdict:
    """Reject when either side's sensitive-word frequency exceeds the
    threshold; token-exact for space-delimited languages, substring-based for
    character-mode ones.  An empty lexicon disables the stage."""
    if not cfg.sensitive.entries:
        return FilterVerdict.accept()
    tok = tokenizer if tokenizer is not None else TokenizerSpec.pipeline_spec()
    for text, lang in ((record.src_text, record.src_lang), (record.tgt_text, record.tgt_lang)):
        freq = _sensitive_frequency(text, lang, cfg.sensitive.entries, tok)
        if freq > cfg.sensitive_freq_max:
            return FilterVerdict.reject("sensitive", "sensitive", measured=freq)
    return FilterVerdict.accept()


def iter_dedup_flags(records: Iterable[ParallelRecord]) -> Iterator[tuple[ParallelRecord, bool]]:
    """Yield (record, is_first_occurrence); later copies of an identical
    (langs, texts) quadruple are flagged as duplicates."""
    seen: set[tuple[str, str, str, str]] = set()
    for rec in records:
        key = rec.key()
        if key in seen:
            yield rec, False
        else:
            seen.add(key)
            yield rec, True


def dedup(records: Iterable[ParallelRecord]) -> Iterator[ParallelRecord]:
    """Drop later duplicates, keeping first occurrences in stream order."""
    for rec, first in iter_dedup_flags(records):
        if first:
            yield rec


# -- full pipeline ----------------------------------------------------------

REJECTING_STAGES = ("punct_ratio", "rules", "script_ratio", "lengths", "sensitive", "dedup")


def apply_record_stages(
    record: ParallelRecord,
    cfg: ParaPipelineConfig,
    tokenizer: TokenizerSpec,
    registry: Optional[Registry] = None,
) -> tuple[ParallelRecord, FilterVerdict]:
    """Normalize, then run every per-record stage in order; returns the
    normalized record with its first failing verdict (or acceptance)."""
    rec = normalize_pair(record)
    hists = (script_histogram(rec.src_text), script_histogram(rec.tgt_text))
    for verdictor in (
        lambda r: check_punct_ratio(r, cfg, hists),
        lambda r: check_rules(r, cfg, hists),
        lambda r: check_script_ratio(r, cfg, registry, hists),
        lambda r: check_lengths(r, cfg, tokenizer),
        lambda r: check_sensitive(r, cfg, tokenizer),
    ):
        verdict = verdictor(rec)
        if not verdict.kept:
            return rec, verdict
    return rec, FilterVerdict.accept()


def _stage_worker(record: ParallelRecord, cfg, tokenizer, registry_tsv_rows):
    reg = _worker_registry(registry_tsv_rows)
    return apply_record_stages(record, cfg, tokenizer, reg)


@functools.lru_cache(maxsize=2)
def _worker_registry(rows: Optional[tuple]) -> Optional[Registry]:
    if rows is None:
        return None
    from .registry import Language, ResourceTier
    return Registry(Language(c, n, f, ResourceTier(t)) for c, n, f, t in rows)


def run_para_pipeline(
    records: Iterable[ParallelRecord],
    cfg: ParaPipelineConfig,
    tokenizer: Optional[TokenizerSpec] = None,
    registry: Optional[Registry] = None,
    workers: int = 1,
) -> tuple[list[ParallelRecord], PipelineReport]:
    """Run the whole cleaning pipeline; surviving pairs keep input order.

    Dedup runs as a sequential final stage over the ordered stream, so output
    is identical for any worker count.
    """
    tok = tokenizer if tokenizer is not None else TokenizerSpec.pipeline_spec()
    records = list(records)
    report = PipelineReport(inputs=len(records))

    if workers <= 1:
        staged = (apply_record_stages(r, cfg, tok, registry) for r in records)
    else:
        rows = None
        if registry is not None:
            rows = tuple((l.code, l.name, l.family, l.tier.value) for l in registry.languages())
        worker = functools.partial(_stage_worker, cfg=cfg, tokenizer=tok, registry_tsv_rows=rows)
        staged = map_ordered(worker, records, workers)

    survivors: list[ParallelRecord] = []
    for rec, verdict in staged:
        pair_label = f"{rec.src_lang}-{rec.tgt_lang}"
        if not verdict.kept:
            report.count_rejection(verdict.stage, verdict.reason, pair_label)
            continue
        survivors.append(rec)

    kept: list[ParallelRecord] = []
    for rec, first in iter_dedup_flags(survivors):
        if first:
            kept.append(rec)
        else:
            report.count_rejection("dedup", "duplicate", f"{rec.src_lang}-{rec.tgt_lang}")
    report.outputs = len(kept)
    return kept, report


# -- file I/O ----------------------------------------------------------------

def pair_files(directory: Path, src_lang: str, tgt_lang: str) -> list[tuple[Path, Path]]:
    """Aligned plain-text file pairs `<stem>.<src_lang>` / `<stem>.<tgt_lang>`
    with equal line counts; stems missing either side are ignored."""
    directory = Path(directory)
    stems_src = {p.name[: -len(src_lang) - 1]: p for p in directory.glob(f"*.{src_lang}")}
    stems_tgt = {p.name[: -len(tgt_lang) - 1]: p for p in directory.glob(f"*.{tgt_lang}")}
    pairs = []
    for stem in sorted(set(stems_src) & set(stems_tgt)):
        sp, tp = stems_src[stem], stems_tgt[stem]
        n_src = _count_lines(sp)
        n_tgt = _count_lines(tp)
        if n_src != n_tgt:
            raise AlignmentError(f"{stem}: {n_src} vs {n_tgt} lines")
        pairs.append((sp, tp))
    return pairs


def _count_lines(path: Path) -> int:
    with open(path, "rb") as fh:
        return sum(1 for _ in fh)


def read_records_tsv(path: Path, report: Optional[PipelineReport] = None) -> list[ParallelRecord]:
    """Read tab-separated records (src_lang, tgt_lang, src_text, tgt_text
    [, source_id]).  Lines that are not valid UTF-8 are rejected at ingestion
    with reason ``invalid_utf8``."""
    records = []
    data = Path(path).read_bytes()
    for lineno, raw in enumerate(data.split(b"\n"), start=1):
        if not raw.strip():
            continue
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError:
            if report is not None:
                report.inputs += 1
                report.count_rejection("ingest", "invalid_utf8")
            continue
        parts = line.rstrip("\r").split("\t")
        if len(parts) not in (4, 5):
            raise ValueError(f"{path}:{lineno}: expected 4 or 5 tab-separated fields")
        src_lang, tgt_lang, src_text, tgt_text = parts[:4]
        source_id = parts[4] if len(parts) == 5 else f"{Path(path).name}:{lineno}"
        records.append(ParallelRecord(src_lang, tgt_lang, src_text, tgt_text, source_id))
    return records


def read_records_paired(src_path: Path, tgt_path: Path, src_lang: str, tgt_lang: str) -> list[ParallelRecord]:
    src_lines = Path(src_path).read_text(encoding="utf-8").splitlines()
    tgt_lines = Path(tgt_path).read_text(encoding="utf-8").splitlines()
    if len(src_lines) != len(tgt_lines):
        raise AlignmentError(f"{src_path} vs {tgt_path}: {len(src_lines)} vs {len(tgt_lines)} lines")
    stem = Path(src_path).stem
    return [
        ParallelRecord(src_lang, tgt_lang, s, t, f"{stem}:{i + 1}")
        for i, (s, t) in enumerate(zip(src_lines, tgt_lines))
    ]


def write_records_tsv(records: Iterable[ParallelRecord], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(f"{rec.src_lang}\t{rec.tgt_lang}\t{rec.src_text}\t{rec.tgt_text}\t{rec.source_id}\n")
