"""Back-translation augmentation with pluggable desk-scale translator oracles.

Each selected pair contributes one synthetic record whose source side is the
target sentence translated back into the source language; the authentic
target side is kept as the anchor.  Originals precede synthetics, exact
duplicates are dropped, and re-augmenting an already augmented set (with
synthetics excluded from the source set) adds nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .registry import (
    DEFAULT_REGISTRY,
    ParallelRecord,
    Registry,
    ResourceTier,
    pair_tier,
)

ORIGIN_ORIGINAL = "original"
ORIGIN_SYNTHETIC = "synthetic"

# Back-translation primarily helps where parallel data is scarce.
DEFAULT_BT_TIERS = frozenset({ResourceTier.LOW, ResourceTier.VERY_LOW})


class TranslatorError(RuntimeError):
    pass


@dataclass(frozen=True)
class Translator:
    """Deterministic text-to-text oracle for a fixed configuration."""

    name: str
    fn: Callable[[str, str, str], str]

    def translate(self, text: str, from_lang: str, to_lang: str) -> str:
        return self.fn(text, from_lang, to_lang)


@dataclass(frozen=True)
class TaggedRecord:
    record: ParallelRecord
    origin: str


@dataclass
class AugmentedDataset:
    records: list[TaggedRecord] = field(default_factory=list)
    skipped: int = 0

    def all_records(self) -> list[ParallelRecord]:
        return [t.record for t in self.records]

    def originals(self) -> list[ParallelRecord]:
        return [t.record for t in self.records if t.origin == ORIGIN_ORIGINAL]

    def synthetics(self) -> list[ParallelRecord]:
        return [t.record for t in self.records if t.origin == ORIGIN_SYNTHETIC]


def identity_translator() -> Translator:
    return Translator(name="identity", fn=lambda text, f, t: text)


def word_reverse_translator() -> Translator:
    return Translator(name="word-reverse", fn=lambda text, f, t: " ".join(reversed(text.split())))


def dictionary_translator(table: dict[str, str], name: str = "dictionary") -> Translator:
    """Word-for-word table lookup; unmapped tokens pass through unchanged."""

    def fn(text: str, from_lang: str, to_lang: str) -> str:
        return " ".join(table.get(tok, tok) for tok in text.split())

    return Translator(name=name, fn=fn)


def load_dictionary(path: Path) -> dict[str, str]:
    table = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'from<TAB>to'")
        table[parts[0]] = parts[1]
    return table


def builtin_translators(dictionary: Optional[dict[str, str]] = None) -> list[Translator]:
    out = [identity_translator(), word_reverse_translator()]
    if dictionary is not None:
        out.append(dictionary_translator(dictionary))
    return out


def tier_pair_filter(
    tiers: Iterable[ResourceTier] = DEFAULT_BT_TIERS,
    registry: Optional[Registry] = None,
) -> Callable[[ParallelRecord], bool]:
    tier_set = frozenset(tiers)
    reg = registry if registry is not None else DEFAULT_REGISTRY

    def accept(record: ParallelRecord) -> bool:
        return pair_tier(record.pair, reg) in tier_set

    return accept


def augment(
    dataset: Sequence[ParallelRecord],
    translator: Translator,
    pair_filter: Optional[Callable[[ParallelRecord], bool]] = None,
) -> AugmentedDataset:
    """Originals (in input order) followed by synthetic records (in input
    order); synthetics duplicating an existing record are dropped, and
    translator failures skip the record and are counted, never fatal."""
    accept = pair_filter if pair_filter is not None else (lambda rec: True)
    out = AugmentedDataset()
    seen = set()
    for rec in dataset:
        out.records.append(TaggedRecord(rec, ORIGIN_ORIGINAL))
        seen.add(rec.key())
    for rec in dataset:
        if not accept(rec):
            continue
        try:
            back = translator.translate(rec.tgt_text, rec.tgt_lang, rec.src_lang)
        except Exception:
            out.skipped += 1
            continue
        synth = ParallelRecord(
            src_lang=rec.src_lang,
            tgt_lang=rec.tgt_lang,
            src_text=back,
            tgt_text=rec.tgt_text,
            source_id=f"bt:{rec.source_id}" if rec.source_id else "bt",
        )
        key = synth.key()
        if key in seen:
            continue
        seen.add(key)
        out.records.append(TaggedRecord(synth, ORIGIN_SYNTHETIC))
    return out
