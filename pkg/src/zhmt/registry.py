"""Language registry: codes, resource tiers, expected scripts, record types.

The registry is loaded from the shipped ``data/languages.tsv`` (one row per
language: code, English name, family, resource tier).  Extensions beyond the
shipped set can be registered at runtime.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .charclass import script_histogram

_CODE_RE = re.compile(r"^[a-z]{2,4}$")


class UnknownLanguage(KeyError):
    """Raised when a language code is not registered."""


class ResourceTier(Enum):
    """Parallel-data availability tier; ordering is High (most) to VeryLow."""

    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"
    VERY_LOW = "VeryLow"

    @property
    def rank(self) -> int:
        return _TIER_ORDER.index(self)


_TIER_ORDER = [ResourceTier.HIGH, ResourceTier.MEDIUM, ResourceTier.LOW, ResourceTier.VERY_LOW]
TIERS_HIGH_TO_LOW = tuple(_TIER_ORDER)


def validate_code(code: str) -> str:
    if not _CODE_RE.match(code):
        raise ValueError(f"invalid language code: {code!r}")
    return code


@dataclass(frozen=True)
class Language:
    code: str
    name: str
    family: str
    tier: ResourceTier


# Expected script classes per language, used by the script-ratio filter.
# Languages whose expected set includes "other_letter" use a script that the
# histogram does not isolate; they are exempt from the ratio filter.
EXPECTED_SCRIPTS: dict[str, frozenset[str]] = {
    "zh": frozenset({"cjk"}),
    "ja": frozenset({"cjk", "other_letter"}),
    "ru": frozenset({"cyrillic"}),
    "uk": frozenset({"cyrillic"}),
    "be": frozenset({"cyrillic"}),
    "bg": frozenset({"cyrillic"}),
    "mk": frozenset({"cyrillic"}),
    "kk": frozenset({"cyrillic"}),
    "ky": frozenset({"cyrillic"}),
    "mn": frozenset({"cyrillic"}),
    "sr": frozenset({"cyrillic", "latin"}),
    "ar": frozenset({"arabic"}),
    "fa": frozenset({"arabic"}),
    "prs": frozenset({"arabic"}),
    "ur": frozenset({"arabic"}),
    "ps": frozenset({"arabic"}),
    "ug": frozenset({"arabic"}),
    "hi": frozenset({"devanagari"}),
    "ne": frozenset({"devanagari"}),
    "el": frozenset({"other_letter"}),
    "hy": frozenset({"other_letter"}),
    "ka": frozenset({"other_letter"}),
    "bn": frozenset({"other_letter"}),
    "ta": frozenset({"other_letter"}),
    "si": frozenset({"other_letter"}),
    "th": frozenset({"other_letter"}),
    "lo": frozenset({"other_letter"}),
    "bo": frozenset({"other_letter"}),
    "my": frozenset({"other_letter"}),
    "km": frozenset({"other_letter"}),
    "am": frozenset({"other_letter"}),
    "ti": frozenset({"other_letter"}),
    "ko": frozenset({"other_letter"}),
}
_DEFAULT_SCRIPTS = frozenset({"latin"})


class Registry:
    """Immutable-by-convention language table keyed by code."""

    def __init__(self, languages: Iterable[Language]):
        self._by_code: dict[str, Language] = {}
        for lang in languages:
            validate_code(lang.code)
            if lang.code in self._by_code:
                raise ValueError(f"duplicate language code: {lang.code}")
            self._by_code[lang.code] = lang

    @classmethod
    def from_tsv(cls, path: Path) -> "Registry":
        langs = []
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"languages.tsv: expected 4 columns, got {len(parts)}: {raw!r}")
            code, name, family, tier = parts
            langs.append(Language(code, name, family, ResourceTier(tier)))
        return cls(langs)

    def codes(self) -> list[str]:
        return sorted(self._by_code)

    def languages(self) -> list[Language]:
        return [self._by_code[c] for c in self.codes()]

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def __len__(self) -> int:
        return len(self._by_code)

    def get(self, code: str) -> Language:
        try:
            return self._by_code[code]
        except KeyError:
            raise UnknownLanguage(code) from None

    def name(self, code: str) -> str:
        return self.get(code).name

    def tier(self, code: str) -> ResourceTier:
        return self.get(code).tier

    def expected_scripts(self, code: str) -> frozenset[str]:
        self.get(code)
        return EXPECTED_SCRIPTS.get(code, _DEFAULT_SCRIPTS)

    def is_script_exempt(self, code: str) -> bool:
        return "other_letter" in self.expected_scripts(code)

    def register(self, lang: Language) -> None:
        """Register an extension language (e.g. a private test code)."""
        validate_code(lang.code)
        if lang.code in self._by_code:
            raise ValueError(f"duplicate language code: {lang.code}")
        self._by_code[lang.code] = lang


def _load_default() -> Registry:
    with resources.as_file(resources.files("zhmt").joinpath("data/languages.tsv")) as p:
        return Registry.from_tsv(p)


DEFAULT_REGISTRY = _load_default()


def classify_tier(lang: str, registry: Optional[Registry] = None) -> ResourceTier:
    """Resource tier of a registered language; raises UnknownLanguage otherwise."""
    reg = registry if registry is not None else DEFAULT_REGISTRY
    return reg.tier(lang)


def primary_script_ratio(text: str, lang: str, registry: Optional[Registry] = None) -> float:
    """Fraction of letter characters that belong to the language's expected scripts.

    The denominator excludes whitespace, punctuation and digits; when it is
    zero the ratio is defined as 1.0.
    """
    reg = registry if registry is not None else DEFAULT_REGISTRY
    expected = reg.expected_scripts(lang)
    hist = script_histogram(text)
    letters = hist.letters()
    if letters == 0:
        return 1.0
    matched = sum(hist.count(cls) for cls in expected)
    return matched / letters


@dataclass(frozen=True)
class MonoRecord:
    """One cleaned monolingual sentence with its provenance."""

    text: str
    source_id: str = ""


@dataclass(frozen=True)
class ParallelRecord:
    """One aligned sentence pair; the unit flowing through the parallel pipeline."""

    src_lang: str
    tgt_lang: str
    src_text: str
    tgt_text: str
    source_id: str = ""

    def __post_init__(self):
        if self.src_lang == self.tgt_lang:
            raise ValueError(f"source and target language must differ: {self.src_lang}")

    @property
    def pair(self) -> tuple[str, str]:
        return (self.src_lang, self.tgt_lang)

    def key(self) -> tuple[str, str, str, str]:
        return (self.src_lang, self.tgt_lang, self.src_text, self.tgt_text)


ACCEPTED = "accepted"


@dataclass(frozen=True)
class FilterVerdict:
    """Keep/reject decision with the stage and machine-readable reason."""

    kept: bool
    stage: str = ACCEPTED
    reason: str = ACCEPTED
    measured: Optional[float] = None

    def __post_init__(self):
        if self.kept and (self.stage != ACCEPTED or self.reason != ACCEPTED):
            raise ValueError("kept verdicts must carry the 'accepted' sentinel")

    @classmethod
    def accept(cls) -> "FilterVerdict":
        return cls(kept=True)

    @classmethod
    def reject(cls, stage: str, reason: str, measured: Optional[float] = None) -> "FilterVerdict":
        return cls(kept=False, stage=stage, reason=reason, measured=measured)


def pair_tier(pair: tuple[str, str], registry: Optional[Registry] = None) -> ResourceTier:
    """Tier of a language pair: the non-Chinese side for xx<->zh pairs,
    otherwise the better-resourced of the two tiers."""
    reg = registry if registry is not None else DEFAULT_REGISTRY
    src, tgt = pair
    if tgt == "zh":
        return reg.tier(src)
    if src == "zh":
        return reg.tier(tgt)
    ta, tb = reg.tier(src), reg.tier(tgt)
    return ta if ta.rank <= tb.rank else tb
