"""Deterministic character classification over fixed code-point ranges.

Every Unicode scalar value is assigned to exactly one of eleven classes
(cjk, latin, arabic, cyrillic, devanagari, other_letter, digit,
punctuation, whitespace, nonprintable, other) by table lookup.  The full
range table is mirrored in SCRIPTS.md at the repository root; a test
keeps the two in sync.  No statistical language identification happens
anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CLASSES = (
    "cjk",
    "latin",
    "arabic",
    "cyrillic",
    "devanagari",
    "other_letter",
    "digit",
    "punctuation",
    "whitespace",
    "nonprintable",
    "other",
)

# (first, last, class) with first/last inclusive.  Ranges must be disjoint;
# anything not covered falls through to "other".
RANGES: list[tuple[int, int, str]] = [
    (0x0000, 0x0008, "nonprintable"),
    (0x0009, 0x000D, "whitespace"),
    (0x000E, 0x001F, "nonprintable"),
    (0x0020, 0x0020, "whitespace"),
    (0x0021, 0x002F, "punctuation"),
    (0x0030, 0x0039, "digit"),
    (0x003A, 0x0040, "punctuation"),
    (0x0041, 0x005A, "latin"),
    (0x005B, 0x0060, "punctuation"),
    (0x0061, 0x007A, "latin"),
    (0x007B, 0x007E, "punctuation"),
    (0x007F, 0x0084, "nonprintable"),
    (0x0085, 0x0085, "whitespace"),
    (0x0086, 0x009F, "nonprintable"),
    (0x00A0, 0x00A0, "whitespace"),
    (0x00A1, 0x00BF, "punctuation"),
    (0x00C0, 0x00D6, "latin"),
    (0x00D7, 0x00D7, "punctuation"),
    (0x00D8, 0x00F6, "latin"),
    (0x00F7, 0x00F7, "punctuation"),
    (0x00F8, 0x00FF, "latin"),
    (0x0100, 0x024F, "latin"),           # Latin Extended-A and -B
    (0x0370, 0x03FF, "other_letter"),    # Greek and Coptic
    (0x0400, 0x052F, "cyrillic"),        # Cyrillic + Supplement
    (0x0530, 0x058F, "other_letter"),    # Armenian
    (0x0590, 0x05FF, "other_letter"),    # Hebrew
    (0x0600, 0x060B, "arabic"),
    (0x060C, 0x060C, "punctuation"),     # Arabic comma
    (0x060D, 0x061A, "arabic"),
    (0x061B, 0x061B, "punctuation"),     # Arabic semicolon
    (0x061C, 0x061E, "arabic"),
    (0x061F, 0x061F, "punctuation"),     # Arabic question mark
    (0x0620, 0x065F, "arabic"),
    (0x0660, 0x0669, "digit"),           # Arabic-Indic digits
    (0x066A, 0x066D, "punctuation"),
    (0x066E, 0x06EF, "arabic"),
    (0x06F0, 0x06F9, "digit"),           # Extended Arabic-Indic digits
    (0x06FA, 0x06FF, "arabic"),
    (0x0750, 0x077F, "arabic"),          # Arabic Supplement
    (0x08A0, 0x08FF, "arabic"),          # Arabic Extended-A
    (0x0900, 0x0963, "devanagari"),
    (0x0964, 0x0965, "punctuation"),     # danda, double danda
    (0x0966, 0x096F, "digit"),           # Devanagari digits
    (0x0970, 0x097F, "devanagari"),
    (0x0980, 0x09FF, "other_letter"),    # Bengali
    (0x0A00, 0x0D7F, "other_letter"),    # Gurmukhi .. Malayalam blocks
    (0x0D80, 0x0DFF, "other_letter"),    # Sinhala
    (0x0E00, 0x0E4F, "other_letter"),    # Thai
    (0x0E50, 0x0E59, "digit"),           # Thai digits
    (0x0E5A, 0x0E7F, "other_letter"),
    (0x0E80, 0x0ECF, "other_letter"),    # Lao
    (0x0ED0, 0x0ED9, "digit"),           # Lao digits
    (0x0EDA, 0x0EFF, "other_letter"),
    (0x0F00, 0x0F1F, "other_letter"),    # Tibetan
    (0x0F20, 0x0F29, "digit"),           # Tibetan digits
    (0x0F2A, 0x0FFF, "other_letter"),
    (0x1000, 0x103F, "other_letter"),    # Myanmar
    (0x1040, 0x1049, "digit"),           # Myanmar digits
    (0x104A, 0x109F, "other_letter"),
    (0x10A0, 0x10FF, "other_letter"),    # Georgian
    (0x1100, 0x11FF, "other_letter"),    # Hangul Jamo
    (0x1200, 0x139F, "other_letter"),    # Ethiopic + Supplement
    (0x1680, 0x1680, "whitespace"),
    (0x1780, 0x17DF, "other_letter"),    # Khmer
    (0x17E0, 0x17E9, "digit"),           # Khmer digits
    (0x17EA, 0x17FF, "other_letter"),
    (0x1800, 0x180F, "other_letter"),    # Mongolian
    (0x1810, 0x1819, "digit"),           # Mongolian digits
    (0x181A, 0x18AF, "other_letter"),
    (0x1E00, 0x1EFF, "latin"),           # Latin Extended Additional
    (0x1F00, 0x1FFF, "other_letter"),    # Greek Extended
    (0x2000, 0x200A, "whitespace"),
    (0x200B, 0x200F, "nonprintable"),    # zero-width and bidi marks
    (0x2010, 0x2027, "punctuation"),
    (0x2028, 0x2029, "whitespace"),
    (0x202A, 0x202E, "nonprintable"),    # bidi embedding controls
    (0x202F, 0x202F, "whitespace"),
    (0x2030, 0x205E, "punctuation"),
    (0x205F, 0x205F, "whitespace"),
    (0x2060, 0x2064, "nonprintable"),
    (0x2066, 0x2069, "nonprintable"),
    (0x3000, 0x303F, "punctuation"),     # CJK symbols and punctuation
    (0x3040, 0x309F, "other_letter"),    # Hiragana
    (0x30A0, 0x30FF, "other_letter"),    # Katakana
    (0x3400, 0x4DBF, "cjk"),             # CJK Extension A
    (0x4E00, 0x9FFF, "cjk"),             # CJK Unified Ideographs
    (0xAC00, 0xD7AF, "other_letter"),    # Hangul syllables
    (0xF900, 0xFAFF, "cjk"),             # CJK Compatibility Ideographs
    (0xFB50, 0xFDFF, "arabic"),          # Arabic Presentation Forms-A
    (0xFE70, 0xFEFE, "arabic"),          # Arabic Presentation Forms-B
    (0xFEFF, 0xFEFF, "nonprintable"),    # BOM / zero-width no-break space
    (0xFF01, 0xFF0F, "punctuation"),     # fullwidth punctuation
    (0xFF10, 0xFF19, "digit"),           # fullwidth digits
    (0xFF1A, 0xFF20, "punctuation"),
    (0xFF21, 0xFF3A, "latin"),           # fullwidth Latin capitals
    (0xFF3B, 0xFF40, "punctuation"),
    (0xFF41, 0xFF5A, "latin"),           # fullwidth Latin small letters
    (0xFF5B, 0xFF65, "punctuation"),
    (0xFFF9, 0xFFFB, "nonprintable"),
]

_CLASS_INDEX = {name: i for i, name in enumerate(CLASSES)}
_OTHER = _CLASS_INDEX["other"]

_STARTS = np.array([r[0] for r in RANGES], dtype=np.uint32)
_ENDS = np.array([r[1] for r in RANGES], dtype=np.uint32)
_RANGE_CLASS = np.array([_CLASS_INDEX[r[2]] for r in RANGES], dtype=np.int64)

# sanity: sorted and disjoint, checked once at import
for _i in range(len(RANGES) - 1):
    if not RANGES[_i][1] < RANGES[_i + 1][0]:
        raise AssertionError(f"overlapping ranges at index {_i}")


def _codepoints(text: str) -> np.ndarray:
    """UTF-32 view of the string as an array of Unicode scalar values."""
    if not text:
        return np.empty(0, dtype=np.uint32)
    return np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)


def classify_codepoints(cps: np.ndarray) -> np.ndarray:
    """Map an array of scalar values to class indices into CLASSES."""
    # _STARTS[0] == 0, so searchsorted-right minus one is always a valid index
    pos = np.searchsorted(_STARTS, cps, side="right") - 1
    inside = cps <= _ENDS[pos]
    return np.where(inside, _RANGE_CLASS[pos], _OTHER)


def classify_char(ch: str) -> str:
    """Class name for a single character."""
    cls = classify_codepoints(_codepoints(ch))
    return CLASSES[int(cls[0])]


@dataclass(frozen=True)
class ScriptHistogram:
    """Per-class character counts; sums to the scalar-value length of the input."""

    cjk: int = 0
    latin: int = 0
    arabic: int = 0
    cyrillic: int = 0
    devanagari: int = 0
    other_letter: int = 0
    digit: int = 0
    punctuation: int = 0
    whitespace: int = 0
    nonprintable: int = 0
    other: int = 0

    def __add__(self, rhs: "ScriptHistogram") -> "ScriptHistogram":
        return ScriptHistogram(*(getattr(self, n) + getattr(rhs, n) for n in CLASSES))

    def total(self) -> int:
        return (
            self.cjk + self.latin + self.arabic + self.cyrillic + self.devanagari
            + self.other_letter + self.digit + self.punctuation + self.whitespace
            + self.nonprintable + self.other
        )

    def count(self, cls: str) -> int:
        return int(getattr(self, cls))

    def letters(self) -> int:
        """Scalar values that are not whitespace, punctuation or digits."""
        return (
            self.cjk + self.latin + self.arabic + self.cyrillic + self.devanagari
            + self.other_letter + self.nonprintable + self.other
        )


def script_histogram(text: str) -> ScriptHistogram:
    """Count characters of ``text`` per class; total always equals len(text)."""
    cps = _codepoints(text)
    if cps.size == 0:
        return ScriptHistogram()
    counts = np.bincount(classify_codepoints(cps), minlength=len(CLASSES))
    return ScriptHistogram(*(int(c) for c in counts[: len(CLASSES)]))


def is_cjk(ch: str) -> bool:
    return classify_char(ch) == "cjk"
