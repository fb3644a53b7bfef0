"""Deterministic per-language tokenization.

Three modes cover the toolkit's needs without a trained subword model:
``whitespace`` for space-delimited scripts, ``character`` for scripts written
without word separators, and ``byte`` (UTF-8) for the toy language model.
Length filters, the trainer and the evaluator all share this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

MODES = ("whitespace", "character", "byte")

# Scripts written without spaces between words are counted per character.
CHARACTER_MODE_LANGS = frozenset({"zh", "ja", "th", "lo", "my", "km", "bo"})


def default_mode_for(lang: str) -> str:
    return "character" if lang in CHARACTER_MODE_LANGS else "whitespace"


class InvalidToken(ValueError):
    """A token id outside the spec's vocabulary."""


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    lang: str

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class TokenizerSpec:
    """Mode map plus vocabulary table and reserved ids.

    ``vocab`` maps surface forms to ids for whitespace/character modes; byte
    mode uses ids 0..255 directly and never consults the table.
    """

    modes: Mapping[str, str] = field(default_factory=dict)
    default_mode: Optional[str] = None
    vocab: Mapping[str, int] = field(default_factory=dict)
    vocab_size: int = 260
    unk_id: int = 256
    bos_id: int = 257
    eos_id: int = 258
    pad_id: int = 259
    unk_token: str = "<unk>"

    def __post_init__(self):
        reserved = (self.unk_id, self.bos_id, self.eos_id, self.pad_id)
        if len(set(reserved)) != 4:
            raise ValueError("reserved ids must be distinct")
        if max(reserved) >= self.vocab_size:
            raise ValueError("reserved ids must be below vocab_size")
        for mode in self.modes.values():
            if mode not in MODES:
                raise ValueError(f"unknown tokenizer mode: {mode}")
        if self.default_mode is not None and self.default_mode not in MODES:
            raise ValueError(f"unknown tokenizer mode: {self.default_mode}")
        seen_ids = set()
        for surface, tid in self.vocab.items():
            if not (0 <= tid < self.vocab_size):
                raise ValueError(f"vocab id out of range: {surface!r} -> {tid}")
            if tid in seen_ids or tid in reserved:
                raise ValueError(f"vocab id not unique: {surface!r} -> {tid}")
            seen_ids.add(tid)

    def covers(self, lang: str) -> bool:
        return lang in self.modes or self.default_mode is not None

    def mode_for(self, lang: str) -> str:
        try:
            return self.modes[lang]
        except KeyError:
            if self.default_mode is None:
                raise ValueError(f"tokenizer spec does not cover language {lang!r}") from None
            return self.default_mode

    def id_to_surface(self) -> dict[int, str]:
        return {tid: surface for surface, tid in self.vocab.items()}

    @classmethod
    def byte_spec(cls) -> "TokenizerSpec":
        """Closed 260-id vocabulary: 256 byte values plus 4 reserved ids."""
        return cls(modes={}, default_mode="byte")

    @classmethod
    def pipeline_spec(cls) -> "TokenizerSpec":
        """Counting-only spec used by the corpus pipelines: per-language
        whitespace/character modes, no vocabulary."""
        modes = {lang: "character" for lang in CHARACTER_MODE_LANGS}
        return cls(modes=modes, default_mode="whitespace")


def segment(text: str, lang: str, spec: TokenizerSpec) -> list[str]:
    """Surface-form tokens of ``text`` under the language's mode."""
    mode = spec.mode_for(lang)
    if mode == "whitespace":
        return text.split()
    if mode == "character":
        return list(text)
    return [chr(b) for b in text.encode("utf-8")]


def tokenize(text: str, lang: str, spec: TokenizerSpec) -> TokenSequence:
    mode = spec.mode_for(lang)
    if mode == "byte":
        ids = tuple(text.encode("utf-8"))
    else:
        pieces = text.split() if mode == "whitespace" else list(text)
        ids = tuple(spec.vocab.get(p, spec.unk_id) for p in pieces)
    return TokenSequence(ids=ids, lang=lang)


def token_count(text: str, lang: str, spec: TokenizerSpec) -> int:
    mode = spec.mode_for(lang)
    if mode == "byte":
        return len(text.encode("utf-8"))
    if mode == "character":
        return len(text)
    return len(text.split())


def detokenize(seq: TokenSequence, spec: TokenizerSpec) -> str:
    mode = spec.mode_for(seq.lang)
    skip = {spec.bos_id, spec.eos_id, spec.pad_id}
    if mode == "byte":
        out: list[str] = []
        buf = bytearray()
        for tid in seq.ids:
            if tid >= spec.vocab_size or tid < 0:
                raise InvalidToken(f"id {tid} out of range")
            if tid in skip:
                continue
            if tid == spec.unk_id:
                out.append(buf.decode("utf-8", errors="replace"))
                buf.clear()
                out.append(spec.unk_token)
            else:
                buf.append(tid)
        out.append(buf.decode("utf-8", errors="replace"))
        return "".join(out)
    table = spec.id_to_surface()
    pieces = []
    for tid in seq.ids:
        if tid >= spec.vocab_size or tid < 0:
            raise InvalidToken(f"id {tid} out of range")
        if tid in skip:
            continue
        if tid == spec.unk_id:
            pieces.append(spec.unk_token)
        else:
            try:
                pieces.append(table[tid])
            except KeyError:
                raise InvalidToken(f"id {tid} has no surface form") from None
    joiner = " " if mode == "whitespace" else ""
    return joiner.join(pieces)


def save_spec(spec: TokenizerSpec, path: Path) -> None:
    """Serialize to a line-oriented text file: mode/reserved headers, then
    one vocab entry per line."""
    lines = ["# zhmt tokenizer spec v1"]
    if spec.default_mode is not None:
        lines.append(f"default_mode\t{spec.default_mode}")
    for lang in sorted(spec.modes):
        lines.append(f"mode\t{lang}\t{spec.modes[lang]}")
    lines.append(f"vocab_size\t{spec.vocab_size}")
    for name in ("unk_id", "bos_id", "eos_id", "pad_id"):
        lines.append(f"{name}\t{getattr(spec, name)}")
    lines.append(f"unk_token\t{_escape(spec.unk_token)}")
    for surface in sorted(spec.vocab, key=spec.vocab.__getitem__):
        lines.append(f"entry\t{_escape(surface)}\t{spec.vocab[surface]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_spec(path: Path) -> TokenizerSpec:
    modes: dict[str, str] = {}
    vocab: dict[str, int] = {}
    kw: dict = {}
    default_mode = None
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        key = parts[0]
        if key == "default_mode":
            default_mode = parts[1]
        elif key == "mode":
            modes[parts[1]] = parts[2]
        elif key in ("vocab_size", "unk_id", "bos_id", "eos_id", "pad_id"):
            kw[key] = int(parts[1])
        elif key == "unk_token":
            kw["unk_token"] = _unescape(parts[1])
        elif key == "entry":
            vocab[_unescape(parts[1])] = int(parts[2])
        else:
            raise ValueError(f"unknown tokenizer spec line: {raw!r}")
    return TokenizerSpec(modes=modes, default_mode=default_mode, vocab=vocab, **kw)


def _escape(s: str) -> str:
    return s.encode("unicode_escape").decode("ascii")


def _unescape(s: str) -> str:
    return s.encode("ascii").decode("unicode_escape")
