"""Instruction formatting: render translation pairs as instruction-driven
training examples from the shipped template set."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .registry import DEFAULT_REGISTRY, ParallelRecord, Registry

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")
ALLOWED_PLACEHOLDERS = frozenset({"src_lang", "tgt_lang", "src_text"})


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class InstructionTemplate:
    id: int
    pattern: str

    def placeholders(self) -> list[str]:
        return _PLACEHOLDER.findall(self.pattern)


@dataclass(frozen=True)
class InstructionExample:
    prompt: str
    target: str
    src_lang: str
    tgt_lang: str
    template_id: int


def _validate(pattern: str, lineno: int) -> None:
    names = _PLACEHOLDER.findall(pattern)
    unknown = [n for n in names if n not in ALLOWED_PLACEHOLDERS]
    if unknown:
        raise TemplateError(f"line {lineno}: unknown placeholder {{{unknown[0]}}}")
    # {src_text} is mandatory and unique; language slots may repeat (several
    # shipped templates name the languages twice).
    if names.count("src_text") != 1:
        raise TemplateError(f"line {lineno}: template must contain {{src_text}} exactly once")


def load_templates(path: Path) -> list[InstructionTemplate]:
    """Load templates in file order, validating placeholders; `#` comment
    lines and blank lines are skipped."""
    templates = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        _validate(line, lineno)
        templates.append(InstructionTemplate(id=len(templates), pattern=line))
    return templates


def builtin_templates() -> list[InstructionTemplate]:
    with resources.as_file(resources.files("zhmt").joinpath("data/templates.txt")) as p:
        return load_templates(p)


def render(
    template: InstructionTemplate,
    record: ParallelRecord,
    registry: Optional[Registry] = None,
) -> InstructionExample:
    """Substitute placeholders in a single pass: language slots get full
    English names, {src_text} gets the source verbatim (braces inside the
    source text are never re-substituted)."""
    reg = registry if registry is not None else DEFAULT_REGISTRY
    values = {
        "src_lang": reg.name(record.src_lang),
        "tgt_lang": reg.name(record.tgt_lang),
        "src_text": record.src_text,
    }
    prompt = _PLACEHOLDER.sub(lambda m: values[m.group(1)], template.pattern)
    return InstructionExample(
        prompt=prompt,
        target=record.tgt_text,
        src_lang=record.src_lang,
        tgt_lang=record.tgt_lang,
        template_id=template.id,
    )


def pick_template(rng: np.random.Generator, templates: list[InstructionTemplate]) -> InstructionTemplate:
    """Uniform choice; deterministic for a given generator state."""
    if not templates:
        raise TemplateError("template list is empty")
    return templates[int(rng.integers(len(templates)))]
