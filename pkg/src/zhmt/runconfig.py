"""Sectioned key-value run configuration files.

Sections [run], [model], [optimizer], [schedule], [mono] and [para] cover
every module's configuration.  Unknown sections or keys are rejected, and
parse -> serialize -> parse is a fixed point.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Optional

from .curriculum import CurriculumSchedule
from .mono import MonoPipelineConfig
from .model import ModelConfig
from .para import ParaPipelineConfig, SensitiveLexicon
from .registry import ResourceTier
from .trainer import OptimizerConfig, RunConfig


class ConfigError(ValueError):
    pass


_TIER_KEYS = (
    ("high", ResourceTier.HIGH),
    ("medium", ResourceTier.MEDIUM),
    ("low", ResourceTier.LOW),
    ("verylow", ResourceTier.VERY_LOW),
)


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _to_bool(s: str) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise ConfigError(f"expected true/false, got {s!r}")


_RUN_KEYS = {
    "stage": str,
    "ablation": str,
    "seed": int,
    "checkpoint_every": int,
    "out_dir": str,
    "train_backbone_stage1": _to_bool,
    "include_prompt_loss": _to_bool,
    "augment_tiers": str,  # comma-separated tier names, empty disables
    "data_path": str,
}
_MODEL_KEYS = {
    "vocab_size": int, "hidden": int, "ffn_inner": int, "heads": int,
    "layers": int, "context": int, "sparse_step": int, "moe_expert_count": int,
    "top_k": int, "moe_placement": str, "init_mode": str, "reuse_count": int,
    "seed": int,
}
_OPT_KEYS = {
    "beta1": float, "beta2": float, "epsilon": float, "weight_decay": float,
    "peak_lr": float, "warmup_steps": int, "total_steps": int,
    "batch_size": int, "grad_clip_norm": float,
}
_SCHED_SCALARS = {
    "total_steps": int, "ramp_fraction": float,
    "zh_target_min_fraction": float, "normalize_loss": _to_bool,
}
_MONO_KEYS = {
    "min_chars": int, "max_chars": int, "allowed_punctuation": str,
    "sentence_terminators": str, "closing_quotes": str,
}
_PARA_KEYS = {
    "punct_ratio_max": float, "nonprintable_ratio_max": float,
    "max_token_chars": int, "script_ratio_min": float,
    "length_ratio_max": float, "min_avg_tokens": int, "max_chars": int,
    "sensitive_words": str,  # lexicon file path, empty disables the stage
    "sensitive_freq_max": float,
}


@dataclasses.dataclass
class FullConfig:
    run: RunConfig
    mono: MonoPipelineConfig = dataclasses.field(default_factory=MonoPipelineConfig)
    para: ParaPipelineConfig = dataclasses.field(default_factory=ParaPipelineConfig)
    sensitive_words_path: str = ""


def _parse_sections(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise ConfigError(f"line {lineno}: duplicate section [{current}]")
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        sections[current][key] = value.strip()
    return sections


def _build(section: str, raw: dict[str, str], keys: dict) -> dict:
    out = {}
    for key, value in raw.items():
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        try:
            out[key] = keys[key](value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None
    return out


def _build_schedule(raw: dict[str, str]) -> CurriculumSchedule:
    scalars = {}
    phase = dict(CurriculumSchedule(total_steps=1).phase_starts)
    weights = dict(CurriculumSchedule(total_steps=1).final_weights)
    for key, value in raw.items():
        if key in _SCHED_SCALARS:
            scalars[key] = _SCHED_SCALARS[key](value)
            continue
        matched = False
        for name, tier in _TIER_KEYS:
            if key == f"phase_start_{name}":
                phase[tier] = float(value)
                matched = True
            elif key == f"final_weight_{name}":
                weights[tier] = float(value)
                matched = True
        if not matched:
            raise ConfigError(f"unknown key {key!r} in section [schedule]")
    if "total_steps" not in scalars:
        raise ConfigError("[schedule] requires total_steps")
    return CurriculumSchedule(phase_starts=phase, final_weights=weights, **scalars)


def parse_config(text: str) -> FullConfig:
    sections = _parse_sections(text)
    known = {"run", "model", "optimizer", "schedule", "mono", "para"}
    unknown = set(sections) - known
    if unknown:
        raise ConfigError(f"unknown section [{sorted(unknown)[0]}]")
    if "run" not in sections:
        raise ConfigError("missing [run] section")

    run_kw = _build("run", sections["run"], _RUN_KEYS)
    tiers_text = run_kw.pop("augment_tiers", "")
    tiers: tuple[str, ...] = ()
    if tiers_text:
        try:
            tiers = tuple(ResourceTier(t.strip()).value for t in tiers_text.split(","))
        except ValueError as exc:
            raise ConfigError(f"[run] augment_tiers: {exc}") from None

    model = ModelConfig(**_build("model", sections.get("model", {}), _MODEL_KEYS))
    optimizer = OptimizerConfig(**_build("optimizer", sections.get("optimizer", {}), _OPT_KEYS))
    schedule = _build_schedule(sections["schedule"]) if "schedule" in sections else None

    try:
        run = RunConfig(model=model, optimizer=optimizer, schedule=schedule,
                        augment_tiers=tiers, **run_kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    mono = MonoPipelineConfig(**_build("mono", sections.get("mono", {}), _MONO_KEYS))
    para_kw = _build("para", sections.get("para", {}), _PARA_KEYS)
    sensitive_path = para_kw.pop("sensitive_words", "")
    if sensitive_path:
        para_kw["sensitive"] = SensitiveLexicon.from_file(Path(sensitive_path))
    para = ParaPipelineConfig(**para_kw)
    return FullConfig(run=run, mono=mono, para=para, sensitive_words_path=sensitive_path)


def serialize_config(cfg: FullConfig) -> str:
    lines: list[str] = []

    def section(name: str, pairs: list[tuple[str, Any]]):
        lines.append(f"[{name}]")
        for key, value in pairs:
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")

    run = cfg.run
    section("run", [
        ("stage", run.stage), ("ablation", run.ablation), ("seed", run.seed),
        ("checkpoint_every", run.checkpoint_every), ("out_dir", run.out_dir),
        ("train_backbone_stage1", run.train_backbone_stage1),
        ("include_prompt_loss", run.include_prompt_loss),
        ("augment_tiers", ",".join(run.augment_tiers)),
        ("data_path", run.data_path),
    ])
    section("model", [(k, getattr(run.model, k)) for k in _MODEL_KEYS])
    section("optimizer", [(k, getattr(run.optimizer, k)) for k in _OPT_KEYS])
    if run.schedule is not None:
        s = run.schedule
        pairs: list[tuple[str, Any]] = [("total_steps", s.total_steps)]
        for name, tier in _TIER_KEYS:
            pairs.append((f"phase_start_{name}", s.phase_starts[tier]))
        pairs.append(("ramp_fraction", s.ramp_fraction))
        for name, tier in _TIER_KEYS:
            pairs.append((f"final_weight_{name}", s.final_weights[tier]))
        pairs.append(("zh_target_min_fraction", s.zh_target_min_fraction))
        pairs.append(("normalize_loss", s.normalize_loss))
        section("schedule", pairs)
    section("mono", [(k, getattr(cfg.mono, k)) for k in _MONO_KEYS])
    para_pairs = []
    for k in _PARA_KEYS:
        if k == "sensitive_words":
            para_pairs.append((k, cfg.sensitive_words_path))
        else:
            para_pairs.append((k, getattr(cfg.para, k)))
    section("para", para_pairs)
    return "\n".join(lines)


def load_config(path: Path) -> FullConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
