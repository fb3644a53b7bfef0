"""Resource-tiered curriculum: per-pair loss weights over training steps,
sampling mixtures with a Chinese-target probability floor, and batch drawing.

A pair's weight is 0 before its tier's phase start, ramps linearly to the
tier's final weight over ``ramp_fraction`` of total steps, and stays constant
afterwards.  Tiers whose phase starts at 0 skip the ramp, so High-resource
pairs train at full weight from step 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .registry import (
    DEFAULT_REGISTRY,
    ParallelRecord,
    Registry,
    ResourceTier,
    TIERS_HIGH_TO_LOW,
    pair_tier,
)

Pair = tuple[str, str]

DEFAULT_PHASE_STARTS: dict[ResourceTier, float] = {
    ResourceTier.HIGH: 0.0,
    ResourceTier.MEDIUM: 0.25,
    ResourceTier.LOW: 0.5,
    ResourceTier.VERY_LOW: 0.75,
}


def _unit_weights() -> dict[ResourceTier, float]:
    return {tier: 1.0 for tier in TIERS_HIGH_TO_LOW}


@dataclass(frozen=True)
class CurriculumSchedule:
    total_steps: int
    phase_starts: Mapping[ResourceTier, float] = field(
        default_factory=lambda: dict(DEFAULT_PHASE_STARTS)
    )
    ramp_fraction: float = 0.1
    final_weights: Mapping[ResourceTier, float] = field(default_factory=_unit_weights)
    zh_target_min_fraction: float = 0.5
    # Eq-style unnormalized weighted sum is available by switching this off.
    normalize_loss: bool = True

    def __post_init__(self):
        if self.total_steps <= 0:
            raise ValueError("total_steps must be positive")
        if self.phase_starts[ResourceTier.HIGH] != 0.0:
            raise ValueError("High tier must start at phase 0.0")
        fracs = [self.phase_starts[t] for t in TIERS_HIGH_TO_LOW]
        if any(b < a for a, b in zip(fracs, fracs[1:])):
            raise ValueError("phase starts must be nondecreasing from High to VeryLow")
        if any(self.final_weights[t] <= 0 for t in TIERS_HIGH_TO_LOW):
            raise ValueError("final weights must be positive")
        if not 0.0 <= self.zh_target_min_fraction <= 1.0:
            raise ValueError("zh_target_min_fraction must be in [0,1]")

    def uniform_variant(self) -> "CurriculumSchedule":
        """All pairs active with weight 1 at every step and no zh floor:
        uniform language mixing without weighting."""
        return replace(
            self,
            phase_starts={t: 0.0 for t in TIERS_HIGH_TO_LOW},
            ramp_fraction=0.0,
            final_weights=_unit_weights(),
            zh_target_min_fraction=0.0,
        )

    def ordered_variant(self) -> "CurriculumSchedule":
        """Tiers activate in order with equal 0/1 weights and no ramp."""
        return replace(self, ramp_fraction=0.0, final_weights=_unit_weights())


@dataclass(frozen=True)
class CurriculumWeight:
    value: float
    tier: ResourceTier

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("weights are nonnegative")


@dataclass(frozen=True)
class MixtureSnapshot:
    step: int
    probabilities: Mapping[Pair, float]

    def __post_init__(self):
        total = sum(self.probabilities.values())
        if self.probabilities and abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def zh_target_mass(self) -> float:
        return sum(p for pair, p in self.probabilities.items() if pair[1] == "zh")

    def to_tsv(self) -> str:
        lines = ["step\tsrc\ttgt\tprobability"]
        for (src, tgt), p in sorted(self.probabilities.items()):
            lines.append(f"{self.step}\t{src}\t{tgt}\t{p:.12g}")
        return "\n".join(lines) + "\n"


def weight_at(
    step: int,
    pair: Pair,
    schedule: CurriculumSchedule,
    registry: Optional[Registry] = None,
) -> CurriculumWeight:
    """The loss weight of one language pair at one step; nondecreasing in step."""
    if step < 0 or step > schedule.total_steps:
        raise ValueError(f"step {step} outside [0, {schedule.total_steps}]")
    reg = registry if registry is not None else DEFAULT_REGISTRY
    tier = pair_tier(pair, reg)
    final = float(schedule.final_weights[tier])
    start_frac = float(schedule.phase_starts[tier])
    if start_frac == 0.0:
        return CurriculumWeight(value=final, tier=tier)
    start = start_frac * schedule.total_steps
    if step < start:
        return CurriculumWeight(value=0.0, tier=tier)
    ramp = schedule.ramp_fraction * schedule.total_steps
    if ramp <= 0.0:
        return CurriculumWeight(value=final, tier=tier)
    progress = min(1.0, (step - start) / ramp)
    return CurriculumWeight(value=final * progress, tier=tier)


def mixture_at(
    step: int,
    pairs: Sequence[Pair],
    schedule: CurriculumSchedule,
    registry: Optional[Registry] = None,
) -> MixtureSnapshot:
    """Sampling probabilities proportional to weight_at, then rescaled so the
    mass on Chinese-target pairs meets the configured floor whenever any such
    pair is active."""
    weights = {pair: weight_at(step, pair, schedule, registry).value for pair in pairs}
    active = {pair: w for pair, w in weights.items() if w > 0}
    if not active:
        raise ValueError(f"no pair has positive weight at step {step}")
    total = sum(active.values())
    probs = {pair: w / total for pair, w in active.items()}

    zh_min = schedule.zh_target_min_fraction
    zh_mass = sum(p for pair, p in probs.items() if pair[1] == "zh")
    other_mass = 1.0 - zh_mass
    if zh_mass > 0.0 and other_mass > 0.0 and zh_mass < zh_min:
        # smallest rescaling of non-zh-target mass that lifts zh mass to the floor
        alpha = zh_mass * (1.0 - zh_min) / (zh_min * other_mass)
        scaled = {
            pair: (p if pair[1] == "zh" else p * alpha) for pair, p in probs.items()
        }
        norm = sum(scaled.values())
        probs = {pair: p / norm for pair, p in scaled.items()}
    return MixtureSnapshot(step=step, probabilities=probs)


def total_loss(
    per_pair_losses: Mapping[Pair, float],
    step: int,
    schedule: CurriculumSchedule,
    registry: Optional[Registry] = None,
) -> float:
    """Curriculum-weighted aggregate of per-pair losses.

    Normalized by the weight sum by default so the scale is stable as tiers
    activate; set ``schedule.normalize_loss = False`` for the raw weighted sum.
    """
    if not per_pair_losses:
        raise ValueError("no losses to aggregate")
    for pair, loss in per_pair_losses.items():
        if not np.isfinite(loss):
            raise ValueError(f"non-finite loss for pair {pair}")
    weights = {p: weight_at(step, p, schedule, registry).value for p in per_pair_losses}
    wsum = sum(weights.values())
    if wsum == 0.0:
        raise ValueError(f"all pair weights are zero at step {step}")
    acc = sum(weights[p] * per_pair_losses[p] for p in per_pair_losses)
    return acc / wsum if schedule.normalize_loss else acc


def sample_batch(
    step: int,
    rng: np.random.Generator,
    datasets: Mapping[Pair, Sequence[ParallelRecord]],
    schedule: CurriculumSchedule,
    batch_size: int,
    registry: Optional[Registry] = None,
) -> list[ParallelRecord]:
    """Draw a batch: pick a pair from the step's mixture, then a uniform
    record from that pair's dataset.  Deterministic for a given generator."""
    if batch_size <= 0:
        return []
    snapshot = mixture_at(step, sorted(datasets), schedule, registry)
    pairs = sorted(snapshot.probabilities)
    for pair in pairs:
        if not datasets[pair]:
            raise ValueError(f"active pair {pair} has an empty dataset")
    probs = np.array([snapshot.probabilities[p] for p in pairs])
    pair_idx = rng.choice(len(pairs), size=batch_size, p=probs)
    batch = []
    for i in pair_idx:
        records = datasets[pairs[int(i)]]
        batch.append(records[int(rng.integers(len(records)))])
    return batch
