"""Pipeline run reports: per-stage rejection counters plus totals.

Reports merge associatively, so totals are identical for any worker count.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


@dataclass
class PipelineReport:
    inputs: int = 0
    outputs: int = 0
    # stage -> rejected count; the balance inputs == outputs + sum(stage_rejections)
    # holds for every run.
    stage_rejections: Counter = field(default_factory=Counter)
    # (stage, reason) -> count
    reason_rejections: Counter = field(default_factory=Counter)
    # (pair label "src-tgt", stage) -> count; used by the parallel pipeline
    pair_rejections: Counter = field(default_factory=Counter)

    def count_rejection(self, stage: str, reason: str, pair: str | None = None) -> None:
        self.stage_rejections[stage] += 1
        self.reason_rejections[(stage, reason)] += 1
        if pair is not None:
            self.pair_rejections[(pair, stage)] += 1

    def merge(self, other: "PipelineReport") -> "PipelineReport":
        self.inputs += other.inputs
        self.outputs += other.outputs
        self.stage_rejections.update(other.stage_rejections)
        self.reason_rejections.update(other.reason_rejections)
        self.pair_rejections.update(other.pair_rejections)
        return self

    def total_rejected(self) -> int:
        return sum(self.stage_rejections.values())

    def balanced(self) -> bool:
        return self.inputs == self.outputs + self.total_rejected()

    def to_text(self) -> str:
        lines = [f"inputs\t{self.inputs}", f"outputs\t{self.outputs}"]
        for stage in sorted(self.stage_rejections):
            lines.append(f"rejected\t{stage}\t{self.stage_rejections[stage]}")
        for stage, reason in sorted(self.reason_rejections):
            lines.append(f"reason\t{stage}\t{reason}\t{self.reason_rejections[(stage, reason)]}")
        for pair, stage in sorted(self.pair_rejections):
            lines.append(f"pair\t{pair}\t{stage}\t{self.pair_rejections[(pair, stage)]}")
        return "\n".join(lines) + "\n"
