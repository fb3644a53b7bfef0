#!/usr/bin/env python3
"""Dump curriculum mixture snapshots as a tab-separated table for plotting.

Usage:
    python scripts/dump_curriculum.py [--steps N] [--every N] [--out FILE]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from zhmt.curriculum import CurriculumSchedule, mixture_at, weight_at

PAIRS = [("en", "zh"), ("tr", "zh"), ("ne", "zh"), ("bo", "zh")]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--every", type=int, default=25)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    schedule = CurriculumSchedule(total_steps=args.steps)
    lines = ["step\tsrc\ttgt\tweight\tprobability"]
    for step in range(0, args.steps + 1, args.every):
        weights = {p: weight_at(min(step, args.steps - 1), p, schedule).value for p in PAIRS}
        active = [p for p, w in weights.items() if w > 0]
        probs = mixture_at(min(step, args.steps - 1), active, schedule).probabilities if active else {}
        for pair in PAIRS:
            lines.append(
                f"{step}\t{pair[0]}\t{pair[1]}\t{weights[pair]:.6f}\t{probs.get(pair, 0.0):.6f}"
            )
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        print(text, end="")
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
