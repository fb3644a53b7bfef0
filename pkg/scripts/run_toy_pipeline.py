#!/usr/bin/env python3
"""Run both cleaning pipelines on built-in toy corpora and print the reports.

Usage:
    python scripts/run_toy_pipeline.py [--pairs N] [--workers N]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from zhmt.mono import MonoPipelineConfig, run_mono_pipeline
from zhmt.para import ParaPipelineConfig, run_para_pipeline
from zhmt.toydata import golden_para_fixture, mono_toy_corpus, synthetic_para_corpus


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--pairs", type=int, default=20_000, help="synthetic pair count")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    print("== golden 12-pair fixture ==")
    records, lexicon = golden_para_fixture()
    cfg = ParaPipelineConfig(sensitive=lexicon)
    kept, report = run_para_pipeline(records, cfg)
    print(report.to_text())
    assert len(kept) == 6

    print(f"== synthetic corpus, {args.pairs} pairs, workers={args.workers} ==")
    big = synthetic_para_corpus(args.pairs, seed=1)
    t0 = time.perf_counter()
    kept, report = run_para_pipeline(big, cfg, workers=args.workers)
    dt = time.perf_counter() - t0
    print(f"kept {len(kept)} of {len(big)} in {dt:.1f}s ({len(big) / dt:.0f} rec/s)")
    print(report.to_text())

    print("== monolingual toy corpus (relaxed bounds for the short sentences) ==")
    mono_cfg = MonoPipelineConfig(min_chars=8, max_chars=120)
    sentences, mono_report = run_mono_pipeline(mono_toy_corpus(), mono_cfg)
    print(mono_report.to_text())
    print("first sentences:", [r.text for r in sentences[:3]])
    return 0


if __name__ == "__main__":
    sys.exit(main())
