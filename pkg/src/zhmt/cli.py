"""Command-line entry point binding the pipelines, trainer and evaluator.

Exit codes: 0 success, 2 configuration/usage error, 3 I/O error,
4 alignment error, 5 checkpoint mismatch.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ALIGNMENT = 4
EXIT_CHECKPOINT = 5


def _read_lines(path: Path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _load_full_config(path: str | None):
    from .runconfig import FullConfig, load_config
    from .trainer import RunConfig

    if path is None:
        return FullConfig(run=RunConfig(stage="pretrain"))
    return load_config(Path(path))


def cmd_clean_mono(args) -> int:
    from .mono import run_mono_pipeline

    cfg = _load_full_config(args.config).mono
    paragraphs = _read_lines(Path(args.infile))
    records, report = run_mono_pipeline(paragraphs, cfg, workers=args.workers)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.text + "\n")
    Path(args.report).write_text(report.to_text(), encoding="utf-8")
    return EXIT_OK


def cmd_clean_para(args) -> int:
    from .para import (
        pair_files,
        read_records_paired,
        read_records_tsv,
        run_para_pipeline,
        write_records_tsv,
    )
    from .reporting import PipelineReport

    cfg = _load_full_config(args.config).para
    report = PipelineReport()
    if args.infile:
        records = read_records_tsv(Path(args.infile), report)
    else:
        if not (args.src and args.tgt):
            print("clean-para: --pair-dir requires --src and --tgt", file=sys.stderr)
            return EXIT_CONFIG
        records = []
        for sp, tp in pair_files(Path(args.pair_dir), args.src, args.tgt):
            records.extend(read_records_paired(sp, tp, args.src, args.tgt))
    kept, run_report = run_para_pipeline(records, cfg, workers=args.workers)
    report.merge(run_report)
    write_records_tsv(kept, Path(args.out))
    Path(args.report).write_text(report.to_text(), encoding="utf-8")
    return EXIT_OK


def cmd_augment(args) -> int:
    from .backtranslate import (
        augment,
        dictionary_translator,
        identity_translator,
        load_dictionary,
        tier_pair_filter,
        word_reverse_translator,
    )
    from .para import read_records_tsv
    from .registry import ResourceTier

    if args.translator == "identity":
        translator = identity_translator()
    elif args.translator == "word-reverse":
        translator = word_reverse_translator()
    elif args.translator == "dictionary":
        if not args.dict:
            print("augment: --translator dictionary requires --dict", file=sys.stderr)
            return EXIT_CONFIG
        try:
            translator = dictionary_translator(load_dictionary(Path(args.dict)))
        except OSError as exc:
            print(f"augment: cannot read dictionary: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        print(f"augment: unknown translator {args.translator!r}", file=sys.stderr)
        return EXIT_CONFIG

    pair_filter = None
    if args.tiers:
        try:
            tiers = [ResourceTier(_TIER_ALIASES.get(t.strip().lower(), t.strip()))
                     for t in args.tiers.split(",")]
        except ValueError as exc:
            print(f"augment: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        pair_filter = tier_pair_filter(tiers)

    records = read_records_tsv(Path(args.infile))
    result = augment(records, translator, pair_filter)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for tagged in result.records:
            r = tagged.record
            fh.write(f"{r.src_lang}\t{r.tgt_lang}\t{r.src_text}\t{r.tgt_text}\t{tagged.origin}\n")
    return EXIT_OK


_TIER_ALIASES = {"high": "High", "medium": "Medium", "low": "Low", "verylow": "VeryLow"}


def _resume(args, expected_model):
    from .checkpoint import CheckpointError, load_checkpoint

    if not args.resume:
        return None
    cfg, params, state, header = load_checkpoint(Path(args.resume))
    if cfg != expected_model:
        raise CheckpointError("checkpoint model config does not match run config")
    return params, state, int(header["step"])


def cmd_train_stage1(args) -> int:
    from .trainer import apply_ablation, train_stage1

    full = _load_full_config(args.config)
    run = full.run
    if args.out_dir:
        run = dataclasses.replace(run, out_dir=args.out_dir)
    if args.seed is not None:
        run = dataclasses.replace(run, seed=args.seed)
    if run.stage != "pretrain":
        print("train-stage1 requires stage = pretrain in [run]", file=sys.stderr)
        return EXIT_CONFIG
    sentences = [s for s in _read_lines(Path(run.data_path)) if s.strip()]
    resumed = _resume(args, apply_ablation(run).model)
    params = state = None
    start = 0
    if resumed:
        params, state, start = resumed
    params, state, log = train_stage1(sentences, run, params=params, state=state, start_step=start)
    if run.out_dir:
        out = Path(run.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        log.save(out / "train_log.tsv")
    return EXIT_OK


def cmd_train_stage2(args) -> int:
    from .backtranslate import identity_translator
    from .para import read_records_tsv
    from .templates import builtin_templates
    from .trainer import apply_ablation, train_stage2

    full = _load_full_config(args.config)
    run = full.run
    if args.out_dir:
        run = dataclasses.replace(run, out_dir=args.out_dir)
    if args.seed is not None:
        run = dataclasses.replace(run, seed=args.seed)
    if run.stage != "finetune":
        print("train-stage2 requires stage = finetune in [run]", file=sys.stderr)
        return EXIT_CONFIG
    records = read_records_tsv(Path(run.data_path))
    datasets: dict = {}
    for rec in records:
        datasets.setdefault(rec.pair, []).append(rec)
    resumed = _resume(args, apply_ablation(run).model)
    params = state = None
    start = 0
    if resumed:
        params, state, start = resumed
    translator = identity_translator() if run.augment_tiers else None
    params, state, log = train_stage2(
        datasets, run, builtin_templates(), translator=translator,
        params=params, state=state, start_step=start,
    )
    if run.out_dir:
        out = Path(run.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        log.save(out / "train_log.tsv")
    return EXIT_OK


def _score_groups(rows) -> dict:
    from .evaluator import EvalPair, bleu, chrf

    groups: dict = {}
    for src, tgt, hyp, ref in rows:
        groups.setdefault((src, tgt), []).append(EvalPair(hyp, ref, (src, tgt)))
    return {
        pair: {"bleu": bleu(items), "chrf": chrf(items)}
        for pair, items in groups.items()
    }


def cmd_score(args) -> int:
    from .evaluator import build_report, render_report, report_tsv

    rows = []
    for lineno, line in enumerate(_read_lines(Path(args.hyp_ref)), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            print(f"score: line {lineno}: expected 4 tab-separated fields", file=sys.stderr)
            return EXIT_CONFIG
        rows.append(tuple(parts))
    report = build_report(_score_groups(rows))
    Path(args.out).write_text(report_tsv(report), encoding="utf-8")
    print(render_report(report), end="")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .checkpoint import load_checkpoint
    from .evaluator import build_report, render_report, report_tsv
    from .model import Model
    from .para import read_records_tsv
    from .templates import builtin_templates
    from .tokenizer import TokenizerSpec
    from .trainer import greedy_translate

    cfg, params, _, _ = load_checkpoint(Path(args.model))
    model = Model(cfg, params)
    spec = TokenizerSpec.byte_spec()
    templates = builtin_templates()
    if not 0 <= args.template_id < len(templates):
        print(f"evaluate: template id out of range 0..{len(templates) - 1}", file=sys.stderr)
        return EXIT_CONFIG
    template = templates[args.template_id]
    rows = []
    for rec in read_records_tsv(Path(args.testset)):
        hyp = greedy_translate(model, rec, template, spec)
        rows.append((rec.src_lang, rec.tgt_lang, hyp, rec.tgt_text))
    report = build_report(_score_groups(rows))
    Path(args.out).write_text(report_tsv(report), encoding="utf-8")
    print(render_report(report), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zhmt",
        description="Chinese-centric MT toolkit: corpus cleaning, sparse-expert training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clean-mono", help="clean a monolingual Chinese corpus")
    p.add_argument("--in", dest="infile", required=True, help="input file, one paragraph per line")
    p.add_argument("--out", required=True, help="output file, one sentence per line")
    p.add_argument("--report", required=True, help="report file path")
    p.add_argument("--config", help="run config file")
    p.add_argument("--workers", type=int, default=1, help="parallel workers (1 = reference)")
    p.set_defaults(fn=cmd_clean_mono)

    p = sub.add_parser("clean-para", help="clean a parallel corpus")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--in", dest="infile", help="tab-separated records file")
    group.add_argument("--pair-dir", dest="pair_dir", help="directory of <stem>.<lang> file pairs")
    p.add_argument("--src", help="source language code (with --pair-dir)")
    p.add_argument("--tgt", help="target language code (with --pair-dir)")
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--config", help="run config file")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_clean_para)

    p = sub.add_parser("augment", help="back-translation augmentation")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--translator", required=True, help="identity | word-reverse | dictionary")
    p.add_argument("--dict", help="tab-separated word map for the dictionary translator")
    p.add_argument("--tiers", default="", help="restrict to tiers, e.g. low,verylow (default: all)")
    p.set_defaults(fn=cmd_augment)

    for name, fn in (("train-stage1", cmd_train_stage1), ("train-stage2", cmd_train_stage2)):
        p = sub.add_parser(name, help=f"run {name.replace('-', ' ')}")
        p.add_argument("--config", required=True)
        p.add_argument("--resume", help="checkpoint to continue from")
        p.add_argument("--out-dir", dest="out_dir", help="override [run] out_dir")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.set_defaults(fn=fn)

    p = sub.add_parser("evaluate", help="decode a test set with a model and score it")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--testset", required=True, help="tab-separated records file")
    p.add_argument("--out", required=True, help="machine-readable score file")
    p.add_argument("--template-id", dest="template_id", type=int, default=3)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("score", help="score precomputed hypothesis/reference pairs")
    p.add_argument("--hyp-ref", dest="hyp_ref", required=True,
                   help="lines of src_lang<TAB>tgt_lang<TAB>hypothesis<TAB>reference")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_score)
    return parser


def main(argv=None) -> int:
    from .checkpoint import CheckpointError
    from .para import AlignmentError
    from .runconfig import ConfigError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"zhmt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AlignmentError as exc:
        print(f"zhmt: alignment error: {exc}", file=sys.stderr)
        return EXIT_ALIGNMENT
    except CheckpointError as exc:
        print(f"zhmt: checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except FileNotFoundError as exc:
        print(f"zhmt: missing file: {exc.filename}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"zhmt: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"zhmt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
