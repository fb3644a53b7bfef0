"""Two-stage training: causal LM pre-training on monolingual Chinese, then
curriculum-weighted instruction tuning on parallel data.

Only the expert blocks and routers receive updates by default; the backbone
stays frozen through both stages (a config flag can unfreeze it for
stage 1).  Every random draw is keyed by (seed, purpose, step), so resumed
runs reproduce an uninterrupted run bit for bit.
"""

from __future__ import annotations

import dataclasses
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import tensor as T
from .backtranslate import Translator, augment, tier_pair_filter
from .checkpoint import AdamState, save_checkpoint
from .curriculum import CurriculumSchedule, Pair, mixture_at, sample_batch, weight_at
from .model import Model, ModelConfig, ParameterSet, init_model, per_record_loss
from .registry import DEFAULT_REGISTRY, ParallelRecord, Registry, ResourceTier
from .templates import InstructionTemplate, pick_template, render
from .tokenizer import TokenizerSpec, tokenize

ABLATIONS = ("full", "random_init", "reuse_init", "random_train", "order_train")


@dataclass(frozen=True)
class OptimizerConfig:
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-8
    weight_decay: float = 3e-7
    peak_lr: float = 5e-5
    warmup_steps: int = 1000
    total_steps: int = 10_000
    batch_size: int = 8
    grad_clip_norm: float = 1.0  # <= 0 disables clipping

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0,1)")
        if self.warmup_steps > self.total_steps:
            raise ValueError("warmup_steps must not exceed total_steps")


def lr_at(step: int, opt: OptimizerConfig) -> float:
    """Linear warmup to the peak, then cosine decay to zero at total_steps."""
    if step < 0 or step > opt.total_steps:
        raise ValueError(f"step {step} outside [0, {opt.total_steps}]")
    if opt.warmup_steps > 0 and step <= opt.warmup_steps:
        return opt.peak_lr * step / opt.warmup_steps
    span = opt.total_steps - opt.warmup_steps
    if span == 0:
        return opt.peak_lr if step == opt.warmup_steps else 0.0
    return opt.peak_lr * 0.5 * (1.0 + math.cos(math.pi * (step - opt.warmup_steps) / span))


def adamw_step(
    named_params: Sequence[tuple[str, "T.Tensor"]],
    grads: dict[str, np.ndarray],
    state: AdamState,
    opt: OptimizerConfig,
    step: int,
    lr: Optional[float] = None,
) -> None:
    """One decoupled-weight-decay AdamW update with bias correction; only the
    given (trainable) tensors are touched.  ``step`` is the 1-based update
    count used for bias correction; ``lr`` defaults to the schedule value."""
    if lr is None:
        lr = lr_at(step, opt)
    bc1 = 1.0 - opt.beta1**step
    bc2 = 1.0 - opt.beta2**step
    for name, t in named_params:
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        mhat = m / bc1
        vhat = v / bc2
        update = mhat / (np.sqrt(vhat) + opt.epsilon) + opt.weight_decay * t.data
        t.data -= lr * update
        if not np.all(np.isfinite(t.data)):
            raise FloatingPointError(f"non-finite parameter after update: {name}")
    state.t = step


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm;
    returns the pre-clip norm.  Disabled when max_norm <= 0."""
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def step_rng(seed: int, purpose: str, step: int = 0) -> np.random.Generator:
    """Generator keyed by (seed, purpose, step); stateless across resume."""
    key = zlib.crc32(purpose.encode())
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(key, step))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class TrainLogRow:
    step: int       # 1-based optimizer step
    lr: float
    loss: float
    active_pairs: str
    tokens_seen: int


@dataclass
class TrainLog:
    seed: int = 0
    frozen_checksum: str = ""
    rows: list[TrainLogRow] = field(default_factory=list)

    def append(self, row: TrainLogRow) -> None:
        if self.rows and row.step <= self.rows[-1].step:
            raise ValueError("log steps must be strictly increasing")
        self.rows.append(row)

    def to_tsv(self) -> str:
        lines = [
            f"# seed\t{self.seed}",
            f"# frozen_checksum\t{self.frozen_checksum}",
            "step\tlr\tloss\tactive_pairs\ttokens_seen",
        ]
        for r in self.rows:
            lines.append(f"{r.step}\t{r.lr!r}\t{r.loss!r}\t{r.active_pairs}\t{r.tokens_seen}")
        return "\n".join(lines) + "\n"

    def save(self, path: Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


@dataclass(frozen=True)
class RunConfig:
    stage: str  # "pretrain" or "finetune"
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    schedule: Optional[CurriculumSchedule] = None
    ablation: str = "full"
    seed: int = 0
    checkpoint_every: int = 0  # 0: only a final checkpoint
    out_dir: str = ""
    train_backbone_stage1: bool = False
    include_prompt_loss: bool = False
    augment_tiers: tuple[str, ...] = ()
    data_path: str = ""

    def __post_init__(self):
        if self.stage not in ("pretrain", "finetune"):
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}")


def apply_ablation(run: RunConfig) -> RunConfig:
    """Each ablation changes exactly one dimension: init variants set the
    model's init_mode, train variants swap the schedule."""
    if run.ablation == "full":
        return run
    if run.ablation == "random_init":
        return dataclasses.replace(run, model=dataclasses.replace(run.model, init_mode="random"))
    if run.ablation == "reuse_init":
        return dataclasses.replace(run, model=dataclasses.replace(run.model, init_mode="reuse"))
    if run.schedule is None:
        raise ValueError("train-strategy ablations need a schedule")
    if run.ablation == "random_train":
        return dataclasses.replace(run, schedule=run.schedule.uniform_variant())
    return dataclasses.replace(run, schedule=run.schedule.ordered_variant())


# -- batch encoding ----------------------------------------------------------

def encode_lm_batch(
    token_lists: list[list[int]],
    mask_prefix_lens: list[int],
    spec: TokenizerSpec,
    context: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pad [bos] + tokens + [eos] sequences into (inputs, labels, mask).

    ``mask_prefix_lens[i]`` label positions at the start of record i are
    excluded from the loss (instruction prompts); padding is always excluded.
    """
    full = []
    for toks in token_lists:
        seq = [spec.bos_id] + list(toks) + [spec.eos_id]
        full.append(seq[: context + 1])
    width = max(len(s) - 1 for s in full)
    B = len(full)
    inputs = np.full((B, width), spec.pad_id, dtype=np.int64)
    labels = np.zeros((B, width), dtype=np.int64)
    mask = np.zeros((B, width))
    for i, seq in enumerate(full):
        n = len(seq) - 1
        inputs[i, :n] = seq[:-1]
        labels[i, :n] = seq[1:]
        start = min(mask_prefix_lens[i], n)
        mask[i, start:n] = 1.0
    return inputs, labels, mask


def render_example(
    record: ParallelRecord,
    template: InstructionTemplate,
    spec: TokenizerSpec,
    registry: Optional[Registry] = None,
) -> tuple[list[int], int]:
    """Token ids of prompt + newline + target, plus the prompt token count
    (the masked label prefix).  The newline marks where generation starts."""
    ex = render(template, record, registry)
    prompt_ids = list(tokenize(ex.prompt + "\n", record.tgt_lang, spec).ids)
    target_ids = list(tokenize(ex.target, record.tgt_lang, spec).ids)
    return prompt_ids + target_ids, len(prompt_ids)


# -- training loops ----------------------------------------------------------

def _collect_grads(params: ParameterSet) -> dict[str, np.ndarray]:
    grads = {}
    for name, t in params.trainable_items():
        grads[name] = t.grad if t.grad is not None else np.zeros_like(t.data)
    return grads


def _maybe_checkpoint(run: RunConfig, cfg, params, state, step: int, force: bool = False):
    if not run.out_dir:
        return
    due = run.checkpoint_every > 0 and step % run.checkpoint_every == 0
    if force or due:
        out = Path(run.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / f"step{step:06d}.ckpt", cfg, params, state,
                        seed=run.seed, step=step, stage=run.stage)


def train_stage1(
    sentences: Sequence[str],
    run: RunConfig,
    params: Optional[ParameterSet] = None,
    state: Optional[AdamState] = None,
    start_step: int = 0,
    stop_step: Optional[int] = None,
    spec: Optional[TokenizerSpec] = None,
) -> tuple[ParameterSet, AdamState, TrainLog]:
    """Causal-LM training on monolingual sentences (loss on all real tokens).

    ``stop_step`` interrupts the run early without changing the learning-rate
    schedule, which stays defined by ``optimizer.total_steps``.
    """
    if run.stage != "pretrain":
        raise ValueError("train_stage1 requires stage='pretrain'")
    if not sentences:
        raise ValueError("empty corpus")
    run = apply_ablation(run)
    spec = spec if spec is not None else TokenizerSpec.byte_spec()
    opt = run.optimizer
    if params is None:
        params = init_model(run.model)
    model = Model(run.model, params)
    if state is None:
        state = AdamState.fresh(params)
    if run.train_backbone_stage1:
        named = [(n, params.tensors[n]) for n in sorted(params.tensors)]
        for n, t in named:
            t.requires_grad = True
            state.m.setdefault(n, np.zeros_like(t.data))
            state.v.setdefault(n, np.zeros_like(t.data))
    else:
        named = params.trainable_items()

    encoded = [list(tokenize(s, "zh", spec).ids) for s in sentences]
    log = TrainLog(seed=run.seed, frozen_checksum=params.frozen_checksum())
    tokens_seen = 0
    last = opt.total_steps if stop_step is None else min(stop_step, opt.total_steps)
    for s in range(start_step, last):
        rng = step_rng(run.seed, "stage1-batch", s)
        picks = rng.integers(len(encoded), size=opt.batch_size)
        batch = [encoded[int(i)] for i in picks]
        inputs, labels, mask = encode_lm_batch(batch, [0] * len(batch), spec, run.model.context)
        params.zero_grad()
        logits = model.forward(inputs)
        rec_losses = per_record_loss(logits, labels, mask)
        loss = T.tmean(rec_losses)
        loss.backward()
        grads = _collect_grads(params) if not run.train_backbone_stage1 else {
            n: (t.grad if t.grad is not None else np.zeros_like(t.data)) for n, t in named
        }
        clip_gradients(grads, opt.grad_clip_norm)
        t_step = s + 1
        lr = lr_at(t_step, opt)
        adamw_step(named, grads, state, opt, t_step, lr)
        tokens_seen += int(mask.sum())
        log.append(TrainLogRow(t_step, lr, float(loss.data), "zh", tokens_seen))
        _maybe_checkpoint(run, run.model, params, state, t_step)
    _maybe_checkpoint(run, run.model, params, state, last, force=True)
    return params, state, log


def augment_datasets(
    datasets: dict[Pair, list[ParallelRecord]],
    translator: Translator,
    tiers: Sequence[ResourceTier],
    registry: Optional[Registry] = None,
) -> dict[Pair, list[ParallelRecord]]:
    accept = tier_pair_filter(tiers, registry)
    out: dict[Pair, list[ParallelRecord]] = {}
    for pair, records in datasets.items():
        out[pair] = augment(records, translator, accept).all_records()
    return out


def train_stage2(
    datasets: dict[Pair, list[ParallelRecord]],
    run: RunConfig,
    templates: Sequence[InstructionTemplate],
    translator: Optional[Translator] = None,
    params: Optional[ParameterSet] = None,
    state: Optional[AdamState] = None,
    start_step: int = 0,
    stop_step: Optional[int] = None,
    spec: Optional[TokenizerSpec] = None,
    registry: Optional[Registry] = None,
) -> tuple[ParameterSet, AdamState, TrainLog]:
    """Curriculum-weighted instruction tuning: sample pairs from the step's
    mixture, render prompts, compute the loss on target tokens only, and
    aggregate per-pair losses with the curriculum weights."""
    if run.stage != "finetune":
        raise ValueError("train_stage2 requires stage='finetune'")
    if run.schedule is None:
        raise ValueError("finetune needs a curriculum schedule")
    run = apply_ablation(run)
    schedule = run.schedule
    spec = spec if spec is not None else TokenizerSpec.byte_spec()
    opt = run.optimizer
    if params is None:
        params = init_model(run.model)
    model = Model(run.model, params)
    if state is None:
        state = AdamState.fresh(params)
    named = params.trainable_items()

    if translator is not None and run.augment_tiers:
        tiers = [ResourceTier(t) for t in run.augment_tiers]
        datasets = augment_datasets(datasets, translator, tiers, registry)

    log = TrainLog(seed=run.seed, frozen_checksum=params.frozen_checksum())
    tokens_seen = 0
    last = opt.total_steps if stop_step is None else min(stop_step, opt.total_steps)
    for s in range(start_step, last):
        rng = step_rng(run.seed, "stage2-batch", s)
        snapshot = mixture_at(s, sorted(datasets), schedule, registry)
        batch = sample_batch(s, rng, datasets, schedule, opt.batch_size, registry)
        token_lists, prefix_lens, pairs = [], [], []
        for rec in batch:
            tpl = pick_template(rng, list(templates))
            ids, pfx = render_example(rec, tpl, spec, registry)
            token_lists.append(ids)
            prefix_lens.append(0 if run.include_prompt_loss else pfx)
            pairs.append(rec.pair)
        inputs, labels, mask = encode_lm_batch(token_lists, prefix_lens, spec, run.model.context)
        params.zero_grad()
        logits = model.forward(inputs)
        rec_losses = per_record_loss(logits, labels, mask)

        # curriculum-weighted aggregate over the pairs present in this batch
        distinct = sorted(set(pairs))
        w = {p: weight_at(s, p, schedule, registry).value for p in distinct}
        counts = {p: pairs.count(p) for p in distinct}
        wsum = sum(w.values())
        if wsum == 0:
            raise ValueError(f"all sampled pairs have zero weight at step {s}")
        denom = wsum if schedule.normalize_loss else 1.0
        coeff = np.array([w[p] / (counts[p] * denom) for p in pairs])
        loss = T.tsum(rec_losses * coeff)

        loss.backward()
        grads = _collect_grads(params)
        clip_gradients(grads, opt.grad_clip_norm)
        t_step = s + 1
        lr = lr_at(t_step, opt)
        adamw_step(named, grads, state, opt, t_step, lr)
        tokens_seen += int(mask.sum())
        active = ",".join(f"{a}>{b}" for a, b in sorted(snapshot.probabilities))
        log.append(TrainLogRow(t_step, lr, float(loss.data), active, tokens_seen))
        _maybe_checkpoint(run, run.model, params, state, t_step)
    _maybe_checkpoint(run, run.model, params, state, last, force=True)
    return params, state, log


def greedy_translate(
    model: Model,
    record: ParallelRecord,
    template: InstructionTemplate,
    spec: TokenizerSpec,
    registry: Optional[Registry] = None,
    max_new: Optional[int] = None,
) -> str:
    """Render the instruction prompt for a record and greedily decode the
    continuation as the hypothesis translation."""
    ex = render(template, record, registry)
    prompt_ids = [spec.bos_id] + list(tokenize(ex.prompt + "\n", record.tgt_lang, spec).ids)
    budget = max_new if max_new is not None else model.cfg.context - len(prompt_ids)
    out = model.generate(np.array(prompt_ids), max_new=budget, eos_id=spec.eos_id)
    gen = out[len(prompt_ids):]
    if gen and gen[-1] == spec.eos_id:
        gen = gen[:-1]
    from .tokenizer import TokenSequence, detokenize

    return detokenize(TokenSequence(ids=tuple(gen), lang=record.tgt_lang), spec)


def exact_match_rate(
    model: Model,
    records: Sequence[ParallelRecord],
    template: InstructionTemplate,
    spec: TokenizerSpec,
    registry: Optional[Registry] = None,
) -> float:
    """Fraction of records whose greedy decode reproduces the target exactly."""
    if not records:
        return 0.0
    hits = 0
    for rec in records:
        tgt_len = len(tokenize(rec.tgt_text, rec.tgt_lang, spec).ids)
        hyp = greedy_translate(model, rec, template, spec, registry, max_new=tgt_len + 8)
        if hyp == rec.tgt_text:
            hits += 1
    return hits / len(records)
