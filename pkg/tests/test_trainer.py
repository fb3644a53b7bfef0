import dataclasses
import math

import numpy as np
import pytest

from zhmt.checkpoint import AdamState
from zhmt.curriculum import CurriculumSchedule
from zhmt.model import init_model, tiny_config
from zhmt.registry import ParallelRecord
from zhmt.tensor import Tensor
from zhmt.tokenizer import TokenizerSpec
from zhmt.toydata import copy_task_records, copy_task_template, mono_toy_corpus
from zhmt.trainer import (
    OptimizerConfig,
    RunConfig,
    TrainLog,
    TrainLogRow,
    adamw_step,
    apply_ablation,
    clip_gradients,
    encode_lm_batch,
    lr_at,
    step_rng,
    train_stage1,
    train_stage2,
)


def opt(**kw):
    kw.setdefault("total_steps", 2000)
    return OptimizerConfig(**kw)


def test_lr_schedule_endpoints():
    o = opt(peak_lr=5e-5, warmup_steps=1000)
    assert lr_at(0, o) == 0.0
    assert lr_at(1000, o) == o.peak_lr
    assert lr_at(2000, o) == pytest.approx(0.0, abs=1e-20)


def test_lr_continuity_at_junction():
    o = opt(peak_lr=3e-4, warmup_steps=700)
    below = lr_at(699, o)
    at = lr_at(700, o)
    above = lr_at(701, o)
    assert at == o.peak_lr
    assert abs(at - below) < o.peak_lr / 700 + 1e-12
    assert abs(at - above) < 1e-2 * o.peak_lr


def test_lr_nonnegative_everywhere():
    o = opt(peak_lr=1e-3, warmup_steps=100, total_steps=500)
    for s in range(0, 501):
        assert lr_at(s, o) >= 0.0


def test_lr_zero_warmup():
    o = opt(peak_lr=1e-3, warmup_steps=0, total_steps=10)
    assert lr_at(0, o) == o.peak_lr  # cosine starts immediately
    assert lr_at(10, o) == pytest.approx(0.0, abs=1e-20)


def test_adamw_scalar_hand_case():
    o = opt(beta1=0.9, beta2=0.99, epsilon=1e-8, weight_decay=0.0)
    p = Tensor(np.array([1.0]), requires_grad=True)
    state = AdamState(m={"p": np.zeros(1)}, v={"p": np.zeros(1)})
    adamw_step([("p", p)], {"p": np.array([1.0])}, state, o, step=1, lr=0.1)
    # hand recurrence: m_hat = v_hat = 1, update = 0.1 / (1 + 1e-8)
    expected = 1.0 - 0.1 / (1.0 + 1e-8)
    assert p.data[0] == pytest.approx(expected, abs=1e-12)


def test_adamw_zero_grad_no_decay_is_identity():
    o = opt(weight_decay=0.0)
    p = Tensor(np.array([2.5]), requires_grad=True)
    state = AdamState(m={"p": np.zeros(1)}, v={"p": np.zeros(1)})
    adamw_step([("p", p)], {"p": np.zeros(1)}, state, o, step=1, lr=0.1)
    assert p.data[0] == 2.5


def test_adamw_pure_weight_decay():
    o = opt(weight_decay=0.01)
    p = Tensor(np.array([2.0]), requires_grad=True)
    state = AdamState(m={"p": np.zeros(1)}, v={"p": np.zeros(1)})
    lr = 0.5
    for t in range(1, 4):
        adamw_step([("p", p)], {"p": np.zeros(1)}, state, o, step=t, lr=lr)
    assert p.data[0] == pytest.approx(2.0 * (1 - lr * 0.01) ** 3, abs=1e-15)


def test_adamw_rejects_nonfinite():
    o = opt()
    p = Tensor(np.array([1.0]), requires_grad=True)
    state = AdamState(m={"p": np.zeros(1)}, v={"p": np.zeros(1)})
    with pytest.raises(FloatingPointError, match="p"):
        adamw_step([("p", p)], {"p": np.array([np.nan])}, state, o, step=1, lr=0.1)


def test_clip_gradients():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    norm = clip_gradients(grads, 1.0)
    assert norm == pytest.approx(5.0)
    assert np.sqrt(sum((g * g).sum() for g in grads.values())) == pytest.approx(1.0)
    untouched = {"a": np.array([3.0])}
    clip_gradients(untouched, 0.0)  # disabled
    assert untouched["a"][0] == 3.0


def test_encode_lm_batch_masks_prompt_and_padding():
    spec = TokenizerSpec.byte_spec()
    token_lists = [[65, 66, 67, 68], [70, 71]]
    inputs, labels, mask = encode_lm_batch(token_lists, [2, 0], spec, context=16)
    # row 0: bos a b c d eos -> width 5
    assert inputs.shape == (2, 5)
    assert inputs[0].tolist() == [spec.bos_id, 65, 66, 67, 68]
    assert labels[0].tolist() == [65, 66, 67, 68, spec.eos_id]
    assert mask[0].tolist() == [0.0, 0.0, 1.0, 1.0, 1.0]  # prompt prefix masked
    assert inputs[1].tolist() == [spec.bos_id, 70, 71, spec.pad_id, spec.pad_id]
    assert mask[1].tolist() == [1.0, 1.0, 1.0, 0.0, 0.0]  # padding masked


def test_step_rng_deterministic_and_distinct():
    a = step_rng(7, "stage1-batch", 3).integers(1 << 30)
    b = step_rng(7, "stage1-batch", 3).integers(1 << 30)
    c = step_rng(7, "stage1-batch", 4).integers(1 << 30)
    d = step_rng(8, "stage1-batch", 3).integers(1 << 30)
    assert a == b and a != c and a != d


def _small_byte_model(seed=1):
    # smallest model that can host byte-tokenized text (vocab 260)
    return tiny_config(seed=seed, vocab_size=260, hidden=16, ffn_inner=32,
                       heads=2, layers=2, context=96, moe_expert_count=4, top_k=1)


def _toy_run(stage, **kw):
    total = kw.pop("total_steps", 4)
    return RunConfig(
        stage=stage,
        model=_small_byte_model(),
        optimizer=OptimizerConfig(peak_lr=1e-3, warmup_steps=1, total_steps=total, batch_size=2),
        schedule=CurriculumSchedule(total_steps=total) if stage == "finetune" else None,
        seed=3,
        **kw,
    )


def test_ablation_changes_one_dimension():
    base = _toy_run("finetune")
    ri = apply_ablation(dataclasses.replace(base, ablation="random_init"))
    assert ri.model.init_mode == "random"
    assert dataclasses.replace(ri.model, init_mode=base.model.init_mode) == base.model
    assert (ri.optimizer, ri.schedule) == (base.optimizer, base.schedule)

    ru = apply_ablation(dataclasses.replace(base, ablation="reuse_init"))
    assert ru.model.init_mode == "reuse"

    rt = apply_ablation(dataclasses.replace(base, ablation="random_train"))
    assert rt.model == base.model
    assert rt.schedule == base.schedule.uniform_variant()

    ot = apply_ablation(dataclasses.replace(base, ablation="order_train"))
    assert ot.schedule == base.schedule.ordered_variant()

    assert apply_ablation(base) == base


def test_stage1_deterministic_and_frozen():
    corpus = mono_toy_corpus(8)
    run = _toy_run("pretrain")
    p1, s1, log1 = train_stage1(corpus, run)
    p2, s2, log2 = train_stage1(corpus, run)
    assert [r.loss for r in log1.rows] == [r.loss for r in log2.rows]
    assert log1.frozen_checksum == p1.frozen_checksum()  # unchanged by training
    assert [r.step for r in log1.rows] == [1, 2, 3, 4]
    for row in log1.rows:
        assert row.lr == lr_at(row.step, run.optimizer)


def test_stage1_empty_corpus_errors():
    with pytest.raises(ValueError):
        train_stage1([], _toy_run("pretrain"))


def test_stage2_runs_and_is_deterministic():
    records = copy_task_records(6)
    datasets = {("en", "zh"): records}
    run = _toy_run("finetune")
    tpl = copy_task_template()
    p1, s1, log1 = train_stage2(datasets, run, [tpl])
    p2, s2, log2 = train_stage2(datasets, run, [tpl])
    assert [r.loss for r in log1.rows] == [r.loss for r in log2.rows]
    assert p1.frozen_checksum() == log1.frozen_checksum
    assert log1.rows[0].active_pairs == "en>zh"


def test_stage2_optimizer_state_is_trainable_set():
    records = copy_task_records(4)
    run = _toy_run("finetune", total_steps=2)
    params, state, _ = train_stage2({("en", "zh"): records}, run, [copy_task_template()])
    assert set(state.m) == params.trainable_names
    assert set(state.v) == params.trainable_names


def test_train_log_validation_and_tsv():
    log = TrainLog(seed=5, frozen_checksum="abc")
    log.append(TrainLogRow(1, 0.1, 2.0, "en>zh", 10))
    with pytest.raises(ValueError):
        log.append(TrainLogRow(1, 0.1, 2.0, "en>zh", 20))
    text = log.to_tsv()
    assert "step\tlr\tloss" in text and "en>zh" in text


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(beta1=1.0)
    with pytest.raises(ValueError):
        OptimizerConfig(warmup_steps=11, total_steps=10)
