"""Decoder-only transformer with a frozen backbone and trainable sparse
expert layers.

The backbone (embeddings, attention, layer norms, dense FFNs, output head)
is initialized from the seed and never receives gradients.  Every
``sparse_step``-th layer hosts an expert block: a router picks the top-k
experts per token, their renormalized gate values mix the expert FFN
outputs, and (in the default ``before_ffn`` placement) the mixture feeds the
layer's frozen FFN.  ``replace_ffn`` substitutes the mixture for the FFN
output instead, which makes the reuse-initialized model exactly equal to the
dense backbone.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from . import tensor as T
from .tensor import Tensor

MOE_PLACEMENTS = ("before_ffn", "replace_ffn")
INIT_MODES = ("random", "reuse", "mixed")


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = 260
    hidden: int = 64
    ffn_inner: int = 256
    heads: int = 4
    layers: int = 8
    context: int = 128
    sparse_step: int = 4
    moe_expert_count: int = 8
    top_k: int = 1
    moe_placement: str = "before_ffn"
    init_mode: str = "mixed"
    reuse_count: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.hidden % self.heads != 0:
            raise ValueError("hidden must be divisible by heads")
        if self.ffn_inner < self.hidden:
            raise ValueError("ffn_inner must be >= hidden")
        if not 1 <= self.top_k <= self.moe_expert_count:
            raise ValueError("require 1 <= top_k <= moe_expert_count")
        if not 0 <= self.reuse_count <= self.moe_expert_count:
            raise ValueError("require 0 <= reuse_count <= moe_expert_count")
        if not 1 <= self.sparse_step <= self.layers:
            raise ValueError("require 1 <= sparse_step <= layers")
        if self.moe_placement not in MOE_PLACEMENTS:
            raise ValueError(f"unknown moe_placement {self.moe_placement!r}")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"unknown init_mode {self.init_mode!r}")

    def moe_layer_indices(self) -> tuple[int, ...]:
        """0-based layer indices hosting an expert block: every
        sparse_step-th layer counting from 1."""
        return tuple(i for i in range(self.layers) if (i + 1) % self.sparse_step == 0)


def desk_config(**overrides) -> ModelConfig:
    """Defaults sized for laptop-scale training runs."""
    return replace(ModelConfig(), **overrides) if overrides else ModelConfig()


def full_scale_config(**overrides) -> ModelConfig:
    """The published full-scale hyperparameters; constructible, not meant to
    be instantiated in tests (the embedding alone is ~8 GB in float64)."""
    cfg = ModelConfig(
        vocab_size=250_752,
        hidden=4096,
        ffn_inner=16_384,
        heads=32,
        layers=30,
        context=4096,
        sparse_step=8,
        moe_expert_count=8,
        top_k=1,
    )
    return replace(cfg, **overrides) if overrides else cfg


def tiny_config(**overrides) -> ModelConfig:
    """Smallest useful configuration, used by the finite-difference check."""
    cfg = ModelConfig(
        vocab_size=11,
        hidden=8,
        ffn_inner=16,
        heads=2,
        layers=2,
        context=8,
        sparse_step=2,
        moe_expert_count=4,
        top_k=2,
        init_mode="mixed",
        reuse_count=2,
    )
    return replace(cfg, **overrides) if overrides else cfg


class ParameterSet:
    """Named tensors split into a frozen backbone and trainable expert
    parameters; only trainable tensors carry requires_grad."""

    def __init__(self, tensors: dict[str, Tensor], trainable: Iterable[str]):
        self.tensors = dict(tensors)
        self.trainable_names = set(trainable)
        missing = self.trainable_names - set(self.tensors)
        if missing:
            raise ValueError(f"trainable names not in tensor set: {sorted(missing)}")
        for name, t in self.tensors.items():
            t.name = name
            t.requires_grad = name in self.trainable_names

    @property
    def frozen_names(self) -> set[str]:
        return set(self.tensors) - self.trainable_names

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def trainable_items(self) -> list[tuple[str, Tensor]]:
        return [(n, self.tensors[n]) for n in sorted(self.trainable_names)]

    def frozen_items(self) -> list[tuple[str, Tensor]]:
        return [(n, self.tensors[n]) for n in sorted(self.frozen_names)]

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.grad = None

    def checksum(self, names: Optional[Iterable[str]] = None) -> str:
        """SHA-256 over the raw bytes of the named tensors (sorted by name)."""
        h = hashlib.sha256()
        for name in sorted(names if names is not None else self.tensors):
            h.update(name.encode())
            h.update(self.tensors[name].data.astype("<f8", copy=False).tobytes())
        return h.hexdigest()

    def frozen_checksum(self) -> str:
        return self.checksum(self.frozen_names)


EMBED_INIT_STD = 0.02


def _embed_init(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.normal(0.0, EMBED_INIT_STD, size=shape)


def _proj_init(rng: np.random.Generator, shape) -> np.ndarray:
    # fan-in scaling keeps the frozen backbone signal-preserving, which the
    # desk-scale training tolerances require
    return rng.normal(0.0, 1.0 / np.sqrt(shape[0]), size=shape)


def init_model(cfg: ModelConfig) -> ParameterSet:
    """Draw the frozen backbone from the seed, then the expert blocks.

    The backbone draw order is fixed, so all init modes of the same seed
    share a bit-identical backbone.  init_mode controls the experts:
    ``reuse`` copies every expert from the layer's frozen FFN, ``random``
    draws all experts fresh, ``mixed`` copies experts 0..reuse_count-1 and
    draws the rest.  Routers are always drawn.
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    tensors: dict[str, Tensor] = {}
    trainable: list[str] = []

    def put(name: str, data: np.ndarray, train: bool = False):
        tensors[name] = Tensor(np.ascontiguousarray(data, dtype=np.float64))
        if train:
            trainable.append(name)

    H, F, V = cfg.hidden, cfg.ffn_inner, cfg.vocab_size
    put("tok_emb", _embed_init(rng, (V, H)))
    put("pos_emb", _embed_init(rng, (cfg.context, H)))
    for i in range(cfg.layers):
        p = f"blocks.{i}"
        put(f"{p}.ln1.g", np.ones(H))
        put(f"{p}.ln1.b", np.zeros(H))
        for w in ("wq", "wk", "wv", "wo"):
            put(f"{p}.attn.{w}", _proj_init(rng, (H, H)))
        for b in ("bq", "bk", "bv", "bo"):
            put(f"{p}.attn.{b}", np.zeros(H))
        put(f"{p}.ln2.g", np.ones(H))
        put(f"{p}.ln2.b", np.zeros(H))
        put(f"{p}.ffn.w1", _proj_init(rng, (H, F)))
        put(f"{p}.ffn.b1", np.zeros(F))
        put(f"{p}.ffn.w2", _proj_init(rng, (F, H)))
        put(f"{p}.ffn.b2", np.zeros(H))
    put("ln_f.g", np.ones(H))
    put("ln_f.b", np.zeros(H))
    put("head.w", _proj_init(rng, (H, V)))

    if cfg.init_mode == "reuse":
        n_copied = cfg.moe_expert_count
    elif cfg.init_mode == "random":
        n_copied = 0
    else:
        n_copied = cfg.reuse_count
    for i in cfg.moe_layer_indices():
        p = f"blocks.{i}.moe"
        put(f"{p}.router", _proj_init(rng, (H, cfg.moe_expert_count)), train=True)
        for e in range(cfg.moe_expert_count):
            if e < n_copied:
                w1 = tensors[f"blocks.{i}.ffn.w1"].data.copy()
                b1 = tensors[f"blocks.{i}.ffn.b1"].data.copy()
                w2 = tensors[f"blocks.{i}.ffn.w2"].data.copy()
                b2 = tensors[f"blocks.{i}.ffn.b2"].data.copy()
            else:
                w1, b1 = _proj_init(rng, (H, F)), np.zeros(F)
                w2, b2 = _proj_init(rng, (F, H)), np.zeros(H)
            put(f"{p}.experts.{e}.w1", w1, train=True)
            put(f"{p}.experts.{e}.b1", b1, train=True)
            put(f"{p}.experts.{e}.w2", w2, train=True)
            put(f"{p}.experts.{e}.b2", b2, train=True)
    return ParameterSet(tensors, trainable)


@dataclass(frozen=True)
class GateVector:
    """Per-expert gate values: zeros except the top-k renormalized entries."""

    values: tuple[float, ...]
    selected: tuple[int, ...]

    def __post_init__(self):
        kept = sum(self.values[i] for i in self.selected)
        if abs(kept - 1.0) > 1e-12:
            raise ValueError(f"selected gates sum to {kept}, not 1")


def top_k_select(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries per row, ties broken by lower index."""
    order = np.argsort(-scores, axis=-1, kind="stable")
    return order[..., :k]


def gate(x: np.ndarray, router: np.ndarray, cfg: ModelConfig) -> GateVector:
    """Route one hidden vector: softmax over all experts, keep the top-k by
    logit (ties to the lower index), renormalize the kept mass to 1."""
    logits = x @ router
    shifted = logits - logits.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    sel = top_k_select(logits, cfg.top_k)
    kept = probs[sel]
    kept /= kept.sum()
    values = np.zeros(cfg.moe_expert_count)
    values[sel] = kept
    return GateVector(values=tuple(values.tolist()), selected=tuple(int(i) for i in sel))


class Model:
    """Forward/loss/generation over a ParameterSet; one instance per thread."""

    def __init__(self, cfg: ModelConfig, params: ParameterSet):
        self.cfg = cfg
        self.params = params
        self._moe_layers = set(cfg.moe_layer_indices())
        # tokens routed per (layer, expert) during the last forward pass
        self.last_expert_load: dict[tuple[int, int], int] = {}

    def _ffn(self, u: Tensor, prefix: str) -> Tensor:
        p = self.params
        h = T.gelu(u @ p[f"{prefix}.w1"] + p[f"{prefix}.b1"])
        return h @ p[f"{prefix}.w2"] + p[f"{prefix}.b2"]

    def _moe_mix(self, u: Tensor, layer: int) -> Tensor:
        cfg, p = self.cfg, self.params
        B, S, H = u.shape
        N = B * S
        flat = T.reshape(u, (N, H))
        router = p[f"blocks.{layer}.moe.router"]
        logits = flat @ router
        probs = T.softmax(logits)
        sel = top_k_select(logits.data, cfg.top_k)
        mask = np.zeros((N, cfg.moe_expert_count))
        mask[np.arange(N)[:, None], sel] = 1.0
        masked = probs * mask
        gates = masked / T.tsum(masked, axis=-1, keepdims=True)

        mixed: Optional[Tensor] = None
        for e in range(cfg.moe_expert_count):
            idx = np.nonzero(mask[:, e])[0]
            self.last_expert_load[(layer, e)] = int(idx.size)
            if idx.size == 0:
                continue
            rows = T.gather_rows(flat, idx)
            y = self._ffn(rows, f"blocks.{layer}.moe.experts.{e}")
            g_e = T.reshape(T.gather_rc(gates, idx, e), (idx.size, 1))
            part = T.scatter_rows(y * g_e, idx, N)
            mixed = part if mixed is None else mixed + part
        assert mixed is not None
        return T.reshape(mixed, (B, S, H))

    def forward(self, ids: np.ndarray, use_moe: bool = True) -> Tensor:
        """Logits over the vocabulary for every position of a (B, T) batch.

        ``use_moe=False`` runs the plain frozen backbone (the dense baseline
        used by the equivalence check).
        """
        cfg, p = self.cfg, self.params
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim == 1:
            ids = ids[None, :]
        B, S = ids.shape
        if S > cfg.context:
            raise ValueError(f"sequence length {S} exceeds context {cfg.context}")
        if ids.min() < 0 or ids.max() >= cfg.vocab_size:
            raise ValueError("token id out of range")
        self.last_expert_load = {}

        nh, dh = cfg.heads, cfg.hidden // cfg.heads
        x = T.reshape(T.gather_rows(p["tok_emb"], ids.reshape(-1)), (B, S, cfg.hidden))
        x = x + T.gather_rows(p["pos_emb"], np.arange(S))
        causal = np.triu(np.full((S, S), -1e30), k=1)[None, None, :, :]

        for i in range(cfg.layers):
            blk = f"blocks.{i}"
            h = T.layer_norm(x, p[f"{blk}.ln1.g"], p[f"{blk}.ln1.b"])
            q = T.transpose(T.reshape(h @ p[f"{blk}.attn.wq"] + p[f"{blk}.attn.bq"], (B, S, nh, dh)), (0, 2, 1, 3))
            k = T.transpose(T.reshape(h @ p[f"{blk}.attn.wk"] + p[f"{blk}.attn.bk"], (B, S, nh, dh)), (0, 2, 1, 3))
            v = T.transpose(T.reshape(h @ p[f"{blk}.attn.wv"] + p[f"{blk}.attn.bv"], (B, S, nh, dh)), (0, 2, 1, 3))
            scores = (q @ T.transpose(k, (0, 1, 3, 2))) * (1.0 / np.sqrt(dh)) + causal
            att = T.softmax(scores)
            o = T.reshape(T.transpose(att @ v, (0, 2, 1, 3)), (B, S, cfg.hidden))
            x = x + (o @ p[f"{blk}.attn.wo"] + p[f"{blk}.attn.bo"])

            u = T.layer_norm(x, p[f"{blk}.ln2.g"], p[f"{blk}.ln2.b"])
            if use_moe and i in self._moe_layers:
                m = self._moe_mix(u, i)
                f = m if cfg.moe_placement == "replace_ffn" else self._ffn(m, f"{blk}.ffn")
            else:
                f = self._ffn(u, f"{blk}.ffn")
            x = x + f

        x = T.layer_norm(x, p["ln_f.g"], p["ln_f.b"])
        logits = x @ p["head.w"]
        T.assert_finite("logits", logits.data)
        return logits

    def generate(
        self,
        prefix: np.ndarray,
        max_new: int,
        eos_id: Optional[int] = None,
        use_moe: bool = True,
    ) -> list[int]:
        """Greedy continuation of a 1-D prefix; stops at eos_id, max_new, or
        the context limit.  Deterministic."""
        ids = [int(t) for t in np.asarray(prefix).reshape(-1)]
        if not ids:
            raise ValueError("prefix must be nonempty")
        for _ in range(max_new):
            if len(ids) >= self.cfg.context:
                break
            window = np.array(ids, dtype=np.int64)[None, :]
            logits = self.forward(window, use_moe=use_moe)
            nxt = int(np.argmax(logits.data[0, -1]))
            ids.append(nxt)
            if eos_id is not None and nxt == eos_id:
                break
        return ids


def clm_loss(logits: Tensor, targets: np.ndarray, mask: Optional[np.ndarray] = None) -> Tensor:
    """Mean negative log-likelihood of the targets over unmasked positions.

    logits: (B, T, V); targets: (B, T) int; mask: (B, T) 0/1, defaults to all
    ones.  Multiply by the unmasked-position count to recover the raw summed
    cross-entropy.
    """
    B, S, V = logits.shape
    targets = np.asarray(targets, dtype=np.int64)
    flat = T.reshape(logits, (B * S, V))
    ce = T.cross_entropy(flat, targets.reshape(-1))
    if mask is None:
        mask = np.ones((B, S))
    m = np.asarray(mask, dtype=np.float64).reshape(-1)
    count = m.sum()
    if count == 0:
        return T.mul(T.tsum(ce * m), 0.0)
    return T.mul(T.tsum(ce * m), 1.0 / count)


def per_record_loss(logits: Tensor, targets: np.ndarray, mask: np.ndarray) -> Tensor:
    """Per-record masked mean cross-entropy: (B,) tensor."""
    B, S, V = logits.shape
    flat = T.reshape(logits, (B * S, V))
    ce = T.reshape(T.cross_entropy(flat, np.asarray(targets, dtype=np.int64).reshape(-1)), (B, S))
    m = np.asarray(mask, dtype=np.float64)
    counts = np.maximum(m.sum(axis=1), 1.0)
    return T.tsum(ce * m, axis=1) * (1.0 / counts)
