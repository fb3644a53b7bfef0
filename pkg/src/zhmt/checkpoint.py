"""Sectioned binary checkpoints with a text manifest.

Layout: magic, version, JSON header (model config, seed, step, stage,
optimizer step counter), named tensors (name, trainable flag, dtype tag,
shape, little-endian float64 data), optimizer moment arrays for trainable
tensors, and a trailing SHA-256 over everything before it.  Truncated or
edited files fail the digest check before anything is loaded.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .model import ModelConfig, ParameterSet
from .tensor import Tensor

MAGIC = b"ZHMTCKPT"
VERSION = 1
_DTYPE_F64 = 0


class CheckpointError(RuntimeError):
    pass


@dataclasses.dataclass
class AdamState:
    """First/second moment estimates per trainable tensor plus step count."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def fresh(cls, params: ParameterSet) -> "AdamState":
        m = {n: np.zeros_like(t.data) for n, t in params.trainable_items()}
        v = {n: np.zeros_like(t.data) for n, t in params.trainable_items()}
        return cls(m=m, v=v, t=0)


def _pack_array(out: bytearray, arr: np.ndarray) -> None:
    data = np.ascontiguousarray(arr, dtype="<f8")
    out += struct.pack("<BB", _DTYPE_F64, data.ndim)
    for d in data.shape:
        out += struct.pack("<I", d)
    out += data.tobytes()


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError("truncated checkpoint")
        piece = self.blob[self.pos : self.pos + n]
        self.pos += n
        return piece

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def array(self) -> np.ndarray:
        dtype, ndim = self.u8(), self.u8()
        if dtype != _DTYPE_F64:
            raise CheckpointError(f"unknown dtype tag {dtype}")
        shape = tuple(self.u32() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)


def save_checkpoint(
    path: Path,
    cfg: ModelConfig,
    params: ParameterSet,
    state: Optional[AdamState] = None,
    seed: int = 0,
    step: int = 0,
    stage: str = "",
) -> None:
    header = {
        "config": dataclasses.asdict(cfg),
        "seed": seed,
        "step": step,
        "stage": stage,
        "adam_t": state.t if state is not None else 0,
    }
    hjson = json.dumps(header, sort_keys=True).encode("utf-8")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack("<I", len(hjson))
    out += hjson

    names = sorted(params.tensors)
    out += struct.pack("<I", len(names))
    for name in names:
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb))
        out += nb
        out += struct.pack("<B", 1 if name in params.trainable_names else 0)
        _pack_array(out, params.tensors[name].data)

    state_names = sorted(state.m) if state is not None else []
    out += struct.pack("<I", len(state_names))
    for name in state_names:
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb))
        out += nb
        _pack_array(out, state.m[name])
        _pack_array(out, state.v[name])

    digest = hashlib.sha256(bytes(out)).digest()
    out += digest
    Path(path).write_bytes(bytes(out))
    _write_manifest(Path(path), header, params, digest.hex())


def _write_manifest(path: Path, header: dict, params: ParameterSet, digest: str) -> None:
    lines = [
        f"checkpoint\t{path.name}",
        f"digest\t{digest}",
        f"seed\t{header['seed']}",
        f"step\t{header['step']}",
        f"stage\t{header['stage']}",
        f"config\t{json.dumps(header['config'], sort_keys=True)}",
    ]
    for name in sorted(params.tensors):
        t = params.tensors[name]
        kind = "trainable" if name in params.trainable_names else "frozen"
        csum = hashlib.sha256(t.data.astype("<f8", copy=False).tobytes()).hexdigest()
        shape = "x".join(str(d) for d in t.data.shape)
        lines.append(f"tensor\t{name}\t{kind}\t{shape}\t{csum}")
    Path(str(path) + ".manifest").write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path: Path) -> tuple[ModelConfig, ParameterSet, AdamState, dict]:
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 4 + 32:
        raise CheckpointError("file too short")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checksum mismatch (truncated or corrupted file)")
    r = _Reader(body)
    if r.take(len(MAGIC)) != MAGIC:
        raise CheckpointError("bad magic")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}")
    header = json.loads(r.take(r.u32()).decode("utf-8"))
    cfg = ModelConfig(**header["config"])

    tensors: dict[str, Tensor] = {}
    trainable = []
    for _ in range(r.u32()):
        name = r.take(r.u16()).decode("utf-8")
        if r.u8():
            trainable.append(name)
        tensors[name] = Tensor(r.array())
    params = ParameterSet(tensors, trainable)

    state = AdamState(m={}, v={}, t=int(header.get("adam_t", 0)))
    for _ in range(r.u32()):
        name = r.take(r.u16()).decode("utf-8")
        state.m[name] = r.array()
        state.v[name] = r.array()
    if not state.m:
        state = AdamState.fresh(params)
        state.t = int(header.get("adam_t", 0))
    return cfg, params, state, header
