"""Versioned, digest-protected checkpoint container and trainer bundles.

Container layout (all integers little-endian)::

    b"SCAFCKPT" | version u32 | header length u64 | header (UTF-8 JSON)
    | array bytes | SHA-256 of everything before the digest

The header holds free-form metadata plus an index of named arrays
(dtype, shape, byte offset).  Arrays are stored as little-endian float64,
int64 or uint8 regardless of the host byte order.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..student import ReplayBuffer, Transition
from ..teacher import CurriculumPhase
from .config import RunConfig
from .model import StateKey
from .trainer import Trainer, Window

MAGIC = b"SCAFCKPT"
VERSION = 1
_DTYPES = {"f8": "<f8", "i8": "<i8", "u1": "|u1"}


class CheckpointError(RuntimeError):
    pass


class CompatibilityError(CheckpointError):
    pass


def _canonical(a: np.ndarray) -> np.ndarray:
    kind = a.dtype.kind
    if kind == "f":
        return np.ascontiguousarray(a, dtype="<f8")
    if kind in "iu" and a.dtype.itemsize == 1 and kind == "u":
        return np.ascontiguousarray(a, dtype="|u1")
    if kind in "iub":
        return np.ascontiguousarray(a, dtype="<i8")
    raise CheckpointError(f"unsupported dtype {a.dtype}")


def save_container(path: str | Path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    index, blobs, offset = [], [], 0
    for name in sorted(arrays):
        a = _canonical(np.asarray(arrays[name]))
        raw = a.tobytes()
        index.append({"name": name, "dtype": a.dtype.str[1:], "shape": list(a.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": meta, "arrays": index}, sort_keys=True).encode("utf-8")
    body = MAGIC + struct.pack("<IQ", VERSION, len(header)) + header + b"".join(blobs)
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_container(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 12 + 32 or not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: digest mismatch (corrupted file)")
    version, hlen = struct.unpack_from("<IQ", body, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(f"{path}: version {version}, expected {VERSION}")
    start = len(MAGIC) + 12
    header = json.loads(body[start : start + hlen].decode("utf-8"))
    blob = body[start + hlen :]
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(_DTYPES[entry["dtype"]])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        a = np.frombuffer(blob, dtype=dtype, count=count, offset=entry["offset"])
        arrays[entry["name"]] = a.reshape(entry["shape"]).astype(dtype.newbyteorder("="))
    return header["meta"], arrays


# -- trainer bundles ----------------------------------------------------------

def _key_table(transitions: list[Transition], pending):
    streams: dict[int, int] = {}
    stream_list: list = []
    keys: dict[int, int] = {}
    key_list: list[StateKey] = []

    def key_id(k: StateKey) -> int:
        if id(k) not in keys:
            if id(k.stream) not in streams:
                streams[id(k.stream)] = len(stream_list)
                stream_list.append(k.stream)
            keys[id(k)] = len(key_list)
            key_list.append(k)
        return keys[id(k)]

    rows = [[key_id(t.s), t.a, t.r, -1 if t.s_next is None else key_id(t.s_next), t.terminal] for t in transitions]
    pend = None if pending is None else [key_id(pending[0]), pending[1], pending[2]]
    return rows, pend, key_list, stream_list, streams


def save_trainer(trainer: Trainer, path: str | Path) -> None:
    """Everything needed to resume ``trainer`` exactly."""
    rows, pend, key_list, stream_list, stream_ids = _key_table(trainer.buffer.items(), trainer.pending)
    features = [k.features for k in key_list if k.features is not None]
    w = trainer.window
    meta = {
        "config": trainer.config.to_dict(),
        "restart": trainer.restart,
        "lr": trainer.lr,
        "vocab": trainer.task.vocab.tokens(),
        "labels": list(trainer.labels),
        "counters": {
            "steps": trainer.steps, "episodes": trainer.episodes, "updates": trainer.updates,
            "syncs": trainer.syncs, "epoch": trainer.epoch, "position": trainer.position,
            "eligible_turns": trainer.eligible_turns, "teacher_turns": trainer.teacher_turns,
        },
        "adam": {"step": trainer.adam.step, "lr": trainer.adam.lr, "beta1": trainer.adam.beta1,
                 "beta2": trainer.adam.beta2, "eps": trainer.adam.eps, "weight_decay": trainer.adam.weight_decay},
        "rng": trainer.rng.bit_generator.state,
        "curriculum": {"phase": trainer.curriculum.phase.value, "history": trainer.curriculum.history},
        "best": None if trainer.best is None else {k: trainer.best[k] for k in ("val", "test", "step")},
        "window": {"losses": w.losses, "memory": w.memory, "asked": w.asked, "correct": w.correct,
                   "eligible": w.eligible, "teacher_used": w.teacher_used, "returns": w.returns},
        "buffer": {
            "capacity": trainer.buffer.capacity,
            "streams": [[list(s) for s in stream] for stream in stream_list],
            "keys": [[stream_ids[id(k.stream)], k.n_mem, list(k.current), list(k.question),
                      k.features is not None] for k in key_list],
            "transitions": rows,
            "pending": pend,
        },
    }
    arrays = {}
    for p in trainer.net.parameters():
        arrays[f"param/{p.name}"] = p.data
    for p in trainer.target.parameters():
        arrays[f"target/{p.name}"] = p.data
    for name in trainer.adam.m:
        arrays[f"adam.m/{name}"] = trainer.adam.m[name]
        arrays[f"adam.v/{name}"] = trainer.adam.v[name]
    if trainer.best is not None:
        for name, a in trainer.best["arrays"].items():
            arrays[f"best/{name}"] = a
    arrays["order"] = np.asarray(trainer.order, dtype=np.int64)
    if features:
        arrays["buffer.features"] = np.stack(features).astype(np.uint8)
    save_container(path, meta, arrays)


def _prefixed(arrays: dict[str, np.ndarray], prefix: str) -> dict[str, np.ndarray]:
    return {k[len(prefix) :]: v for k, v in arrays.items() if k.startswith(prefix)}


def load_trainer(path: str | Path, task=None) -> Trainer:
    """Rebuild a trainer; the task is regenerated from the stored config
    unless supplied, and must match the stored vocabulary and actions."""
    from .tasks import make_task

    meta, arrays = load_container(path)
    config = RunConfig.from_dict(meta["config"])
    task = task if task is not None else make_task(config)
    if task.vocab.tokens() != meta["vocab"]:
        raise CompatibilityError("vocabulary differs from the checkpoint's")
    if list(task.labels) != meta["labels"]:
        raise CompatibilityError("action set differs from the checkpoint's")
    trainer = Trainer(config, task, restart=meta["restart"], lr=meta["lr"])
    trainer.net.load_arrays(_prefixed(arrays, "param/"))
    trainer.target.load_arrays(_prefixed(arrays, "target/"))
    for k, v in meta["adam"].items():
        setattr(trainer.adam, k, v)
    trainer.adam.m = {k: v.copy() for k, v in _prefixed(arrays, "adam.m/").items()}
    trainer.adam.v = {k: v.copy() for k, v in _prefixed(arrays, "adam.v/").items()}
    c = meta["counters"]
    trainer.steps, trainer.episodes, trainer.updates = c["steps"], c["episodes"], c["updates"]
    trainer.syncs, trainer.epoch, trainer.position = c["syncs"], c["epoch"], c["position"]
    trainer.eligible_turns, trainer.teacher_turns = c["eligible_turns"], c["teacher_turns"]
    trainer.order = arrays["order"]
    trainer.rng.bit_generator.state = meta["rng"]
    trainer.curriculum.phase = CurriculumPhase(meta["curriculum"]["phase"])
    trainer.curriculum.history = list(meta["curriculum"]["history"])
    if meta["best"] is not None:
        trainer.best = dict(meta["best"], arrays=_prefixed(arrays, "best/"))
    trainer.window = Window(**meta["window"])

    buf = meta["buffer"]
    streams = [[tuple(s) for s in stream] for stream in buf["streams"]]
    feats = iter(arrays.get("buffer.features", []))
    keys = [
        StateKey(streams[si], n_mem, tuple(cur), tuple(q), next(feats) if has_f else None)
        for si, n_mem, cur, q, has_f in buf["keys"]
    ]
    trainer.buffer = ReplayBuffer(buf["capacity"])
    for s, a, r, s_next, terminal in buf["transitions"]:
        trainer.buffer.add(Transition(keys[s], a, r, None if s_next < 0 else keys[s_next], terminal))
    if buf["pending"] is not None:
        s, a, r = buf["pending"]
        trainer.pending = (keys[s], a, r)
    return trainer
