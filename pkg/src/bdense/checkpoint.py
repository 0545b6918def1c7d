"""Versioned binary checkpoints for networks and their schedules.

Layout: magic ``BDNS``, u32 format version, u32 JSON length + UTF-8
metadata (network spec, schedule spec, provenance), u32 tensor count, then
per tensor a u16 name length + name, u32 ndim, u32 dims, and raw
little-endian float32 data. Round-trips are bitwise lossless.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import ContractError
from .network import ScoreNet
from .schedule import NoiseSchedule, build_schedule

MAGIC = b"BDNS"
FORMAT_VERSION = 1


def save_checkpoint(path, net: ScoreNet, schedule: NoiseSchedule,
                    provenance: dict | None = None) -> None:
    meta = {
        "network": net.spec(),
        "schedule": schedule.spec(),
        "branches": net.branches,
        "parameterization": net.parameterization,
        "provenance": provenance or {},
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    tensors = net.named_parameters()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<I", len(tensors)))
        for name, p in tensors:
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", p.data.ndim))
            fh.write(struct.pack(f"<{p.data.ndim}I", *p.data.shape))
            fh.write(np.ascontiguousarray(p.data, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[ScoreNet, NoiseSchedule, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    off = 0

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(blob):
            raise ContractError(f"{path}: truncated checkpoint")
        out = blob[off:off + n]
        off += n
        return out

    if take(4) != MAGIC:
        raise ContractError(f"{path} is not a checkpoint (bad magic)")
    version = struct.unpack("<I", take(4))[0]
    if version > FORMAT_VERSION:
        raise ContractError(
            f"{path} uses checkpoint format {version}; this build reads up to {FORMAT_VERSION}")
    meta_len = struct.unpack("<I", take(4))[0]
    meta = json.loads(take(meta_len).decode("utf-8"))

    net = ScoreNet.from_spec(meta["network"])
    loaded: dict[str, np.ndarray] = {}
    n_tensors = struct.unpack("<I", take(4))[0]
    for _ in range(n_tensors):
        name_len = struct.unpack("<H", take(2))[0]
        name = take(name_len).decode("utf-8")
        ndim = struct.unpack("<I", take(4))[0]
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(take(4 * count), dtype="<f4").reshape(shape)
        loaded[name] = np.ascontiguousarray(data, dtype=np.float32)

    for name, p in net.named_parameters():
        if name not in loaded:
            raise ContractError(f"{path}: checkpoint is missing tensor {name!r}")
        if loaded[name].shape != p.data.shape:
            raise ContractError(
                f"{path}: tensor {name!r} has shape {loaded[name].shape}, "
                f"expected {p.data.shape}")
        p.data = loaded[name].copy()

    sched_spec = dict(meta["schedule"])
    schedule = build_schedule(sched_spec.pop("kind"), sched_spec.pop("steps"), **sched_spec)
    return net, schedule, meta
