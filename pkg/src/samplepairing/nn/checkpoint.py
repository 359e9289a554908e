"""Checkpoint files.

A checkpoint is an uncompressed zip archive with fixed member timestamps,
so identical state always produces identical bytes. Members:

``meta.json``
    ``{"format": "samplepairing-checkpoint", "version": 1, "spec": ...,
    "dtype": ..., "adam": {"lr", "beta1", "beta2", "eps", "t"},
    "extra": {...}, "arrays": [member names in write order]}``
``param/<layer>.<name>.npy``
    trainable tensors (``W``, ``b``, ``gamma``, ``beta``)
``buffer/<layer>.running_{mean,var}.npy``
    batch-norm running statistics
``adam_m/<param>.npy``, ``adam_v/<param>.npy``
    Adam moment estimates (absent before the first step)

Arrays use the standard ``.npy`` format, so values round-trip bit-exactly.
"""

from __future__ import annotations

import io
import json
import zipfile

import numpy as np

from samplepairing.nn.network import Network, NetworkSpec
from samplepairing.nn.optim import Adam, AdamConfig

FORMAT = "samplepairing-checkpoint"
VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


class CheckpointError(ValueError):
    pass


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def _write(zf: zipfile.ZipFile, name: str, payload: bytes):
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    zf.writestr(info, payload)


def save_checkpoint(path, net: Network, opt: Adam | None = None, extra: dict | None = None) -> None:
    arrays = {}
    for k, v in net.named_params().items():
        arrays[f"param/{k}"] = v
    for k, v in net.buffers().items():
        arrays[f"buffer/{k}"] = v
    if opt is not None:
        for k in sorted(opt.m):
            arrays[f"adam_m/{k}"] = opt.m[k]
            arrays[f"adam_v/{k}"] = opt.v[k]
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "spec": net.spec.to_dict(),
        "dtype": net.dtype.name,
        "adam": None if opt is None else {**opt.config.to_dict(), "t": opt.t},
        "extra": extra or {},
        "arrays": list(arrays),
    }
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        _write(zf, "meta.json", json.dumps(meta, indent=1, sort_keys=True).encode())
        for name, arr in arrays.items():
            _write(zf, name + ".npy", _npy_bytes(arr))


def load_checkpoint(path) -> tuple[Network, Adam | None, dict]:
    """Return ``(network, optimizer or None, extra)``."""
    with zipfile.ZipFile(path) as zf:
        try:
            meta = json.loads(zf.read("meta.json"))
        except KeyError:
            raise CheckpointError(f"{path}: no meta.json member") from None
        if meta.get("format") != FORMAT or meta.get("version") != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint {meta.get('format')} v{meta.get('version')}")
        arrays = {
            name: np.lib.format.read_array(io.BytesIO(zf.read(name + ".npy")), allow_pickle=False)
            for name in meta["arrays"]
        }
    spec = NetworkSpec.from_dict(meta["spec"])
    net = Network(spec, np.random.default_rng(0), dtype=meta["dtype"])
    for k, p in net.named_params().items():
        src = arrays.get(f"param/{k}")
        if src is None or src.shape != p.shape:
            raise CheckpointError(f"{path}: parameter {k} missing or misshapen")
        p[...] = src
    net.set_buffers({k.split("/", 1)[1]: v for k, v in arrays.items() if k.startswith("buffer/")})
    opt = None
    if meta["adam"] is not None:
        a = dict(meta["adam"])
        t = a.pop("t")
        opt = Adam(AdamConfig(**a))
        opt.t = t
        for k, v in arrays.items():
            if k.startswith("adam_m/"):
                opt.m[k[7:]] = v.copy()
            elif k.startswith("adam_v/"):
                opt.v[k[7:]] = v.copy()
    return net, opt, meta["extra"]
