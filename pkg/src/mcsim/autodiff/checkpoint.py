"""Parameter checkpoint format: little-endian binary, JSON-text header.

Layout: 8-byte LE u64 header length, UTF-8 JSON header, then raw 64-bit LE
values at the offsets named in the header. The header's ``version`` field
is mandatory.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import ContractViolation
from .tensor import Tensor

FORMAT_VERSION = 1


def save_checkpoint(path, params: dict, meta: dict | None = None):
    """Write named tensors (dict name -> Tensor) plus optional JSON metadata."""
    entries = []
    offset = 0
    blobs = []
    for name, p in params.items():
        arr = np.ascontiguousarray(np.asarray(p.data, dtype="<f8"))
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": arr.nbytes,
        })
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    header = {
        "version": FORMAT_VERSION,
        "dtype": "<f8",
        "tensors": entries,
        "meta": meta or {},
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path, requires_grad: bool = False):
    """Read a checkpoint back into (params dict name -> Tensor, meta dict)."""
    with open(path, "rb") as fh:
        (head_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(head_len).decode("utf-8"))
        if "version" not in header:
            raise ContractViolation("checkpoint header missing version field")
        if header.get("dtype", "<f8") != "<f8":
            raise ContractViolation(f"unsupported checkpoint dtype {header.get('dtype')}")
        body = fh.read()
    params = {}
    for entry in header["tensors"]:
        lo = entry["offset"]
        hi = lo + entry["nbytes"]
        arr = np.frombuffer(body[lo:hi], dtype="<f8").reshape(entry["shape"]).copy()
        params[entry["name"]] = Tensor(arr, requires_grad=requires_grad)
    return params, header.get("meta", {})
