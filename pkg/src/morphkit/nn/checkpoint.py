"""Model checkpoint container.

Layout: magic b"MSKT", version byte 1, u32-LE header length, UTF-8 JSON
header, then raw float32-LE tensor data in header order.  The header carries
a "meta" object (hyperparameters, vocabularies) and a "tensors" list of
[name, shape] pairs.  JSON is serialized with sorted keys and no whitespace
so identical models produce identical bytes.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import DataError

MAGIC = b"MSKT"
VERSION = 1


def save_checkpoint(path: str, meta: dict, tensors: list[tuple[str, np.ndarray]]) -> None:
    header = {
        "meta": meta,
        "tensors": [[name, list(arr.shape)] for name, arr in tensors],
    }
    blob = json.dumps(header, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode(
        "utf-8"
    )
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(bytes([VERSION]))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for _, arr in tensors:
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path: str) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if len(blob) < 9 or blob[:4] != MAGIC:
        raise DataError(f"{path}: not a model checkpoint (bad magic)")
    if blob[4] != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {blob[4]}")
    (hlen,) = struct.unpack_from("<I", blob, 5)
    if 9 + hlen > len(blob):
        raise DataError(f"{path}: truncated header")
    try:
        header = json.loads(blob[9 : 9 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: bad header: {exc}") from None
    offset = 9 + hlen
    tensors: dict[str, np.ndarray] = {}
    for name, shape in header["tensors"]:
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if offset + nbytes > len(blob):
            raise DataError(f"{path}: truncated tensor {name}")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        tensors[name] = arr.reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise DataError(f"{path}: {len(blob) - offset} trailing bytes")
    return header["meta"], tensors
