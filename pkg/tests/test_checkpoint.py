import json
import struct

import numpy as np
import pytest

from morphkit.errors import DataError
from morphkit.nn.checkpoint import MAGIC, VERSION, load_checkpoint, save_checkpoint


def _tensors():
    rng = np.random.default_rng(0)
    return [
        ("layer.W", rng.normal(size=(3, 4)).astype(np.float32)),
        ("layer.b", rng.normal(size=(4,)).astype(np.float32)),
    ]


def test_container_layout(tmp_path):
    path = str(tmp_path / "m.mskt")
    save_checkpoint(path, {"dim": 4, "vocab": ["a", "b"]}, _tensors())
    blob = open(path, "rb").read()
    assert blob[:4] == MAGIC == b"MSKT"
    assert blob[4] == VERSION == 1
    (hlen,) = struct.unpack_from("<I", blob, 5)
    header = json.loads(blob[9 : 9 + hlen].decode("utf-8"))
    assert header["tensors"] == [["layer.W", [3, 4]], ["layer.b", [4]]]
    assert len(blob) == 9 + hlen + 4 * (12 + 4)


def test_roundtrip_exact(tmp_path):
    path = str(tmp_path / "m.mskt")
    tensors = _tensors()
    save_checkpoint(path, {"k": 1}, tensors)
    meta, loaded = load_checkpoint(path)
    assert meta == {"k": 1}
    for name, arr in tensors:
        assert loaded[name].tobytes() == arr.tobytes()


def test_identical_saves_are_byte_identical(tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    save_checkpoint(a, {"z": 1, "a": 2}, _tensors())
    save_checkpoint(b, {"a": 2, "z": 1}, _tensors())
    assert open(a, "rb").read() == open(b, "rb").read()


def test_bad_magic(tmp_path):
    path = tmp_path / "x"
    path.write_bytes(b"XXXX\x01\x00\x00\x00\x00")
    with pytest.raises(DataError, match="magic"):
        load_checkpoint(str(path))


def test_truncated_tensor(tmp_path):
    path = str(tmp_path / "m.mskt")
    save_checkpoint(path, {}, _tensors())
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-4])
    with pytest.raises(DataError, match="truncated"):
        load_checkpoint(path)


def test_trailing_bytes(tmp_path):
    path = str(tmp_path / "m.mskt")
    save_checkpoint(path, {}, _tensors())
    with open(path, "ab") as f:
        f.write(b"\x00")
    with pytest.raises(DataError, match="trailing"):
        load_checkpoint(path)
