import numpy as np
import pytest

from rankspec import tensorfile
from rankspec.tensorfile import ALIGN, MAGIC, TensorFileError


def test_roundtrip_and_layout(tmp_path):
    tensors = {
        "a": np.arange(7, dtype="<f4"),
        "b": np.arange(6, dtype="<i8").reshape(2, 3),
        "c": np.array([[1.5]], dtype="<f8"),
        "d": np.arange(3, dtype="|u1"),
    }
    blob = tensorfile.write(tmp_path / "t.rsb", {"note": "x"}, tensors)
    assert blob[:4] == MAGIC
    header, back = tensorfile.read(tmp_path / "t.rsb")
    assert header["format"] == "RSB1" and header["note"] == "x"
    assert [e["name"] for e in header["tensors"]] == ["a", "b", "c", "d"]
    for k, v in tensors.items():
        np.testing.assert_array_equal(back[k], v)
        assert back[k].dtype == v.dtype
    # every payload starts on a 64-byte boundary
    n = int.from_bytes(blob[4:8], "little")
    offset = 8 + n
    for e in header["tensors"]:
        start = -(-offset // ALIGN) * ALIGN
        assert start % ALIGN == 0
        size = int(np.prod(e["shape"])) * np.dtype(e["dtype"]).itemsize
        assert blob[start:start + size] == tensors[e["name"]].tobytes()
        offset = start + size
    assert offset == len(blob)


def test_deterministic_bytes():
    t = {"x": np.ones((3, 3), "<f4")}
    assert tensorfile.encode({"b": 1, "a": 2}, t) == tensorfile.encode({"a": 2, "b": 1}, t)


def test_big_endian_input_is_stored_little_endian():
    blob = tensorfile.encode({}, {"x": np.arange(4, dtype=">f4")})
    _, t = tensorfile.decode(blob)
    assert t["x"].dtype.str == "<f4"
    np.testing.assert_array_equal(t["x"], [0, 1, 2, 3])


def test_errors():
    with pytest.raises(TensorFileError):
        tensorfile.decode(b"NOPE" + bytes(10))
    with pytest.raises(TensorFileError):
        tensorfile.encode({}, {"x": np.zeros(2, dtype=np.complex128)})
    blob = tensorfile.encode({}, {"x": np.zeros(100, "<f8")})
    with pytest.raises(TensorFileError):
        tensorfile.decode(blob[:-8])
    with pytest.raises(ValueError):
        tensorfile.encode({"bad": float("nan")}, {})
