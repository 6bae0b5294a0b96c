"""RSB1 self-describing binary tensor container.

Layout::

    b"RSB1"
    uint32 little-endian  header length in bytes (N)
    N bytes               UTF-8 JSON header
    zero padding          up to the next multiple of 64 (from file start)
    tensor payloads       C-order, in header order, each starting on a
                          64-byte boundary

The header always carries ``"format": "RSB1"`` and a ``"tensors"`` list of
``{"name", "dtype", "shape"}`` entries (dtype is a little-endian NumPy type
string such as ``"<f4"``). Everything else in the header is free-form
metadata. JSON is written with sorted keys and no insignificant whitespace,
so equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

__all__ = ["MAGIC", "ALIGN", "TensorFileError", "encode", "decode", "write", "read"]

MAGIC = b"RSB1"
ALIGN = 64
_DTYPES = {"<f4", "<f8", "<i4", "<i8", "|u1"}


class TensorFileError(ValueError):
    """Malformed or unsupported tensor file."""


def _aligned(n: int) -> int:
    return -(-n // ALIGN) * ALIGN


def dumps_header(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def encode(header: dict, tensors: dict) -> bytes:
    """Serialize ``tensors`` (name -> array, in insertion order) with ``header``."""
    header = dict(header)
    entries = []
    arrays = []
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        dtype = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
        code = np.dtype(dtype).str
        if code not in _DTYPES:
            raise TensorFileError(f"tensor {name!r} has unsupported dtype {arr.dtype}")
        arrays.append(np.ascontiguousarray(arr, dtype=code))
        entries.append({"name": name, "dtype": code, "shape": list(arr.shape)})
    header["format"] = "RSB1"
    header["tensors"] = entries
    head = dumps_header(header)

    parts = [MAGIC, struct.pack("<I", len(head)), head]
    offset = len(MAGIC) + 4 + len(head)
    for arr in arrays:
        start = _aligned(offset)
        parts.append(b"\0" * (start - offset))
        raw = arr.tobytes(order="C")
        parts.append(raw)
        offset = start + len(raw)
    return b"".join(parts)


def decode(blob: bytes):
    """Inverse of :func:`encode`; returns ``(header, tensors)``."""
    if blob[:4] != MAGIC:
        raise TensorFileError("missing RSB1 magic")
    if len(blob) < 8:
        raise TensorFileError("truncated header length")
    (n,) = struct.unpack("<I", blob[4:8])
    try:
        header = json.loads(blob[8:8 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TensorFileError(f"corrupt header: {exc}") from exc
    tensors = {}
    offset = 8 + n
    for entry in header.get("tensors", []):
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        start = _aligned(offset)
        end = start + count * dtype.itemsize
        if end > len(blob):
            raise TensorFileError(f"tensor {entry['name']!r} runs past end of file")
        tensors[entry["name"]] = np.frombuffer(blob, dtype=dtype, count=count, offset=start).reshape(shape)
        offset = end
    return header, tensors


def write(path, header: dict, tensors: dict) -> bytes:
    """Atomically write a container file (temp file in the same directory, then rename)."""
    blob = encode(header, tensors)
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        # mkstemp creates 0600; apply the usual umask-derived mode instead
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return blob


def read(path):
    with open(path, "rb") as fh:
        return decode(fh.read())
