"""``TNS1`` tensor records and named-tensor containers.

A record is the magic ``TNS1``, a little-endian u32 rank, one u64 per
extent, then the values as little-endian 32-bit floats. A container is a
one-line JSON header (tensor names plus caller metadata) followed by one
record per name, in header order.
"""

import json
import struct
from pathlib import Path
from typing import BinaryIO, Dict, Mapping, Tuple, Union

import numpy as np

from src.utils.exceptions import TensorFormatError

MAGIC = b"TNS1"
_STORAGE = np.dtype("<f4")

PathLike = Union[str, Path]


def write_tensor(stream: BinaryIO, array: np.ndarray) -> None:
    array = np.asarray(array)
    stream.write(MAGIC)
    stream.write(struct.pack("<I", array.ndim))
    stream.write(struct.pack(f"<{array.ndim}Q", *array.shape))
    stream.write(np.ascontiguousarray(array, dtype=_STORAGE).tobytes())


def read_tensor(stream: BinaryIO) -> np.ndarray:
    """Read one record.

    Raises:
        TensorFormatError: On a bad magic or a truncated record
    """
    magic = stream.read(4)
    if magic != MAGIC:
        raise TensorFormatError(f"bad tensor magic {magic!r}")
    rank_bytes = stream.read(4)
    if len(rank_bytes) != 4:
        raise TensorFormatError("truncated tensor header")
    (rank,) = struct.unpack("<I", rank_bytes)
    extent_bytes = stream.read(8 * rank)
    if len(extent_bytes) != 8 * rank:
        raise TensorFormatError("truncated tensor extents")
    shape = struct.unpack(f"<{rank}Q", extent_bytes)
    count = int(np.prod(shape, dtype=np.int64))
    payload = stream.read(count * _STORAGE.itemsize)
    if len(payload) != count * _STORAGE.itemsize:
        raise TensorFormatError("truncated tensor payload")
    return np.frombuffer(payload, dtype=_STORAGE).reshape(shape).copy()


def save_tensor(path: PathLike, array: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        write_tensor(f, array)


def load_tensor(path: PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        return read_tensor(f)


def save_named(path: PathLike, tensors: Mapping[str, np.ndarray], header: Mapping = None) -> None:
    """Write a named container."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = dict(header or {})
    meta["tensors"] = list(tensors)
    with open(path, "wb") as f:
        f.write(json.dumps(meta, sort_keys=True).encode("utf-8") + b"\n")
        for array in tensors.values():
            write_tensor(f, array)


def load_named(path: PathLike) -> Tuple[Dict, Dict[str, np.ndarray]]:
    """Read a named container.

    Returns:
        Header dictionary and tensors keyed by name, in header order
    """
    with open(path, "rb") as f:
        try:
            header = json.loads(f.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise TensorFormatError(f"{path}: unreadable container header") from e
        tensors = {name: read_tensor(f) for name in header.get("tensors", [])}
    return header, tensors
