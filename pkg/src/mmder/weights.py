"""Weight file reader/writer.

Layout (little-endian)::

    b"MMDW"  u32 version (=1)  u32 tensor_count
    per tensor:
        u16 name_length  name (UTF-8)  u8 rank  u32 dims[rank]
        f32 values[prod(dims)]  (row-major)
"""

import struct
from collections import OrderedDict

import numpy as np

from .errors import DataError

MAGIC = b"MMDW"
VERSION = 1


def save_weights(path, arrays):
    """Write a name -> array mapping; values are stored as float32."""
    chunks = [MAGIC, struct.pack("<II", VERSION, len(arrays))]
    for name, value in arrays.items():
        value = np.asarray(value)
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype="<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_weights(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    return parse_weights(buf, source=str(path))


def parse_weights(buf, source="<buffer>"):
    view = memoryview(buf)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise DataError(f"{source}: truncated weight file at byte {pos}")
        out = view[pos : pos + n]
        pos += n
        return out

    if bytes(take(4)) != MAGIC:
        raise DataError(f"{source}: not a weight file (bad magic)")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise DataError(f"{source}: unsupported weight file version {version}")
    arrays = OrderedDict()
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = bytes(take(name_len)).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(dims, dtype=np.int64))
        values = np.frombuffer(take(4 * n), dtype="<f4").astype(np.float32)
        arrays[name] = values.reshape(dims)
    if pos != len(view):
        raise DataError(f"{source}: {len(view) - pos} trailing bytes after {count} tensors")
    return arrays


def save_params(path, params):
    save_weights(path, params.state_dict())


def load_params(path, params):
    """Load a weight file into ``params`` (exact name and shape match)."""
    params.load_state_dict(load_weights(path))
    return params
