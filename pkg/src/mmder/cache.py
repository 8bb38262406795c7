"""Per-clip binary cache of aligned frames and spectrograms.

Layout (little-endian)::

    b"MMDC"  u32 version (=1)  u32 T  u32 H  u32 W
    f32 visual[T][H][W]  f32 spectrograms[T][H][W]
"""

import struct

import numpy as np

from .errors import DataError

MAGIC = b"MMDC"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def encode_clip(visual, specs):
    visual = np.asarray(visual)
    specs = np.asarray(specs)
    if visual.shape != specs.shape or visual.ndim != 3:
        raise ValueError(f"visual {visual.shape} and spectrograms {specs.shape} must be equal (T, H, W)")
    t, h, w = visual.shape
    return b"".join(
        [
            _HEADER.pack(MAGIC, VERSION, t, h, w),
            np.ascontiguousarray(visual, dtype="<f4").tobytes(),
            np.ascontiguousarray(specs, dtype="<f4").tobytes(),
        ]
    )


def decode_clip(buf, source="<buffer>"):
    if len(buf) < _HEADER.size:
        raise DataError(f"{source}: truncated cache header")
    magic, version, t, h, w = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise DataError(f"{source}: not a clip cache file (bad magic)")
    if version != VERSION:
        raise DataError(f"{source}: unsupported cache version {version}")
    n = t * h * w
    expected = _HEADER.size + 8 * n
    if len(buf) != expected:
        raise DataError(f"{source}: expected {expected} bytes, found {len(buf)}")
    values = np.frombuffer(buf, dtype="<f4", offset=_HEADER.size).astype(np.float32)
    return values[:n].reshape(t, h, w), values[n:].reshape(t, h, w)


def write_clip(path, visual, specs):
    with open(path, "wb") as fh:
        fh.write(encode_clip(visual, specs))


def read_clip(path):
    with open(path, "rb") as fh:
        return decode_clip(fh.read(), source=str(path))
