"""GSMB: a tiny binary container for one dense array per file.

Layout (all little-endian):

    offset  size        field
    0       4           magic b"GSMB"
    4       1           version, currently 1
    5       1           dtype code: 0 = float32, 1 = uint16, 2 = float64
    6       1           ndim
    7       1           reserved (0)
    8       4 * ndim    shape, one u32 per dimension
    ...     payload     row-major array data

Example, a float32 array of shape (2, 3) holding 1..6:

    47 53 4d 42 01 00 02 00  02 00 00 00 03 00 00 00   GSMB.... ........
    00 00 80 3f 00 00 00 40  00 00 40 40 00 00 80 40   ...?...@ ..@@...@
    00 00 a0 40 00 00 c0 40                            ...@...@
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"GSMB"
VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<u2"), 2: np.dtype("<f8")}
_CODE_FOR_KIND = {"float32": 0, "uint16": 1, "float64": 2}


def dtype_code(dtype) -> int:
    """Return the GSMB code for a numpy dtype, or raise FormatError."""
    name = np.dtype(dtype).name
    if name not in _CODE_FOR_KIND:
        raise FormatError(f"dtype {name} is not representable in GSMB "
                          f"(supported: {sorted(_CODE_FOR_KIND)})")
    return _CODE_FOR_KIND[name]


def write_array(path, arr: np.ndarray) -> None:
    """Write one array to `path` in GSMB format."""
    arr = np.asarray(arr, order="C")
    code = dtype_code(arr.dtype)
    if arr.ndim > 255:
        raise FormatError(f"{path}: ndim {arr.ndim} exceeds GSMB limit")
    header = MAGIC + struct.pack("<BBBB", VERSION, code, arr.ndim, 0)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = arr.astype(_DTYPE_CODES[code], copy=False).tobytes(order="C")
    Path(path).write_bytes(header + payload)


def read_array(path) -> np.ndarray:
    """Read one GSMB array from `path`; raises FormatError on any corruption."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc})") from exc
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, code, ndim, _reserved = struct.unpack("<BBBB", raw[4:8])
    if version != VERSION:
        raise FormatError(f"{path}: unsupported GSMB version {version}")
    if code not in _DTYPE_CODES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    if len(raw) < 8 + 4 * ndim:
        raise FormatError(f"{path}: truncated shape block")
    shape = struct.unpack(f"<{ndim}I", raw[8:8 + 4 * ndim])
    dtype = _DTYPE_CODES[code]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    payload = raw[8 + 4 * ndim:]
    if len(payload) != expected:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, "
                          f"expected {expected} for shape {shape}")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
