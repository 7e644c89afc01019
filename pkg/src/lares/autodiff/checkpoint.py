"""Binary checkpoint container for named parameter arrays.

Layout (all integers little-endian):

    offset 0   magic            8 bytes  b"LARESCK1"
    offset 8   format version   u32      currently 1
    offset 12  tensor count     u32
    then per tensor, back to back:
        name length   u16
        name          UTF-8 bytes
        dtype code    u8   (0 = f32, 1 = f64)
        ndim          u8
        dims          ndim * u32
        data          raw little-endian values, row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from lares.errors import ContractError

MAGIC = b"LARESCK1"
VERSION = 1

_DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray]) -> None:
    """Write named arrays in insertion order."""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(params)))
        for name, arr in params.items():
            arr = np.ascontiguousarray(arr)
            dt = arr.dtype.newbyteorder("<")
            if dt not in _DTYPE_CODES:
                raise ContractError(f"checkpoint supports f32/f64 only, got {arr.dtype} for {name!r}")
            nb = name.encode("utf-8")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<BB", _DTYPE_CODES[dt], arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.astype(dt, copy=False).tobytes())


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    """Read a checkpoint back into {name: array}, preserving order."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != MAGIC:
        raise ContractError(f"{path} is not a checkpoint (bad magic)")
    version, count = struct.unpack_from("<II", raw, 8)
    if version != VERSION:
        raise ContractError(f"unsupported checkpoint version {version}")
    off = 16
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off:off + nlen].decode("utf-8")
        off += nlen
        code, ndim = struct.unpack_from("<BB", raw, off)
        off += 2
        shape = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        dt = _CODE_DTYPES[code]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        arr = np.frombuffer(raw, dtype=dt, count=nbytes // dt.itemsize, offset=off)
        off += nbytes
        out[name] = arr.reshape(shape).copy()
    return out
