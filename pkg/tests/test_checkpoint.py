"""Checkpoint container: byte layout and round trips."""

import struct

import numpy as np
import pytest

from lares.autodiff import load_checkpoint, save_checkpoint
from lares.errors import ContractError


def test_roundtrip_preserves_values_order_and_dtype(tmp_path, rng):
    params = {
        "conv.weight": rng.standard_normal((4, 3, 3, 3)).astype(np.float32),
        "conv.bias": rng.standard_normal(4).astype(np.float32),
        "norm.gamma": rng.standard_normal(8),
    }
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, params)
    back = load_checkpoint(path)
    assert list(back) == list(params)
    for name in params:
        assert back[name].dtype == params[name].dtype
        assert np.array_equal(back[name], params[name])


def test_header_layout(tmp_path):
    path = tmp_path / "one.ckpt"
    save_checkpoint(path, {"w": np.arange(6, dtype=np.float32).reshape(2, 3)})
    raw = path.read_bytes()
    assert raw[:8] == b"LARESCK1"
    version, count = struct.unpack_from("<II", raw, 8)
    assert (version, count) == (1, 1)
    (nlen,) = struct.unpack_from("<H", raw, 16)
    assert raw[18:18 + nlen] == b"w"
    code, ndim = struct.unpack_from("<BB", raw, 18 + nlen)
    assert (code, ndim) == (0, 2)
    assert struct.unpack_from("<2I", raw, 20 + nlen) == (2, 3)
    data = np.frombuffer(raw, dtype="<f4", count=6, offset=28 + nlen)
    assert np.array_equal(data, np.arange(6, dtype=np.float32))


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 16)
    with pytest.raises(ContractError):
        load_checkpoint(path)


def test_non_float_dtype_rejected(tmp_path):
    with pytest.raises(ContractError):
        save_checkpoint(tmp_path / "x.ckpt", {"a": np.arange(3)})
