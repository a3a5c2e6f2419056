"""GSMB container: round trips and corruption handling."""

import numpy as np
import pytest

from swingkit import gsmb
from swingkit.errors import FormatError


@pytest.mark.parametrize("dtype", [np.float32, np.float64, np.uint16])
def test_round_trip_preserves_bits(tmp_path, dtype):
    rng = np.random.default_rng(1)
    if np.issubdtype(dtype, np.floating):
        arr = rng.normal(size=(3, 4, 2)).astype(dtype)
    else:
        arr = rng.integers(0, 60000, size=(5, 2)).astype(dtype)
    path = tmp_path / "a.bin"
    gsmb.write_array(path, arr)
    back = gsmb.read_array(path)
    assert back.dtype == arr.dtype
    np.testing.assert_array_equal(back, arr)


def test_zero_dim_array(tmp_path):
    gsmb.write_array(tmp_path / "s.bin", np.float32(4.5))
    back = gsmb.read_array(tmp_path / "s.bin")
    assert back.shape == ()
    assert back == np.float32(4.5)


def test_corrupt_magic_is_format_error(tmp_path):
    path = tmp_path / "bad.bin"
    gsmb.write_array(path, np.zeros((2, 2), dtype=np.float32))
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="magic"):
        gsmb.read_array(path)


def test_truncated_payload_is_format_error(tmp_path):
    path = tmp_path / "short.bin"
    gsmb.write_array(path, np.zeros((4, 4), dtype=np.float32))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(FormatError, match="payload"):
        gsmb.read_array(path)


def test_unsupported_dtype_rejected(tmp_path):
    with pytest.raises(FormatError, match="int64"):
        gsmb.write_array(tmp_path / "x.bin", np.zeros(3, dtype=np.int64))
