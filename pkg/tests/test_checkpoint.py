"""Binary parameter container round-trips and failure modes."""

import numpy as np
import pytest

from errnet.checkpoint import (MAGIC, CheckpointError, load_checkpoint,
                               load_into, save_checkpoint)
from errnet.tensor import Tensor


def test_round_trip_is_bit_exact(tmp_path, rng):
    params = {
        "encoder.stem1.w": Tensor(rng.standard_normal((4, 3, 3, 3))),
        "encoder.stem1.b": Tensor(rng.standard_normal((1, 4, 1, 1))),
        "aspp.head.w": Tensor(rng.standard_normal((1, 8, 1, 1))),
    }
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, params)
    loaded = load_checkpoint(path)
    assert list(loaded) == list(params)
    for name in params:
        assert loaded[name].tobytes() == params[name].data.tobytes()


def test_save_twice_identical_bytes(tmp_path, rng):
    params = {"p": Tensor(rng.standard_normal((2, 2, 2, 2)))}
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(a, params)
    save_checkpoint(b, params)
    assert a.read_bytes() == b.read_bytes()


def test_magic_prefix(tmp_path, rng):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"p": Tensor(np.zeros((1, 1, 1, 1)))})
    assert path.read_bytes().startswith(MAGIC)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_truncated_data_reports_offset(tmp_path, rng):
    path = tmp_path / "t.ckpt"
    save_checkpoint(path, {"p": Tensor(rng.standard_normal((1, 1, 2, 2)))})
    blob = path.read_bytes()
    path.write_bytes(blob[:-9])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_load_into_shape_mismatch_names_parameter(tmp_path):
    path = tmp_path / "s.ckpt"
    save_checkpoint(path, {"conv.w": Tensor(np.zeros((1, 1, 3, 3)))})
    target = {"conv.w": Tensor(np.zeros((2, 1, 3, 3)))}
    with pytest.raises(CheckpointError, match="conv.w"):
        load_into(path, target)


def test_load_into_missing_parameter(tmp_path):
    path = tmp_path / "s.ckpt"
    save_checkpoint(path, {"a": Tensor(np.zeros((1, 1, 1, 1)))})
    target = {"a": Tensor(np.zeros((1, 1, 1, 1))), "b": Tensor(np.zeros((1, 1, 1, 1)))}
    with pytest.raises(CheckpointError, match="'b'"):
        load_into(path, target)
