"""QEN1 binary persistence: bitwise round-trips and corruption detection."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadenhance.checkpoint import (MAGIC, fnv1a64, load_checkpoint,
                                    load_into_model, save_checkpoint)
from quadenhance.errors import CheckpointError, ChecksumError
from quadenhance.models import MLP, MLPConfig
from quadenhance.rng import Rng


def _params(seed=0, dtype=np.float64):
    rng = Rng(seed)
    return {
        "W": rng.uniform(12, -5, 5).reshape(3, 4).astype(dtype),
        "b": rng.split(1).uniform(3, -1, 1).astype(dtype),
        "scalar": np.asarray(rng.split(2).uniform(1, -1, 1)[0], dtype=dtype).reshape(()),
    }


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_roundtrip_bitwise(tmp_path, dtype):
    params = _params(dtype=dtype)
    path = tmp_path / "m.qen1"
    save_checkpoint(path, params)
    back = load_checkpoint(path)
    assert list(back) == list(params)
    for k in params:
        assert back[k].shape == params[k].shape
        assert back[k].dtype == params[k].dtype
        assert back[k].tobytes() == params[k].tobytes()


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_roundtrip_random_values(tmp_path_factory, seed):
    tmp = tmp_path_factory.mktemp("ckpt")
    params = _params(seed=seed)
    path = tmp / "m.qen1"
    save_checkpoint(path, params)
    back = load_checkpoint(path)
    assert all(back[k].tobytes() == params[k].tobytes() for k in params)


def test_truncated_file_is_checksum_error(tmp_path):
    path = tmp_path / "m.qen1"
    save_checkpoint(path, _params())
    blob = path.read_bytes()
    path.write_bytes(blob[:-5])
    with pytest.raises(ChecksumError):
        load_checkpoint(path)


def test_flipped_byte_is_checksum_error(tmp_path):
    path = tmp_path / "m.qen1"
    save_checkpoint(path, _params())
    blob = bytearray(path.read_bytes())
    blob[20] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(ChecksumError):
        load_checkpoint(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "m.qen1"
    body = b"NOPE" + struct.pack("<I", 1) + struct.pack("<I", 0)
    path.write_bytes(body + struct.pack("<Q", fnv1a64(body)))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_unknown_version_rejected(tmp_path):
    path = tmp_path / "m.qen1"
    body = MAGIC + struct.pack("<I", 99) + struct.pack("<I", 0)
    path.write_bytes(body + struct.pack("<Q", fnv1a64(body)))
    with pytest.raises(CheckpointError, match="version 99"):
        load_checkpoint(path)


def test_fnv1a64_known_vectors():
    # standard FNV-1a test values
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C


class TestModelRoundTrip:
    def test_forward_identical_after_reload(self, tmp_path):
        cfg = MLPConfig(layer_dims=(4, 6, 3), seed=8, dtype="f32")
        model = MLP(cfg)
        x = Rng(9).uniform(8, -1, 1).reshape(2, 4).astype(np.float32)
        before = model.forward(x)
        path = tmp_path / "m.qen1"
        save_checkpoint(path, model.parameters())
        fresh = MLP(cfg)
        for arr in fresh.parameters().values():
            arr += 1.0          # scribble so the load visibly matters
        load_into_model(fresh, path)
        assert fresh.forward(x).tobytes() == before.tobytes()

    def test_shape_mismatch_rejected(self, tmp_path):
        path = tmp_path / "m.qen1"
        save_checkpoint(path, MLP(MLPConfig(layer_dims=(4, 6, 3), seed=0)).parameters())
        other = MLP(MLPConfig(layer_dims=(4, 5, 3), seed=0))
        with pytest.raises(CheckpointError, match="shape mismatch"):
            load_into_model(other, path)

    def test_plain_checkpoint_into_enhanced_model_needs_flag(self, tmp_path):
        cfg = MLPConfig(layer_dims=(3, 4, 2), seed=5)
        plain = MLP(cfg.plain())
        path = tmp_path / "plain.qen1"
        save_checkpoint(path, plain.parameters())
        enhanced = MLP(cfg)
        with pytest.raises(CheckpointError, match="missing"):
            load_into_model(enhanced, path)
        load_into_model(enhanced, path, allow_missing_lambda=True)
        for name, arr in enhanced.parameters().items():
            if "lam[" in name:
                assert np.all(arr == 0.0)
        x = Rng(6).uniform(3, -1, 1)
        assert enhanced.forward(x).tobytes() == plain.forward(x).tobytes()

    def test_extra_checkpoint_params_rejected(self, tmp_path):
        cfg = MLPConfig(layer_dims=(3, 4, 2), seed=5)
        enhanced = MLP(cfg)
        path = tmp_path / "qe.qen1"
        save_checkpoint(path, enhanced.parameters())
        plain = MLP(cfg.plain())
        with pytest.raises(CheckpointError, match="lacks"):
            load_into_model(plain, path)
