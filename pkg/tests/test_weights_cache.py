import struct

import numpy as np
import pytest

from mmder.cache import decode_clip, encode_clip, read_clip, write_clip
from mmder.errors import DataError, ShapeError
from mmder.model import ModelConfig, init_params
from mmder.weights import load_params, load_weights, parse_weights, save_params, save_weights


def sample_arrays(rng):
    return {"a.weight": rng.normal(size=(3, 4)).astype(np.float32), "b": rng.normal(size=5).astype(np.float32),
            "scalar": np.float32(2.5) * np.ones(())}


def test_weights_round_trip(tmp_path, rng):
    arrays = sample_arrays(rng)
    save_weights(tmp_path / "w.mmdw", arrays)
    back = load_weights(tmp_path / "w.mmdw")
    assert list(back) == list(arrays)
    for name in arrays:
        assert back[name].dtype == np.float32 and np.array_equal(back[name], arrays[name])


def test_weights_bit_exact_layout(tmp_path):
    save_weights(tmp_path / "w.mmdw", {"ab": np.array([[1.0, -2.0]], dtype=np.float32)})
    want = (b"MMDW" + struct.pack("<II", 1, 1) + struct.pack("<H", 2) + b"ab" + struct.pack("<B", 2)
            + struct.pack("<2I", 1, 2) + struct.pack("<2f", 1.0, -2.0))
    assert (tmp_path / "w.mmdw").read_bytes() == want


@pytest.mark.parametrize("mutate, match", [
    (lambda b: b[:-3], "truncated"),
    (lambda b: b"XXXX" + b[4:], "magic"),
    (lambda b: b + b"\x00", "trailing"),
    (lambda b: b[:4] + struct.pack("<I", 9) + b[8:], "version"),
])
def test_weights_corruption(tmp_path, rng, mutate, match):
    save_weights(tmp_path / "w.mmdw", sample_arrays(rng))
    with pytest.raises(DataError, match=match):
        parse_weights(mutate((tmp_path / "w.mmdw").read_bytes()))


def test_params_round_trip_and_shape_mismatch(tmp_path):
    cfg = ModelConfig.desk()
    params = init_params(cfg, seed=3)
    save_params(tmp_path / "m.mmdw", params)
    fresh = load_params(tmp_path / "m.mmdw", init_params(cfg, seed=9))
    for name in params:
        assert np.array_equal(fresh[name].data, params[name].data)
    other = init_params(ModelConfig.desk(num_classes=5))
    with pytest.raises(ShapeError, match="head"):
        load_params(tmp_path / "m.mmdw", other)


def test_clip_cache_round_trip(tmp_path, rng):
    vis, spec = rng.uniform(size=(4, 6, 5)), rng.uniform(size=(4, 6, 5))
    write_clip(tmp_path / "c.mmdc", vis, spec)
    v2, s2 = read_clip(tmp_path / "c.mmdc")
    assert np.array_equal(v2, vis.astype(np.float32)) and np.array_equal(s2, spec.astype(np.float32))
    assert (tmp_path / "c.mmdc").stat().st_size == 20 + 8 * 4 * 6 * 5


def test_clip_cache_errors(rng):
    buf = encode_clip(np.zeros((1, 2, 2)), np.zeros((1, 2, 2)))
    with pytest.raises(DataError, match="header"):
        decode_clip(buf[:10])
    with pytest.raises(DataError, match="magic"):
        decode_clip(b"NOPE" + buf[4:])
    with pytest.raises(DataError, match="expected"):
        decode_clip(buf + b"\x00")
    with pytest.raises(ValueError):
        encode_clip(np.zeros((1, 2, 2)), np.zeros((2, 2, 2)))
