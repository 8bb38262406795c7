import numpy as np
import pytest
from PIL import Image

from mmder.config import RunConfig, coerce, dump_config, load_config, parse_config_text
from mmder.errors import ContractError, DataError
from mmder.manifest import COLUMNS, input_hash, load_clip, load_frames, read_manifest
from mmder.signal import Waveform, write_wav


def make_clip_files(root, name="c0", n=3, size=(6, 5)):
    frames = root / name
    frames.mkdir()
    for i in range(n):
        Image.fromarray(np.full(size, 10 * i, dtype=np.uint8)).save(frames / f"frame_{i + 1:03d}.png")
    write_wav(root / f"{name}.wav", Waveform(np.zeros(800), 8000))
    return f"{name},{name},{name}.wav,30,1,s0"


def write_manifest_text(root, lines):
    path = root / "manifest.csv"
    path.write_text(",".join(COLUMNS) + "\n" + "\n".join(lines) + "\n")
    return path


def test_manifest_reads_and_resolves_paths(tmp_path):
    path = write_manifest_text(tmp_path, [make_clip_files(tmp_path)])
    m = read_manifest(path, num_classes=2)
    assert len(m) == 1 and m.rows[0].frames_path == tmp_path / "c0"
    clip = load_clip(m.rows[0])
    assert clip.frames.shape == (3, 6, 5)
    assert np.allclose(clip.frames[:, 0, 0], [0, 10 / 255, 20 / 255])
    assert clip.audio.sample_rate == 16000 and len(clip.audio) == 1600


def test_frames_sorted_numerically(tmp_path):
    d = tmp_path / "f"
    d.mkdir()
    for i in (10, 2, 1):
        Image.fromarray(np.full((2, 2), i, dtype=np.uint8)).save(d / f"{i}.png")
    assert list(load_frames(d)[:, 0, 0] * 255) == pytest.approx([1, 2, 10])


@pytest.mark.parametrize("line, match", [
    ("c0,c0,c0.wav,30,1,s0", "duplicate"),
    ("c1,c0,c0.wav,30,7,s0", "label"),
    ("c1,nowhere,c0.wav,30,1,s0", "missing"),
    ("c1,c0,c0.wav,fast,1,s0", "numeric"),
    ("c1,c0,c0.wav,30", "columns"),
])
def test_manifest_errors(tmp_path, line, match):
    first = make_clip_files(tmp_path)
    with pytest.raises(DataError, match=match):
        read_manifest(write_manifest_text(tmp_path, [first, line]), num_classes=4)


def test_manifest_bad_header(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("a,b,c\n")
    with pytest.raises(DataError, match="header"):
        read_manifest(path)


def test_empty_manifest(tmp_path):
    assert len(read_manifest(write_manifest_text(tmp_path, []))) == 0


def test_input_hash_tracks_content(tmp_path):
    m = read_manifest(write_manifest_text(tmp_path, [make_clip_files(tmp_path)]))
    before = input_hash(m.rows[0])
    assert input_hash(m.rows[0]) == before
    Image.fromarray(np.full((6, 5), 99, dtype=np.uint8)).save(tmp_path / "c0" / "frame_001.png")
    assert input_hash(m.rows[0]) != before


def test_corrupt_audio_names_clip(tmp_path):
    m = read_manifest(write_manifest_text(tmp_path, [make_clip_files(tmp_path)]))
    (tmp_path / "c0.wav").write_bytes(b"garbage")
    with pytest.raises(DataError, match=r"\[c0\]"):
        load_clip(m.rows[0])


# -------------------------------------------------------------- config


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nstrategy = ffls\nepochs = 5  # inline\nlr = 0.001\nf_max = none\npad_last = true\n")
    cfg = load_config(path, epochs=7)
    assert cfg.strategy == "ffls" and cfg.epochs == 7 and cfg.lr == 0.001
    assert cfg.f_max is None and cfg.pad_last is True


def test_config_rejects_unknown_and_bad_values():
    with pytest.raises(ContractError, match="unknown"):
        parse_config_text("nonsense = 1")
    with pytest.raises(ContractError, match="int"):
        parse_config_text("epochs = 2.5")
    with pytest.raises(ContractError, match="boolean"):
        parse_config_text("pad_last = maybe")
    with pytest.raises(ContractError, match="duplicate"):
        parse_config_text("epochs = 1\nepochs = 2")
    with pytest.raises(ContractError, match="key = value"):
        parse_config_text("epochs 2")
    with pytest.raises(ContractError, match="strategy"):
        RunConfig(strategy="blend")
    with pytest.raises(ContractError, match="cube"):
        RunConfig(cube="2x8")


def test_coerce_types():
    assert coerce("lr", "1e-3") == 0.001 and isinstance(coerce("lr", "1"), float)
    assert coerce("epochs", "12") == 12
    assert coerce("manifest", '"a b.csv"') == "a b.csv"
    assert coerce("stop_at_train_war", "none") is None
    with pytest.raises(ContractError):
        coerce("epochs", "none")


def test_dump_config_round_trips():
    cfg = RunConfig(strategy="ofos", cube="2x8x8", f_max=7000.0, pad_last=True)
    assert RunConfig(**parse_config_text(dump_config(cfg))) == cfg


def test_model_overrides():
    cfg = RunConfig(preset="desk", depth=1, cube="1x4x4", num_classes=3).model_config()
    assert cfg.depth == 1 and cfg.cube == (1, 4, 4) and cfg.num_classes == 3 and cfg.embed_dim == 64
