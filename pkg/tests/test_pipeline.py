import shutil

import numpy as np
import pytest
from PIL import Image

from mmder.config import RunConfig
from mmder.errors import DataError
from mmder.manifest import read_manifest
from mmder.pipeline import (
    comparison_table,
    ComparisonRow,
    fused_samples,
    load_aligned,
    preprocess,
    sampling_plan,
    token_layout_map,
)


def tiny_cfg(corpus, tmp_path, **kw):
    return RunConfig(manifest=str(corpus / "manifest.csv"), cache_dir=str(tmp_path / "cache"),
                     out_dir=str(tmp_path / "out"), num_classes=2, **kw)


def test_sampling_plan_per_strategy():
    cfg = RunConfig()
    assert (sampling_plan(cfg, "cfas").count, sampling_plan(cfg, "cfas").step) == (16, 6)
    assert (sampling_plan(cfg, "cfas").height, sampling_plan(cfg, "cfas").width) == (16, 32)
    assert (sampling_plan(cfg, "fslf").count, sampling_plan(cfg, "fslf").step) == (8, 12)
    assert sampling_plan(cfg, "ffls").key() == sampling_plan(cfg, "rfas").key()
    assert sampling_plan(cfg, "ffls").key() != sampling_plan(RunConfig(n_mels=64), "ffls").key()


def test_preprocess_is_idempotent(tiny_corpus, tmp_path):
    cfg = tiny_cfg(tiny_corpus, tmp_path)
    manifest = read_manifest(cfg.manifest)
    first = preprocess(manifest, cfg, ["fslf", "cfas"])
    assert len(first.written) == 16 and not first.skipped and not first.failed
    stamps = {p: p.stat().st_mtime_ns for p in (tmp_path / "cache").rglob("*")}
    second = preprocess(manifest, cfg, ["fslf", "cfas"], workers=2)
    assert not second.written and len(second.skipped) == 16
    assert {p: p.stat().st_mtime_ns for p in (tmp_path / "cache").rglob("*")} == stamps


def test_changed_input_is_rebuilt(tiny_corpus, tmp_path):
    corpus = tmp_path / "corpus"
    shutil.copytree(tiny_corpus, corpus)
    cfg = tiny_cfg(corpus, tmp_path)
    manifest = read_manifest(cfg.manifest)
    preprocess(manifest, cfg)
    frame = corpus / "clips" / "c00_001" / "frames" / "0000.png"
    Image.fromarray(np.zeros((32, 32), dtype=np.uint8)).save(frame)
    again = preprocess(manifest, cfg)
    assert again.written == ["c00_001"] and len(again.skipped) == 7


def test_cache_matches_direct_alignment(tiny_corpus, tmp_path):
    from mmder.manifest import load_clip
    from mmder.sampling import align

    cfg = tiny_cfg(tiny_corpus, tmp_path)
    manifest = read_manifest(cfg.manifest)
    cached = load_aligned(manifest, cfg, "ffls")
    plan = sampling_plan(cfg, "ffls")
    direct = align(load_clip(manifest.rows[3]), plan.count, plan.step, plan.spec, (plan.height, plan.width))
    assert np.allclose(cached[3].visual, direct.visual, atol=1e-6)
    assert np.allclose(cached[3].audio_specs, direct.audio_specs, atol=1e-6)
    assert cached[3].clip_id == manifest.rows[3].clip_id


def test_load_aligned_raises_on_failures(tiny_corpus, tmp_path):
    corpus = tmp_path / "corpus"
    shutil.copytree(tiny_corpus, corpus)
    (corpus / "clips" / "c00_000" / "audio.wav").write_bytes(b"")
    cfg = tiny_cfg(corpus, tmp_path)
    with pytest.raises(DataError, match="c00_000"):
        load_aligned(read_manifest(cfg.manifest), cfg, "fslf")


def test_rfas_samples_differ_per_clip_but_repeat_per_seed(tiny_corpus, tmp_path):
    cfg = tiny_cfg(tiny_corpus, tmp_path, strategy="rfas")
    manifest = read_manifest(cfg.manifest)
    a = fused_samples(manifest, cfg, rfas_seed=5)
    b = fused_samples(manifest, cfg, rfas_seed=5)
    assert [s.source for s in a] == [s.source for s in b]
    assert len({tuple(s.source) for s in a}) > 1


def test_token_layout_map_ffls():
    layout = token_layout_map(RunConfig(), "ffls")
    tokens = layout["tokens"]
    assert layout["num_tokens"] == 128 and layout["token_dim"] == 128
    assert all(t["modality"] == ["visual", "visual"] for t in tokens[:64])
    assert all(t["modality"] == ["audio", "audio"] for t in tokens[64:])
    assert tokens[17]["index"] == 17 and tokens[17]["frames"] == [2, 3]


def test_comparison_table_labels():
    text = comparison_table([ComparisonRow("rfas", 0.25, 0.3, 3), ComparisonRow("fslf", 0.7, 0.75, 1)])
    lines = text.splitlines()
    assert "Method" in lines[0] and "WAR" in lines[0]
    assert lines[2].startswith("MMDER-RFAS") and lines[2].endswith("(x3)") and "V+A" in text
    assert "75.00" in lines[-1]
