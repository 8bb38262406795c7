"""Seeded synthetic audio-visual corpus standing in for real datasets.

Each clip pairs a sinusoid (class-specific frequency) with a Gaussian blob
drifting horizontally (class-specific velocity) over a noisy background.
With ``cue="redundant"`` both modalities identify the class on their own.
With ``cue="complementary"`` the class is a (tone, velocity) pair so that
neither modality alone separates all classes.
"""

import math
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ContractError, DataError
from .manifest import ManifestRow, write_manifest
from .signal import SpectrogramConfig, Waveform, hz_to_mel, mel_centers, write_wav

CUES = ("redundant", "complementary")


def class_frequencies(count, spec_cfg=None, image_height=32, sample_rate=16000, low_row=4, high_row=None):
    """Tone frequencies that land on mel filters sampled by the image resize.

    Picks ``count`` evenly spaced image rows and returns the center frequency
    of the mel filter nearest to the source coordinate of each row, so a
    tone survives the (corner-aligned) resize to ``image_height`` rows.
    """
    spec_cfg = spec_cfg or SpectrogramConfig()
    f_max = spec_cfg.f_max or sample_rate / 2
    centers = mel_centers(spec_cfg.n_mels, spec_cfg.f_min, f_max)
    high_row = image_height - 6 if high_row is None else high_row
    rows = np.round(np.linspace(low_row, high_row, count)).astype(int)
    scale = (spec_cfg.n_mels - 1) / (image_height - 1)
    return centers[np.round(rows * scale).astype(int)]


def class_velocities(count, min_speed=0.0, max_speed=0.3):
    """Horizontal blob speeds in pixels per frame (rightward)."""
    if count == 1:
        return np.array([min_speed])
    return np.linspace(min_speed, max_speed, count)


def cue_indices(label, classes, cue):
    """``(tone_index, velocity_index)`` for a class under the cue layout."""
    if cue == "redundant":
        return label, label
    n_tones = 2
    return label % n_tones, label // n_tones


def render_frames(rng, velocity, n_frames, size, brightness):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    sigma = size / 12.0
    y0 = size / 2.0 + rng.uniform(-size / 10, size / 10)
    # every class starts left of center, so speed separates the trajectories
    x0 = size / 4.0 + rng.uniform(-size / 16, size / 16)
    frames = np.empty((n_frames, size, size))
    for t in range(n_frames):
        blob = np.exp(-((xx - (x0 + velocity * t)) ** 2 + (yy - y0) ** 2) / (2 * sigma**2))
        frames[t] = brightness + 0.7 * blob + rng.normal(0.0, 0.04, (size, size))
    return np.clip(frames, 0.0, 1.0)


def render_audio(rng, freq, duration, sample_rate):
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    tone = 0.5 * np.sin(2 * math.pi * freq * t + rng.uniform(0, 2 * math.pi))
    return np.clip(tone + rng.normal(0.0, 0.01, t.shape), -1.0, 1.0)


def gen_synthetic(
    out_dir,
    classes=4,
    clips_per_class=16,
    seed=0,
    cue="redundant",
    subjects=8,
    n_frames=96,
    fps=30,
    frame_size=48,
    sample_rate=16000,
    image_height=32,
):
    """Write frames, WAV files and ``manifest.csv`` under ``out_dir``.

    Subjects are assigned round-robin within each class, so every subject
    holds clips of every class when ``clips_per_class >= subjects``.
    Returns the manifest rows.
    """
    if classes < 2:
        raise ContractError(f"need at least 2 classes, got {classes}")
    if cue not in CUES:
        raise ContractError(f"cue must be one of {CUES}, got {cue!r}")
    if clips_per_class < 1 or subjects < 1:
        raise ContractError("clips_per_class and subjects must be >= 1")
    out = Path(out_dir)
    try:
        (out / "clips").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {out}: {exc}") from exc

    n_tones = classes if cue == "redundant" else 2
    n_speeds = classes if cue == "redundant" else math.ceil(classes / 2)
    freqs = class_frequencies(n_tones, image_height=image_height, sample_rate=sample_rate)
    speeds = class_velocities(n_speeds, max_speed=0.55 * frame_size / n_frames)
    duration = n_frames / fps
    rows = []
    for label in range(classes):
        tone_i, speed_i = cue_indices(label, classes, cue)
        for j in range(clips_per_class):
            subject = j % subjects
            rng = np.random.default_rng([seed, label, j])
            clip_id = f"c{label:02d}_{j:03d}"
            clip_dir = out / "clips" / clip_id
            frame_dir = clip_dir / "frames"
            frame_dir.mkdir(parents=True, exist_ok=True)
            brightness = 0.05 + 0.1 * subject / max(subjects - 1, 1)
            frames = render_frames(rng, speeds[speed_i], n_frames, frame_size, brightness)
            for t, frame in enumerate(frames):
                Image.fromarray(np.round(frame * 255).astype(np.uint8)).save(
                    frame_dir / f"{t:04d}.png", optimize=False
                )
            audio = Waveform(render_audio(rng, freqs[tone_i], duration, sample_rate), sample_rate)
            write_wav(clip_dir / "audio.wav", audio)
            rows.append(ManifestRow(clip_id, frame_dir, clip_dir / "audio.wav", fps, label, f"s{subject:02d}"))
    write_manifest(out / "manifest.csv", rows)
    return rows


def dominant_band(log_mel_grid):
    """Index of the mel band with the highest time-averaged log energy."""
    return int(np.argmax(np.asarray(log_mel_grid).mean(axis=0)))


def expected_band(freq, spec_cfg=None, sample_rate=16000):
    """Mel filter whose center is closest (in mel) to ``freq``."""
    spec_cfg = spec_cfg or SpectrogramConfig()
    centers = mel_centers(spec_cfg.n_mels, spec_cfg.f_min, spec_cfg.f_max or sample_rate / 2)
    return int(np.argmin(np.abs(hz_to_mel(centers) - hz_to_mel(freq))))
