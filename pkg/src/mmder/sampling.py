"""Uniform frame downsampling and frame-aligned audio windows."""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractError
from .signal import SpectrogramConfig, Waveform, spectrogram_image

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass
class RawClip:
    """One labeled clip: grayscale frames ``(n, h, w)`` in [0, 1] plus audio."""

    frames: np.ndarray
    fps: float
    audio: Waveform
    label: int
    subject_id: str
    clip_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim == 4:
            frames = to_luminance(frames)
        if frames.ndim != 3 or frames.shape[0] == 0:
            raise ContractError(f"frames must be a non-empty (n, h, w) stack, got shape {frames.shape}")
        if self.fps <= 0:
            raise ContractError(f"fps must be positive, got {self.fps}")
        if int(self.label) < 0:
            raise ContractError(f"label must be non-negative, got {self.label}")
        self.frames = frames


@dataclass
class AlignedClip:
    """``T`` visual frames and ``T`` spectrogram images on one time grid."""

    visual: np.ndarray
    audio_specs: np.ndarray
    label: int
    subject_id: str
    clip_id: str = ""
    times: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.visual.shape[0] != self.audio_specs.shape[0]:
            raise ContractError(
                f"visual has {self.visual.shape[0]} frames but audio has {self.audio_specs.shape[0]} spectrograms"
            )

    @property
    def num_frames(self):
        return self.visual.shape[0]


class ClipTooShortError(ContractError):
    def __init__(self, required, actual):
        super().__init__(f"clip has {actual} frames but sampling needs at least {required}")
        self.required = required
        self.actual = actual


def to_luminance(rgb):
    """ITU-R 601 luma of ``(..., 3)`` RGB data."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ContractError(f"expected trailing RGB axis of size 3, got shape {rgb.shape}")
    return rgb @ LUMA_WEIGHTS


def sample_indices(total_frames, count, step, pad_last=False):
    """``[0, step, ..., (count-1)*step]``.

    With ``pad_last`` indices past the end repeat the final frame instead of
    raising.
    """
    if count < 1 or step < 1:
        raise ContractError(f"count and step must be >= 1, got count={count}, step={step}")
    required = 1 + (count - 1) * step
    if total_frames < required and not pad_last:
        raise ClipTooShortError(required, total_frames)
    return [min(i * step, total_frames - 1) for i in range(count)]


def frame_time(index, fps):
    if fps <= 0:
        raise ContractError(f"fps must be positive, got {fps}")
    return index / fps


def audio_window(audio, center_t):
    """Exactly two seconds of samples covering ``[center_t - 1, center_t + 1)``.

    Parts of the window outside the recording are zeros, so the window
    center stays on ``center_t`` at the clip boundaries.
    """
    if center_t < 0:
        raise ContractError(f"center time must be non-negative, got {center_t}")
    sr = audio.sample_rate
    start = int(np.floor(center_t * sr + 0.5)) - sr
    out = np.zeros(2 * sr)
    lo, hi = max(start, 0), min(start + 2 * sr, len(audio))
    if hi > lo:
        out[lo - start : hi - start] = audio.samples[lo:hi]
    return Waveform(out, sr)


def resize_frame(frame, height, width):
    if frame.shape == (height, width):
        return np.asarray(frame, dtype=np.float64)
    return _kernels.bilinear_resize(frame, height, width)


def align(clip, count, step, spec_cfg=None, frame_size=None, pad_last=False):
    """Sample ``count`` frames every ``step`` and pair each with its spectrogram.

    ``frame_size`` is the ``(height, width)`` of both the resized video frames
    and the spectrogram images; it defaults to the spectrogram config size.
    """
    spec_cfg = spec_cfg or SpectrogramConfig()
    height, width = frame_size or (spec_cfg.height, spec_cfg.width)
    idx = sample_indices(clip.frames.shape[0], count, step, pad_last=pad_last)
    times = np.array([frame_time(i, clip.fps) for i in idx])
    visual = np.stack([np.clip(resize_frame(clip.frames[i], height, width), 0.0, 1.0) for i in idx])
    specs = np.stack(
        [spectrogram_image(audio_window(clip.audio, t), spec_cfg, height, width).values for t in times]
    )
    return AlignedClip(visual, specs, int(clip.label), clip.subject_id, clip.clip_id, times)
