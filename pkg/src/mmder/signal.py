"""Waveform to spectrogram-image conversion.

The pipeline is ``stft -> power -> mel filterbank -> log`` with an optional
orthonormal DCT (MFCC), followed by a bilinear resize and min-max scaling
into a fixed ``height x width`` image in ``[0, 1]``. Image rows index the
mel (or cepstral) axis, row 0 being the lowest band; columns index time.
"""

import wave
from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.signal

from . import _kernels
from .errors import ContractError, DataError

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ContractError(f"waveform must be mono (1D), got shape {samples.shape}")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ContractError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ContractError("waveform contains non-finite samples")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class SpectrogramConfig:
    """Spectrogram front-end settings.

    With the defaults a 2 s window at 16 kHz yields
    ``1 + (32000 - 512) // 160 = 197`` frames before resizing.
    """

    n_fft: int = 512
    hop: int = 160
    window: str = "hann"
    n_mels: int = 128
    f_min: float = 0.0
    f_max: float | None = None
    representation: str = "log_mel"
    n_mfcc: int = 40
    height: int = 224
    width: int = 224

    def __post_init__(self):
        if self.n_fft < 1 or self.n_fft & (self.n_fft - 1):
            raise ContractError(f"n_fft must be a power of two, got {self.n_fft}")
        if self.hop < 1:
            raise ContractError(f"hop must be >= 1, got {self.hop}")
        if self.representation not in ("log_mel", "mfcc"):
            raise ContractError(f"representation must be 'log_mel' or 'mfcc', got {self.representation!r}")
        if self.height < 1 or self.width < 1:
            raise ContractError(f"image size must be positive, got {self.height}x{self.width}")


@dataclass(frozen=True)
class SpectrogramImage:
    values: np.ndarray

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def window_values(window, n):
    """Resolve a window name (or explicit array) to ``n`` periodic taps."""
    if isinstance(window, str):
        name = "boxcar" if window in ("rect", "rectangular", "ones") else window
        return scipy.signal.get_window(name, n, fftbins=True).astype(np.float64)
    taps = np.asarray(window, dtype=np.float64)
    if taps.shape != (n,):
        raise ContractError(f"window has {taps.shape} taps, need ({n},)")
    return taps


def stft(w, n_fft=512, hop=160, window="hann"):
    """One-sided short-time Fourier transform.

    Frame ``t`` covers samples ``[t*hop, t*hop + n_fft)``; there is no
    centering. Inputs shorter than ``n_fft`` are zero-padded to one frame.
    Returns a complex array of shape ``(frames, n_fft // 2 + 1)``.
    """
    if n_fft < 1 or n_fft & (n_fft - 1):
        raise ContractError(f"n_fft must be a power of two, got {n_fft}")
    if hop < 1:
        raise ContractError(f"hop must be >= 1, got {hop}")
    x = w.samples
    if x.size == 0:
        raise ContractError("stft of an empty waveform")
    if x.size < n_fft:
        x = np.pad(x, (0, n_fft - x.size))
    frames = np.lib.stride_tricks.sliding_window_view(x, n_fft)[::hop]
    return np.fft.rfft(frames * window_values(window, n_fft), axis=1)


def mel_centers(n_mels, f_min, f_max):
    """Center frequencies (Hz) of ``n_mels`` filters spaced evenly in mel."""
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    return edges[1:-1]


def mel_filterbank(n_mels, n_fft, sample_rate, f_min=0.0, f_max=None):
    """Triangular filters with unit apex, shape ``(n_mels, n_fft // 2 + 1)``.

    Filter ``m`` rises linearly from the center of filter ``m-1`` to its own
    center and falls to the center of filter ``m+1`` (the band edges stand
    in for the missing neighbours of the first and last filters).
    """
    f_max = sample_rate / 2.0 if f_max is None else float(f_max)
    if n_mels < 1:
        raise ContractError(f"n_mels must be >= 1, got {n_mels}")
    if not 0.0 <= f_min < f_max <= sample_rate / 2.0:
        raise ContractError(
            f"band edges must satisfy 0 <= f_min < f_max <= sr/2, got {f_min}, {f_max} at sr={sample_rate}"
        )
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def log_mel(w, cfg=None):
    """``log(|STFT|^2 @ filterbank.T + 1e-10)``, shape ``(frames, n_mels)``."""
    cfg = cfg or SpectrogramConfig()
    spec = stft(w, cfg.n_fft, cfg.hop, cfg.window)
    power = spec.real**2 + spec.imag**2
    fb = mel_filterbank(cfg.n_mels, cfg.n_fft, w.sample_rate, cfg.f_min, cfg.f_max)
    return np.log(power @ fb.T + LOG_FLOOR)


def mfcc(log_mel_grid, n_coeffs):
    """Orthonormal type-II DCT along the mel axis, first ``n_coeffs`` kept."""
    grid = np.asarray(log_mel_grid, dtype=np.float64)
    if n_coeffs > grid.shape[-1]:
        raise ContractError(f"n_coeffs={n_coeffs} exceeds n_mels={grid.shape[-1]}")
    return scipy.fft.dct(grid, type=2, norm="ortho", axis=-1)[..., :n_coeffs]


def minmax(grid):
    """Scale to ``[0, 1]``; a constant grid maps to zeros."""
    grid = np.asarray(grid, dtype=np.float64)
    lo, hi = grid.min(), grid.max()
    if hi == lo:
        return np.zeros_like(grid)
    return (grid - lo) / (hi - lo)


def to_image(grid, height, width):
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.size == 0:
        raise ContractError(f"to_image needs a non-empty 2D grid, got shape {grid.shape}")
    if grid.shape != (height, width):
        grid = _kernels.bilinear_resize(grid, height, width)
    return SpectrogramImage(np.clip(minmax(grid), 0.0, 1.0))


def spectrogram_image(w, cfg=None, height=None, width=None):
    """Full front end: waveform window to a ``height x width`` image.

    ``height``/``width`` override the config (used for half-height frames).
    """
    cfg = cfg or SpectrogramConfig()
    grid = log_mel(w, cfg)
    if cfg.representation == "mfcc":
        grid = mfcc(grid, cfg.n_mfcc)
    return to_image(grid.T, height or cfg.height, width or cfg.width)


def resample_linear(w, sample_rate):
    if sample_rate == w.sample_rate:
        return w
    n_out = int(round(len(w) * sample_rate / w.sample_rate))
    t_out = np.arange(n_out) / sample_rate
    t_in = np.arange(len(w)) / w.sample_rate
    return Waveform(np.interp(t_out, t_in, w.samples), sample_rate)


def read_wav(path):
    """Read 16-bit PCM WAV; multichannel input is averaged to mono."""
    try:
        with wave.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise DataError(f"cannot read WAV {path}: {exc}") from exc
    if width != 2:
        raise DataError(f"{path}: expected 16-bit PCM, got {8 * width}-bit samples")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if channels > 1:
        data = data[: data.size - data.size % channels].reshape(-1, channels).mean(axis=1)
    return Waveform(data, rate)


def write_wav(path, w):
    pcm = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(w.sample_rate)
        fh.writeframes(pcm.tobytes())
