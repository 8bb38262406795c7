"""Multimodal sequence fusion for audio-visual emotion recognition.

Aligns video frames with per-frame audio spectrograms, packs both into one
clip tensor with one of six fusion strategies, tokenizes it with 3D cube
patches and classifies it with a joint spatio-temporal transformer.
"""

from ._kernels import BACKEND, available_backends, use_backend
from .errors import ContractError, DataError, GradientError, MMDERError, NumericError, ShapeError
from .fusion import FusedSample, Strategy, fuse
from .model import ModelConfig, ModelParams, forward, init_params, patchify, predict
from .sampling import AlignedClip, RawClip, align
from .signal import SpectrogramConfig, Waveform, log_mel, mfcc, spectrogram_image, stft
from .training import EvalReport, TrainConfig, evaluate, make_folds, metrics, train

__version__ = "0.1.0"

__all__ = [
    "AlignedClip", "BACKEND", "ContractError", "DataError", "EvalReport", "FusedSample", "GradientError",
    "MMDERError", "ModelConfig", "ModelParams", "NumericError", "RawClip", "ShapeError", "SpectrogramConfig",
    "Strategy", "TrainConfig", "Waveform", "align", "available_backends", "evaluate", "forward", "fuse",
    "init_params", "log_mel", "make_folds", "metrics", "mfcc", "patchify", "predict", "spectrogram_image",
    "stft", "train", "use_backend",
]
