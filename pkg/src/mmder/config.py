"""Flat ``key = value`` run configuration.

Example file::

    # desk-scale FSLF run
    manifest = data/manifest.csv
    strategy = fslf
    epochs = 200
    lr = 0.001

Values are parsed as JSON scalars where possible (``0.001``, ``true``,
``null``) and as bare strings otherwise. Unknown keys are rejected.
"""

import json
import types
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ContractError
from .fusion import Strategy
from .model import ModelConfig
from .signal import SpectrogramConfig
from .training import TrainConfig


@dataclass(frozen=True)
class RunConfig:
    manifest: str = "manifest.csv"
    out_dir: str = "runs/latest"
    cache_dir: str | None = None
    strategy: str = "fslf"
    rfas_seed: int = 0
    strategies: str = "cfas,sfas,ffls,fslf,ofos,rfas"
    rfas_seeds: str = "0,1,2"
    # model
    preset: str = "desk"
    num_classes: int = 4
    frames: int | None = None
    height: int | None = None
    width: int | None = None
    cube: str | None = None
    embed_dim: int | None = None
    depth: int | None = None
    num_heads: int | None = None
    mlp_ratio: float | None = None
    pos_embed: str | None = None
    init_std: float | None = None
    # training
    lr: float = 1e-2
    weight_decay: float = 0.05
    epochs: int = 100
    batch_size: int = 8
    seed: int = 0
    workers: int = 1
    stop_at_train_war: float | None = None
    dtype: str = "float32"
    folds: int = 2
    fold_seed: int = 0
    # sampling and spectrograms
    step_full: int = 6
    step_half: int = 12
    pad_last: bool = False
    sample_rate: int = 16000
    n_fft: int = 512
    hop: int = 160
    window: str = "hann"
    n_mels: int = 128
    f_min: float = 0.0
    f_max: float | None = None
    representation: str = "log_mel"
    n_mfcc: int = 40

    def __post_init__(self):
        Strategy.parse(self.strategy)
        for s in self.strategy_list():
            Strategy.parse(s)
        if self.dtype not in ("float32", "float64"):
            raise ContractError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.folds < 2:
            raise ContractError(f"folds must be >= 2, got {self.folds}")
        if self.step_full < 1 or self.step_half < 1:
            raise ContractError("sampling steps must be >= 1")
        if self.sample_rate <= 0:
            raise ContractError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.rfas_seed < 0:
            raise ContractError(f"rfas_seed must be unsigned, got {self.rfas_seed}")
        # fail early on bad model/training/spectrogram values
        self.model_config()
        self.train_config()
        self.spec_config()

    def strategy_list(self):
        return [s.strip() for s in self.strategies.split(",") if s.strip()]

    def rfas_seed_list(self):
        return [int(s) for s in self.rfas_seeds.split(",") if s.strip()]

    def model_config(self):
        overrides = {}
        for key in ("frames", "height", "width", "embed_dim", "depth", "num_heads", "mlp_ratio",
                    "pos_embed", "init_std"):
            value = getattr(self, key)
            if value is not None:
                overrides[key] = value
        if self.cube is not None:
            parts = str(self.cube).lower().replace("x", ",").split(",")
            if len(parts) != 3:
                raise ContractError(f"cube must look like 2x8x8, got {self.cube!r}")
            overrides["cube"] = tuple(int(p) for p in parts)
        return ModelConfig.preset(self.preset, self.num_classes, **overrides)

    def train_config(self, strategy=None):
        return TrainConfig(
            lr=self.lr, weight_decay=self.weight_decay, epochs=self.epochs, batch_size=self.batch_size,
            seed=self.seed, strategy=strategy or self.strategy, preset=self.preset, workers=self.workers,
            stop_at_train_war=self.stop_at_train_war,
        )

    def spec_config(self):
        cfg = self.model_config()
        return SpectrogramConfig(
            n_fft=self.n_fft, hop=self.hop, window=self.window, n_mels=self.n_mels, f_min=self.f_min,
            f_max=self.f_max, representation=self.representation, n_mfcc=self.n_mfcc,
            height=cfg.height, width=cfg.width,
        )

    def resolved_cache_dir(self):
        if self.cache_dir:
            return Path(self.cache_dir)
        return Path(self.manifest).parent / "cache"

    def to_dict(self):
        return asdict(self)

    def with_overrides(self, **overrides):
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _base_type(kind):
    if isinstance(kind, types.UnionType):
        return next(a for a in kind.__args__ if a is not type(None)), True
    return kind, False


def coerce(key, raw):
    """Convert a raw string to the declared type of ``key``."""
    if key not in FIELD_TYPES:
        raise ContractError(f"unknown config key {key!r}")
    kind, optional = _base_type(FIELD_TYPES[key])
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ("none", "null", ""):
        if optional:
            return None
        raise ContractError(f"config key {key!r} cannot be empty")
    if kind is bool:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ContractError(f"config key {key!r} expects a boolean, got {raw!r}")
    if kind not in (int, float):
        return text.strip('"')
    try:
        value = json.loads(text)
    except ValueError:
        value = None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or (kind is int and not isinstance(value, int)):
        raise ContractError(f"config key {key!r} expects {kind.__name__}, got {raw!r}")
    return kind(value)


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ContractError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = coerce(key, raw)
        except ContractError as exc:
            raise ContractError(f"{source}:{lineno}: {exc}") from None
    return values


def load_config(path=None, **overrides):
    """File values first, then non-None ``overrides`` on top."""
    values = {}
    if path is not None:
        values = parse_config_text(Path(path).read_text(), source=str(path))
    for key, value in overrides.items():
        if key not in FIELD_TYPES:
            raise ContractError(f"unknown config key {key!r}")
        if value is not None:
            values[key] = value
    return RunConfig(**values)


def dump_config(cfg):
    lines = []
    for key, value in cfg.to_dict().items():
        if value is None:
            value = "none"
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
