"""Six ways of packing aligned frames and spectrograms into one clip tensor.

=======  ==============================================  ===========
name     output frames                                   input T
=======  ==============================================  ===========
cfas     visual on top of spectrogram, per time step     T (half H)
sfas     minmax(visual) + minmax(spectrogram)            T
ffls     V1..V8, A1..A8                                  T/2
fslf     A1..A8, V1..V8                                  T/2
ofos     V1, A1, V2, A2, ...                             T/2
rfas     seeded shuffle of V1..V8, A1..A8                T/2
=======  ==============================================  ===========
"""

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .signal import minmax

VISUAL = "visual"
AUDIO = "audio"
MIXED = "mixed"


class Strategy(str, enum.Enum):
    CFAS = "cfas"
    SFAS = "sfas"
    FFLS = "ffls"
    FSLF = "fslf"
    OFOS = "ofos"
    RFAS = "rfas"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = "|".join(s.value for s in cls)
            raise ContractError(f"unknown strategy {value!r}; choose one of {names}") from None

    @property
    def full_rate(self):
        """CFAS and SFAS keep one fused frame per sampled time point."""
        return self in (Strategy.CFAS, Strategy.SFAS)

    def input_frames(self, frames):
        """How many aligned time points feed a ``frames``-long fused clip."""
        return frames if self.full_rate else frames // 2

    def frame_size(self, height, width):
        return (height // 2, width) if self is Strategy.CFAS else (height, width)


@dataclass
class FusedSample:
    x: np.ndarray
    label: int
    subject_id: str
    frame_modality: list
    clip_id: str = ""
    row_split: int | None = None
    strategy: str = ""
    source: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.frame_modality) != self.x.shape[0]:
            raise ContractError(
                f"frame_modality has {len(self.frame_modality)} tags for {self.x.shape[0]} frames"
            )


class SplitMix64:
    """64-bit splitmix generator (Steele, Lea & Flood)."""

    MASK = (1 << 64) - 1

    def __init__(self, seed):
        if seed is None or int(seed) < 0:
            raise ContractError(f"RFAS needs an unsigned integer seed, got {seed!r}")
        self.state = int(seed) & self.MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def below(self, n):
        """Uniform integer in ``[0, n)`` by rejection (no modulo bias)."""
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n


def seeded_permutation(n, seed):
    """Fisher-Yates shuffle of ``range(n)`` driven by :class:`SplitMix64`."""
    rng = SplitMix64(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def clip_seed(seed, clip_id):
    """Stable per-clip seed so every clip gets its own RFAS order."""
    digest = hashlib.sha256(f"{int(seed)}:{clip_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _check_count(clip, expected, name):
    if clip.visual.shape[0] != expected or clip.audio_specs.shape[0] != expected:
        raise ContractError(
            f"{name} needs {expected} visual and {expected} audio frames, "
            f"got {clip.visual.shape[0]} and {clip.audio_specs.shape[0]}"
        )
    if clip.visual.shape[1:] != clip.audio_specs.shape[1:]:
        raise ContractError(
            f"{name}: visual frames {clip.visual.shape[1:]} and spectrograms {clip.audio_specs.shape[1:]} differ"
        )


def _sample(clip, x, modality, strategy, source, row_split=None):
    return FusedSample(
        x=x, label=clip.label, subject_id=clip.subject_id, frame_modality=modality,
        clip_id=clip.clip_id, row_split=row_split, strategy=strategy, source=source,
    )


def fuse_cfas(clip, frames=16, height=None, visual_top=True):
    """Stack each visual frame and its spectrogram vertically.

    Both inputs must already be ``(H/2) x W``; ``height`` is the fused frame
    height to check against (defaults to twice the input height).
    """
    _check_count(clip, frames, "CFAS")
    half = clip.visual.shape[1]
    if height is not None and 2 * half != height:
        raise ContractError(f"CFAS needs sub-frames of height {height // 2}, got {half}")
    top, bottom = (clip.visual, clip.audio_specs) if visual_top else (clip.audio_specs, clip.visual)
    x = np.concatenate([top, bottom], axis=1)
    source = [(MIXED, t) for t in range(frames)]
    return _sample(clip, x, [MIXED] * frames, "cfas", source, row_split=half)


def fuse_sfas(clip, frames=16):
    _check_count(clip, frames, "SFAS")
    x = np.stack([minmax(v) + minmax(a) for v, a in zip(clip.visual, clip.audio_specs)])
    return _sample(clip, x, [MIXED] * frames, "sfas", [(MIXED, t) for t in range(frames)])


def _sequence(clip, order, name):
    x = np.stack([clip.visual[i] if m == VISUAL else clip.audio_specs[i] for m, i in order])
    return _sample(clip, x, [m for m, _ in order], name, list(order))


def fuse_ffls(clip, frames=16):
    half = frames // 2
    _check_count(clip, half, "FFLS")
    order = [(VISUAL, i) for i in range(half)] + [(AUDIO, i) for i in range(half)]
    return _sequence(clip, order, "ffls")


def fuse_fslf(clip, frames=16):
    half = frames // 2
    _check_count(clip, half, "FSLF")
    order = [(AUDIO, i) for i in range(half)] + [(VISUAL, i) for i in range(half)]
    return _sequence(clip, order, "fslf")


def fuse_ofos(clip, frames=16):
    half = frames // 2
    _check_count(clip, half, "OFOS")
    order = [(m, i) for i in range(half) for m in (VISUAL, AUDIO)]
    return _sequence(clip, order, "ofos")


def fuse_rfas(clip, seed, frames=16):
    """Seeded uniform shuffle of the visual and audio frames together."""
    half = frames // 2
    _check_count(clip, half, "RFAS")
    base = [(VISUAL, i) for i in range(half)] + [(AUDIO, i) for i in range(half)]
    order = [base[j] for j in seeded_permutation(frames, seed)]
    return _sequence(clip, order, "rfas")


def fuse(clip, strategy, frames=16, seed=None, height=None):
    """Dispatch on ``strategy``; RFAS requires ``seed``."""
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.CFAS:
        return fuse_cfas(clip, frames, height=height)
    if strategy is Strategy.SFAS:
        return fuse_sfas(clip, frames)
    if strategy is Strategy.FFLS:
        return fuse_ffls(clip, frames)
    if strategy is Strategy.FSLF:
        return fuse_fslf(clip, frames)
    if strategy is Strategy.OFOS:
        return fuse_ofos(clip, frames)
    if seed is None:
        raise ContractError("RFAS needs an explicit permutation seed")
    return fuse_rfas(clip, seed, frames)


def pixel_modality(sample):
    """``(T, H)`` array of modality tags per frame row."""
    t, h = sample.x.shape[:2]
    tags = np.empty((t, h), dtype=object)
    for i, tag in enumerate(sample.frame_modality):
        if tag == MIXED and sample.row_split is not None:
            tags[i, : sample.row_split] = VISUAL
            tags[i, sample.row_split :] = AUDIO
        else:
            tags[i, :] = tag
    return tags


def token_modality(sample, layout):
    """Modality of each token's per-frame slices, shape ``(N, tp)``.

    A slice that straddles the CFAS row split is tagged ``mixed``.
    """
    rows = pixel_modality(sample)
    tp, hp, _ = layout.cube
    coords = layout.coords()
    out = np.empty((coords.shape[0], tp), dtype=object)
    for n, (slab, row, _) in enumerate(coords):
        for dt in range(tp):
            tags = set(rows[slab * tp + dt, row * hp : (row + 1) * hp])
            out[n, dt] = tags.pop() if len(tags) == 1 else MIXED
    return out
