"""Cube tokenizer, joint space-time transformer encoder and linear head.

Forward pass for one fused clip ``x`` of shape ``(T, H, W)``::

    tokens = patchify(x)           # (N, P), N = T/tp * H/hp * W/wp
    xhat = embed(tokens, params)   # tokens @ W + b + positions, (N, D)
    feats = encode(xhat, params)   # L pre-norm blocks, full attention
    logits = classify(feats, params)  # mean over tokens, then affine

Every function also accepts a leading batch axis.
"""

from collections import OrderedDict
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import numerics as nm
from .errors import ContractError, ShapeError
from .numerics import Tensor


@dataclass(frozen=True)
class ModelConfig:
    frames: int = 16
    height: int = 224
    width: int = 224
    cube: tuple = (2, 16, 16)
    embed_dim: int = 1024
    depth: int = 24
    num_heads: int = 16
    mlp_ratio: float = 4.0
    num_classes: int = 7
    pos_embed: str = "sinusoidal"
    init_std: float = 0.02
    ln_eps: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "cube", tuple(int(c) for c in self.cube))
        tp, hp, wp = self.cube
        if self.frames % tp or self.height % hp or self.width % wp:
            raise ContractError(
                f"input {self.frames}x{self.height}x{self.width} is not divisible by cube {tp}x{hp}x{wp}"
            )
        if self.embed_dim % self.num_heads:
            raise ContractError(f"embed_dim {self.embed_dim} not divisible by {self.num_heads} heads")
        if self.pos_embed not in ("sinusoidal", "learned"):
            raise ContractError(f"pos_embed must be 'sinusoidal' or 'learned', got {self.pos_embed!r}")
        if self.num_classes < 2:
            raise ContractError(f"need at least two classes, got {self.num_classes}")
        if self.depth < 0:
            raise ContractError(f"depth must be >= 0, got {self.depth}")

    @property
    def grid(self):
        tp, hp, wp = self.cube
        return self.frames // tp, self.height // hp, self.width // wp

    @property
    def num_tokens(self):
        slabs, rows, cols = self.grid
        return slabs * rows * cols

    @property
    def token_dim(self):
        tp, hp, wp = self.cube
        return tp * hp * wp

    @property
    def hidden_dim(self):
        return int(round(self.embed_dim * self.mlp_ratio))

    @property
    def layout(self):
        return TokenLayout(self.frames, self.height, self.width, self.cube)

    def to_dict(self):
        d = asdict(self)
        d["cube"] = list(self.cube)
        return d

    @classmethod
    def full(cls, num_classes=7):
        """16x224x224 input, 2x16x16 cubes, ViT-L sized encoder."""
        return cls(num_classes=num_classes)

    @classmethod
    def desk(cls, num_classes=4):
        """Same structure at 32x32 with 2x8x8 cubes (N=128, P=128, D=64)."""
        return cls(
            frames=16, height=32, width=32, cube=(2, 8, 8), embed_dim=64, depth=2,
            num_heads=4, num_classes=num_classes,
        )

    @classmethod
    def preset(cls, name, num_classes=None, **overrides):
        factory = {"full": cls.full, "desk": cls.desk}.get(name)
        if factory is None:
            raise ContractError(f"unknown model preset {name!r}; choose 'full' or 'desk'")
        cfg = factory() if num_classes is None else factory(num_classes)
        return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class TokenLayout:
    """Bijection between token index and cube position.

    Tokens are ordered temporal slab first, then cube row, then cube
    column. Inside a token, values are flattened ``(t, h, w)`` with ``t``
    outermost, so the first ``hp*wp`` entries come from the slab's first
    frame.
    """

    frames: int
    height: int
    width: int
    cube: tuple

    @property
    def grid(self):
        tp, hp, wp = self.cube
        return self.frames // tp, self.height // hp, self.width // wp

    @property
    def num_tokens(self):
        s, r, c = self.grid
        return s * r * c

    def coords(self):
        """``(N, 3)`` array of ``(slab, row, col)``."""
        s, r, c = self.grid
        return np.stack(np.unravel_index(np.arange(s * r * c), (s, r, c)), axis=1)

    def source_frames(self):
        """``(N, tp)`` array of the frame indices each token reads."""
        tp = self.cube[0]
        slabs = self.coords()[:, 0]
        return slabs[:, None] * tp + np.arange(tp)[None, :]

    def pixel_box(self, token):
        """``(frame_slice, row_slice, col_slice)`` covered by ``token``."""
        tp, hp, wp = self.cube
        slab, row, col = (int(v) for v in self.coords()[token])
        return (
            slice(slab * tp, (slab + 1) * tp),
            slice(row * hp, (row + 1) * hp),
            slice(col * wp, (col + 1) * wp),
        )


@dataclass
class TokenSequence:
    tokens: np.ndarray
    layout: TokenLayout

    @property
    def num_tokens(self):
        return self.tokens.shape[-2]


def _layout_of(cfg_or_layout):
    if isinstance(cfg_or_layout, TokenLayout):
        return cfg_or_layout
    return cfg_or_layout.layout


def patchify_array(x, layout):
    """Cube-patch ``(..., T, H, W)`` into ``(..., N, P)``."""
    x = np.asarray(x)
    tp, hp, wp = layout.cube
    expected = (layout.frames, layout.height, layout.width)
    if x.shape[-3:] != expected:
        raise ShapeError(f"patchify: input shape {x.shape[-3:]} does not match configured {expected}")
    lead = x.shape[:-3]
    s, r, c = layout.grid
    k = len(lead)
    cubes = x.reshape(lead + (s, tp, r, hp, c, wp))
    order = tuple(range(k)) + tuple(k + i for i in (0, 2, 4, 1, 3, 5))
    return cubes.transpose(order).reshape(lead + (s * r * c, tp * hp * wp))


def unpatchify_array(tokens, layout):
    tokens = np.asarray(tokens)
    tp, hp, wp = layout.cube
    s, r, c = layout.grid
    lead = tokens.shape[:-2]
    k = len(lead)
    cubes = tokens.reshape(lead + (s, r, c, tp, hp, wp))
    order = tuple(range(k)) + tuple(k + i for i in (0, 3, 1, 4, 2, 5))
    return cubes.transpose(order).reshape(lead + (layout.frames, layout.height, layout.width))


def patchify(x, cfg):
    """Non-overlapping cube patching of a fused clip (array or FusedSample)."""
    data = getattr(x, "x", x)
    layout = _layout_of(cfg)
    return TokenSequence(patchify_array(data, layout), layout)


class ModelParams:
    """Ordered collection of named parameter tensors for one config."""

    def __init__(self, config, tensors):
        self.config = config
        self.tensors = OrderedDict(tensors)

    def __getitem__(self, name):
        return self.tensors[name]

    def __contains__(self, name):
        return name in self.tensors

    def __iter__(self):
        return iter(self.tensors)

    def names(self):
        return list(self.tensors)

    def trainable(self):
        return [t for t in self.tensors.values() if t.requires_grad]

    def trainable_names(self):
        return [n for n, t in self.tensors.items() if t.requires_grad]

    def state_dict(self):
        return OrderedDict((n, t.data) for n, t in self.tensors.items())

    def load_state_dict(self, arrays):
        """Copy arrays in by name; names and shapes must match exactly."""
        missing = [n for n in self.tensors if n not in arrays]
        extra = [n for n in arrays if n not in self.tensors]
        if missing or extra:
            raise ShapeError(f"weight names differ: missing {missing[:5]}, unexpected {extra[:5]}")
        for name, tensor in self.tensors.items():
            value = np.asarray(arrays[name])
            if value.shape != tensor.shape:
                raise ShapeError(f"tensor {name!r}: expected shape {tensor.shape}, got {value.shape}")
            tensor.data = value.astype(tensor.dtype)

    def copy(self):
        tensors = OrderedDict()
        for n, t in self.tensors.items():
            tensors[n] = Tensor(t.data.copy(), requires_grad=t.requires_grad, dtype=t.dtype, name=n)
        return ModelParams(self.config, tensors)

    def zero_grad(self):
        for t in self.tensors.values():
            t.grad = None

    def num_parameters(self):
        return sum(t.size for t in self.trainable())


def parameter_shapes(cfg):
    """Name to shape for every tensor, in canonical order."""
    d, p, k, hidden = cfg.embed_dim, cfg.token_dim, cfg.num_classes, cfg.hidden_dim
    shapes = OrderedDict()
    shapes["patch_embed.weight"] = (p, d)
    shapes["patch_embed.bias"] = (d,)
    shapes["pos_embed"] = (cfg.num_tokens, d)
    for i in range(cfg.depth):
        b = f"block{i}"
        shapes[f"{b}.norm1.weight"] = (d,)
        shapes[f"{b}.norm1.bias"] = (d,)
        for proj in ("q", "k", "v", "out"):
            shapes[f"{b}.attn.{proj}_weight"] = (d, d)
            shapes[f"{b}.attn.{proj}_bias"] = (d,)
        shapes[f"{b}.norm2.weight"] = (d,)
        shapes[f"{b}.norm2.bias"] = (d,)
        shapes[f"{b}.mlp.fc1_weight"] = (d, hidden)
        shapes[f"{b}.mlp.fc1_bias"] = (hidden,)
        shapes[f"{b}.mlp.fc2_weight"] = (hidden, d)
        shapes[f"{b}.mlp.fc2_bias"] = (d,)
    shapes["head.weight"] = (d, k)
    shapes["head.bias"] = (k,)
    return shapes


def init_params(cfg, seed=0, dtype=None):
    """Truncated-normal weights, zero biases, unit layer-norm gains.

    The positional table is the fixed sinusoid unless ``cfg.pos_embed`` is
    ``"learned"``, in which case it is trainable and randomly initialised.
    """
    dtype = np.dtype(dtype or nm.get_default_dtype())
    rng = np.random.default_rng(seed)
    tensors = OrderedDict()
    for name, shape in parameter_shapes(cfg).items():
        trainable = True
        if name == "pos_embed":
            if cfg.pos_embed == "sinusoidal":
                value = nm.sinusoidal_table(*shape)
                trainable = False
            else:
                value = nm.trunc_normal(rng, shape, cfg.init_std)
        elif name.endswith("norm1.weight") or name.endswith("norm2.weight"):
            value = np.ones(shape)
        elif len(shape) == 1:
            value = np.zeros(shape)
        else:
            value = nm.trunc_normal(rng, shape, cfg.init_std)
        tensors[name] = Tensor(value, requires_grad=trainable, dtype=dtype, name=name)
    return ModelParams(cfg, tensors)


def embed(tokens, params):
    """``tokens @ W + b + positions``."""
    cfg = params.config
    tokens = tokens if isinstance(tokens, Tensor) else Tensor(
        getattr(tokens, "tokens", tokens), dtype=params["patch_embed.weight"].dtype
    )
    if tokens.shape[-1] != cfg.token_dim or tokens.shape[-2] != cfg.num_tokens:
        raise ShapeError(
            f"embed: tokens {tokens.shape} do not match ({cfg.num_tokens}, {cfg.token_dim})"
        )
    return tokens @ params["patch_embed.weight"] + params["patch_embed.bias"] + params["pos_embed"]


def attention(h, params, prefix, num_heads):
    """Multi-head self-attention where every token sees every token.

    Returns the projected output and the attention weights tensor of shape
    ``(B, heads, N, N)``.
    """
    batch, n, d = h.shape
    dh = d // num_heads

    def heads(x):
        return x.reshape(batch, n, num_heads, dh).transpose(0, 2, 1, 3)

    q = heads(h @ params[f"{prefix}.q_weight"] + params[f"{prefix}.q_bias"])
    k = heads(h @ params[f"{prefix}.k_weight"] + params[f"{prefix}.k_bias"])
    v = heads(h @ params[f"{prefix}.v_weight"] + params[f"{prefix}.v_bias"])
    scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(dh))
    weights = nm.softmax_rows(scores)
    ctx = (weights @ v).transpose(0, 2, 1, 3).reshape(batch, n, d)
    return ctx @ params[f"{prefix}.out_weight"] + params[f"{prefix}.out_bias"], weights


def encode(xhat, params, return_attention=False):
    """Pre-norm transformer blocks; output shape equals input shape."""
    cfg = params.config
    single = xhat.ndim == 2
    x = xhat.reshape(1, *xhat.shape) if single else xhat
    maps = []
    for i in range(cfg.depth):
        b = f"block{i}"
        h = nm.layer_norm(x, params[f"{b}.norm1.weight"], params[f"{b}.norm1.bias"], cfg.ln_eps)
        attn_out, weights = attention(h, params, f"{b}.attn", cfg.num_heads)
        x = x + attn_out
        h = nm.layer_norm(x, params[f"{b}.norm2.weight"], params[f"{b}.norm2.bias"], cfg.ln_eps)
        h = nm.gelu(h @ params[f"{b}.mlp.fc1_weight"] + params[f"{b}.mlp.fc1_bias"])
        x = x + (h @ params[f"{b}.mlp.fc2_weight"] + params[f"{b}.mlp.fc2_bias"])
        maps.append(weights.data)
    out = x.reshape(*xhat.shape) if single else x
    return (out, maps) if return_attention else out


def classify(features, params):
    """Mean over tokens, then one affine map to class logits."""
    pooled = features.mean(axis=-2)
    if pooled.ndim == 1:
        logits = pooled.reshape(1, -1) @ params["head.weight"] + params["head.bias"]
        return logits.reshape(-1)
    return pooled @ params["head.weight"] + params["head.bias"]


def forward(tokens, params):
    return classify(encode(embed(tokens, params), params), params)


def predict(params, tokens):
    """Argmax class for a ``(B, N, P)`` batch, recording no graph."""
    with nm.no_grad():
        logits = forward(np.asarray(tokens), params)
    return np.argmax(logits.data, axis=-1), logits.data
