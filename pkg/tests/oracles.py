"""Slow, obviously-correct reference implementations used by the tests.

Nothing here imports from the package under test, so agreement with these
functions is independent evidence.
"""

import math

import numpy as np
from scipy.special import erf


def naive_dft_frames(x, n_fft, hop, window):
    """O(n^2) one-sided DFT of each frame, written as an explicit sum."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < n_fft:
        x = np.concatenate([x, np.zeros(n_fft - x.size)])
    n_frames = 1 + (x.size - n_fft) // hop
    bins = n_fft // 2 + 1
    n = np.arange(n_fft)
    out = np.empty((n_frames, bins), dtype=np.complex128)
    for t in range(n_frames):
        seg = x[t * hop : t * hop + n_fft] * window
        for k in range(bins):
            out[t, k] = np.sum(seg * np.exp(-2j * math.pi * k * n / n_fft))
    return out


def periodic_hann(n):
    return 0.5 - 0.5 * np.cos(2 * math.pi * np.arange(n) / n)


def direct_dct2_ortho(row):
    """Type-II DCT with orthonormal scaling by direct summation."""
    row = np.asarray(row, dtype=np.float64)
    n = row.size
    out = np.empty(n)
    for k in range(n):
        s = 0.0
        for i in range(n):
            s += row[i] * math.cos(math.pi * k * (2 * i + 1) / (2 * n))
        out[k] = s * (math.sqrt(1.0 / n) if k == 0 else math.sqrt(2.0 / n))
    return out


def mel_formula(f):
    return 2595.0 * math.log10(1.0 + f / 700.0)


def inverse_mel_formula(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def mel_centers_closed_form(n_mels, f_min, f_max):
    lo, hi = mel_formula(f_min), mel_formula(f_max)
    return [inverse_mel_formula(lo + (hi - lo) * (i + 1) / (n_mels + 1)) for i in range(n_mels)]


def brute_force_recalls(preds, labels, k):
    """UAR/WAR by counting, one class at a time."""
    preds, labels = list(preds), list(labels)
    recalls = []
    for c in range(k):
        members = [i for i, y in enumerate(labels) if y == c]
        if members:
            recalls.append(sum(1 for i in members if preds[i] == c) / len(members))
    war = sum(1 for p, y in zip(preds, labels) if p == y) / len(labels)
    return sum(recalls) / len(recalls), war


def triple_loop_matmul(a, b):
    m, k = a.shape
    _, n = b.shape
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            for t in range(k):
                out[i, j] += a[i, t] * b[t, j]
    return out


def bilinear_corner_aligned(img, out_h, out_w):
    """Pixel-by-pixel bilinear resize with corners mapped onto corners."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    out = np.empty((out_h, out_w))
    for i in range(out_h):
        y = 0.0 if out_h == 1 else i * (h - 1) / (out_h - 1)
        y0 = min(int(math.floor(y)), h - 1)
        y1 = min(y0 + 1, h - 1)
        fy = y - y0
        for j in range(out_w):
            x = 0.0 if out_w == 1 else j * (w - 1) / (out_w - 1)
            x0 = min(int(math.floor(x)), w - 1)
            x1 = min(x0 + 1, w - 1)
            fx = x - x0
            top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
            bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
            out[i, j] = top * (1 - fy) + bot * fy
    return out


# ---------------------------------------------------------------------------
# A staged float64 forward pass of the pre-norm ViT classifier.
#
# Any one parameter may carry an extra leading batch axis holding B perturbed
# copies; numpy broadcasting then evaluates B losses at once. Each parameter
# is consumed by exactly one stage, so a perturbed run restarts from the
# clean activations cached just before that stage.
# ---------------------------------------------------------------------------


def _ln(x, g, b, eps):
    mu = x.mean(-1, keepdims=True)
    var = ((x - mu) ** 2).mean(-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * g + b


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def _vec(p, batched):
    """Lift a batched vector parameter ``(B, d)`` to ``(B, 1, d)``."""
    return p[:, None, :] if batched else p


class StagedViT:
    def __init__(self, arrays, depth, num_heads, eps, tokens, label):
        self.arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}
        self.depth = depth
        self.num_heads = num_heads
        self.eps = eps
        self.tokens = np.asarray(tokens, dtype=np.float64)
        self.label = int(label)
        self.stages = [("embed", ("patch_embed.weight", "patch_embed.bias", "pos_embed"))]
        for i in range(depth):
            b = f"block{i}"
            self.stages += [
                (f"{b}.norm1", (f"{b}.norm1.weight", f"{b}.norm1.bias")),
                (f"{b}.qkv", tuple(f"{b}.attn.{p}_{s}" for p in "qkv" for s in ("weight", "bias"))),
                (f"{b}.out", (f"{b}.attn.out_weight", f"{b}.attn.out_bias")),
                (f"{b}.norm2", (f"{b}.norm2.weight", f"{b}.norm2.bias")),
                (f"{b}.fc1", (f"{b}.mlp.fc1_weight", f"{b}.mlp.fc1_bias")),
                (f"{b}.fc2", (f"{b}.mlp.fc2_weight", f"{b}.mlp.fc2_bias")),
            ]
        self.stages.append(("head", ("head.weight", "head.bias")))
        self.stage_of = {name: i for i, (_, names) in enumerate(self.stages) for name in names}
        self.snapshots = []
        self.clean_loss = float(self._run(0, {}, None, record=True))

    def _run(self, start, state, batched, record=False):
        state = dict(state)
        for idx in range(start, len(self.stages)):
            if record:
                self.snapshots.append(dict(state))
            self._stage(idx, state, batched)
        return state["loss"]

    def _p(self, name, batched):
        value = batched[1] if batched is not None and batched[0] == name else self.arrays[name]
        return value, batched is not None and batched[0] == name

    def _stage(self, idx, s, batched):
        label, _ = self.stages[idx]
        p = lambda n: self._p(n, batched)[0]  # noqa: E731
        v = lambda n: _vec(*self._p(n, batched))  # noqa: E731
        if label == "embed":
            s["x"] = self.tokens @ p("patch_embed.weight") + v("patch_embed.bias") + p("pos_embed")
            return
        if label == "head":
            pooled = s["x"].mean(-2)
            w, wb = self._p("head.weight", batched)
            b = p("head.bias")
            logits = (pooled[..., None, :] @ w)[..., 0, :] + b if wb else pooled @ w + b
            z = logits - logits.max(-1, keepdims=True)
            s["loss"] = np.log(np.exp(z).sum(-1)) - z[..., self.label]
            return
        block, part = label.split(".")
        if part == "norm1":
            s["h"] = _ln(s["x"], v(f"{block}.norm1.weight"), v(f"{block}.norm1.bias"), self.eps)
        elif part == "qkv":
            a = f"{block}.attn"
            q, k, val = (s["h"] @ p(f"{a}.{n}_weight") + v(f"{a}.{n}_bias") for n in "qkv")
            d = q.shape[-1]
            dh = d // self.num_heads

            def heads(t):
                return np.swapaxes(t.reshape(t.shape[:-1] + (self.num_heads, dh)), -2, -3)

            q, k, val = heads(q), heads(k), heads(val)
            scores = q @ np.swapaxes(k, -1, -2) / math.sqrt(dh)
            scores = np.exp(scores - scores.max(-1, keepdims=True))
            scores /= scores.sum(-1, keepdims=True)
            ctx = np.swapaxes(scores @ val, -2, -3)
            s["ctx"] = ctx.reshape(ctx.shape[:-2] + (d,))
        elif part == "out":
            a = f"{block}.attn"
            s["x"] = s["x"] + s["ctx"] @ p(f"{a}.out_weight") + v(f"{a}.out_bias")
        elif part == "norm2":
            s["h"] = _ln(s["x"], v(f"{block}.norm2.weight"), v(f"{block}.norm2.bias"), self.eps)
        elif part == "fc1":
            m = f"{block}.mlp"
            s["a"] = _gelu(s["h"] @ p(f"{m}.fc1_weight") + v(f"{m}.fc1_bias"))
        elif part == "fc2":
            m = f"{block}.mlp"
            s["x"] = s["x"] + s["a"] @ p(f"{m}.fc2_weight") + v(f"{m}.fc2_bias")

    def fd_gradient(self, name, step=1e-5, chunk=128, entries=None):
        """Central differences for every entry (or the given flat entries) of ``name``."""
        base = self.arrays[name]
        flat_idx = np.arange(base.size) if entries is None else np.asarray(entries)
        start = self.stage_of[name]
        state = self.snapshots[start]
        out = np.empty(flat_idx.size)
        for lo in range(0, flat_idx.size, chunk):
            idx = flat_idx[lo : lo + chunk]
            rows = np.arange(idx.size)
            copies = np.repeat(base.reshape(1, -1), idx.size, axis=0)
            plus, minus = copies.copy(), copies
            plus[rows, idx] += step
            minus[rows, idx] -= step
            shape = (idx.size,) + base.shape
            lp = self._run(start, state, (name, plus.reshape(shape)))
            lm = self._run(start, state, (name, minus.reshape(shape)))
            out[lo : lo + idx.size] = (lp - lm) / (2 * step)
        return out


def gradient_mismatches(analytic, numeric, rel_tol=1e-4, abs_tol=1e-6):
    """Indices where neither the absolute nor the relative criterion holds."""
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    ok = (diff <= abs_tol) | (diff <= rel_tol * scale)
    return np.flatnonzero(~ok), diff, scale
