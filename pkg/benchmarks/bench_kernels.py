"""Compare the compiled and pure-numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--preset desk|full]

Times each row kernel on activation-sized inputs, then one full forward and
backward pass of the model, under every available backend.
"""

import argparse
import time

import numpy as np

from mmder import _kernels, numerics as nm
from mmder.model import ModelConfig, forward, init_params


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(cfg, rng):
    n, d, h = cfg.num_tokens, cfg.embed_dim, cfg.hidden_dim
    x = rng.normal(size=(8, n, d)).astype(np.float32)
    act = rng.normal(size=(8, n, h)).astype(np.float32)
    scores = rng.normal(size=(8, cfg.num_heads, n, n)).astype(np.float32)
    gamma, beta = np.ones(d, np.float32), np.zeros(d, np.float32)
    y, xhat, rstd = _kernels.layer_norm(x, gamma, beta, 1e-6)
    probs = _kernels.softmax_rows(scores)
    return {
        "softmax": lambda: _kernels.softmax_rows(scores),
        "softmax_backward": lambda: _kernels.softmax_rows_backward(probs, scores),
        "layer_norm": lambda: _kernels.layer_norm(x, gamma, beta, 1e-6),
        "layer_norm_backward": lambda: _kernels.layer_norm_backward(x, xhat, rstd, gamma),
        "gelu": lambda: _kernels.gelu(act),
        "gelu_backward": lambda: _kernels.gelu_backward(act, act),
        "bilinear_resize": lambda: _kernels.bilinear_resize(scores[0, 0, :197, :128], 224, 224),
    }


def model_step(cfg, rng):
    params = init_params(cfg, seed=0)
    tokens = rng.normal(size=(4, cfg.num_tokens, cfg.token_dim)).astype(np.float32)
    labels = np.arange(4) % cfg.num_classes

    def step():
        params.zero_grad()
        nm.backward(nm.cross_entropy(forward(tokens, params), labels), store=False)

    return step


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--preset", choices=("desk", "full"), default="desk")
    args = parser.parse_args()
    cfg = ModelConfig.preset(args.preset)
    if args.preset == "full":
        cfg = ModelConfig.preset("full", depth=1)
    backends = _kernels.available_backends()
    results = {}
    # the first pass is an untimed warm-up so neither backend pays for
    # allocator and BLAS start-up
    for timed in (False, True):
        for name in backends:
            previous = _kernels.use_backend(name)
            rng = np.random.default_rng(0)
            cases = kernel_cases(cfg, rng)
            cases["forward+backward (batch 4)"] = model_step(cfg, rng)
            results[name] = {k: best_of(fn, args.repeat if timed else 1) for k, fn in cases.items()}
            _kernels.use_backend(previous)

    print(f"preset {args.preset}: N={cfg.num_tokens} D={cfg.embed_dim} depth={cfg.depth}; best of {args.repeat}")
    header = f"{'kernel':<28}" + "".join(f"{b + ' ms':>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for case in results[backends[0]]:
        row = f"{case:<28}" + "".join(f"{1e3 * results[b][case]:>14.3f}" for b in backends)
        if len(backends) == 2:
            row += f"{results['python'][case] / results['compiled'][case]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
