"""Parameter initializers."""

import numpy as np


def trunc_normal(rng, shape, std=0.02, bound=2.0):
    """Normal(0, std) samples redrawn until they fall inside ``±bound·std``."""
    out = rng.standard_normal(shape)
    bad = np.abs(out) > bound
    while bad.any():
        out[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(out) > bound
    return out * std


def sinusoidal_table(length, dim):
    """Fixed sine/cosine position table of shape ``(length, dim)``.

    Even columns hold ``sin(pos / 10000**(2i/dim))``, odd columns the cosine.
    """
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(i / 2.0) / dim)
    table = np.empty((length, dim))
    table[:, 0::2] = np.sin(angle[:, 0::2])
    table[:, 1::2] = np.cos(angle[:, 1::2])
    return table
