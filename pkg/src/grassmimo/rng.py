"""Reproducible, splittable random streams.

A stream is identified by ``(master_seed, stream_id)``.  The pair is folded
into a single 64-bit key with splitmix64 and handed to numpy's PCG64, so a
given pair always produces the same draws and distinct stream ids give
independent generators.
"""
from __future__ import annotations

import numpy as np

__all__ = ["SeededRng", "mix64", "stream_id_for", "complex_normal"]

_MASK = (1 << 64) - 1


def mix64(x: int) -> int:
    """splitmix64 finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def stream_id_for(*parts: int) -> int:
    """Fold several nonnegative integers (grid index, block index, ...) into one id."""
    h = 0
    for p in parts:
        h = mix64(h ^ (int(p) & _MASK))
    return h


class SeededRng:
    """A numpy ``Generator`` bound to ``(master_seed, stream_id)``.

    Attributes not defined here are forwarded to the underlying generator,
    so ``rng.standard_normal(...)`` and friends work directly.
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed) & _MASK
        self.stream_id = int(stream_id) & _MASK
        key = mix64(self.master_seed ^ mix64(self.stream_id))
        self.generator = np.random.Generator(np.random.PCG64(key))

    def __getattr__(self, name):
        return getattr(self.generator, name)

    def __repr__(self):
        return f"SeededRng(master_seed={self.master_seed:#x}, stream_id={self.stream_id})"


def complex_normal(rng, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries: real and imaginary parts each N(0, 1/2)."""
    gen = rng.generator if isinstance(rng, SeededRng) else rng
    out = gen.standard_normal(tuple(shape) + (2,))
    out *= np.sqrt(0.5)
    return out.view(np.complex128)[..., 0]
