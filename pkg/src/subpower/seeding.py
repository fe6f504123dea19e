"""Deterministic random streams.

All randomness in the package flows through explicitly seeded
counter-based generators (Philox).  Independent streams are derived from
a 64-bit base seed plus an arbitrary tuple of labels, so parallel trials
can each own a stream without coordination.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = ["make_rng", "derive_rng", "as_rng"]


def _encode(part) -> int:
    """Map a seed-path component to a stable nonnegative integer."""
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    if isinstance(part, float):
        return struct.unpack("<Q", struct.pack("<d", part))[0]
    if isinstance(part, str):
        return int.from_bytes(part.encode("utf-8"), "little")
    raise TypeError(f"cannot derive a seed from {type(part).__name__}")


def make_rng(seed: int) -> np.random.Generator:
    """Generator for the stream identified by ``seed`` alone."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_encode(seed))))


def derive_rng(seed: int, *parts) -> np.random.Generator:
    """Generator for the sub-stream ``(seed, *parts)``.

    Parts may be ints, floats (matched bit-exactly) or short strings.
    The same tuple always yields the same stream.
    """
    entropy = [_encode(seed)] + [_encode(p) for p in parts]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def as_rng(rng) -> np.random.Generator:
    """Accept either a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return make_rng(int(rng))
    raise TypeError("expected a numpy Generator or an integer seed")


def unit_sphere(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Draw one point uniformly from the unit sphere in R^dim."""
    while True:
        g = rng.standard_normal(dim)
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            return g / norm
