"""Reproducible random streams.

Every randomized routine in this package draws from a substream addressed by
(seed, *indices).  The address is hashed through a splitmix64-style finalizer
into the seed of an independent PCG64 generator, so results never depend on
scheduling order or thread count: work item k always sees the same bits.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Largest double strictly below 1.0.  See uniform_open01.
_BELOW_ONE = 1.0 - 2.0**-53


def _splitmix64(x: int) -> int:
    """One round of the splitmix64 output finalizer (Steele et al.)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _mix_str(label: str) -> int:
    h = 0xCBF29CE484222325  # FNV-1a offset basis
    for b in label.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


def substream_seed(seed: int, *indices: int | str) -> int:
    """Collapse (seed, *indices) into a single 64-bit substream seed.

    Integer indices are mixed directly; string indices (metric ids, scenario
    names) are FNV-hashed first.  Chaining the finalizer round per component
    keeps distinct addresses decorrelated.
    """
    acc = _splitmix64(seed & _MASK64)
    for ix in indices:
        part = _mix_str(ix) if isinstance(ix, str) else ix & _MASK64
        acc = _splitmix64((acc ^ part) & _MASK64)
    return acc


def generator(seed: int, *indices: int | str) -> np.random.Generator:
    """PCG64 generator for the substream addressed by (seed, *indices)."""
    return np.random.Generator(np.random.PCG64(substream_seed(seed, *indices)))


def uniform_open01(gen: np.random.Generator, size: int) -> np.ndarray:
    """Uniforms strictly inside (0, 1), suitable for inverse transforms.

    Draws 53-bit integers k and returns (k + 0.5) * 2^-53.  The midpoint
    offset keeps the result away from 0; the top of the range needs an
    explicit clamp because round-half-even sends k = 2^53 - 1 to exactly
    1.0 in double arithmetic, which would blow up quantile functions with
    a pole at 1 (Pareto).
    """
    k = gen.integers(0, 1 << 53, size=size, dtype=np.uint64)
    u = (k.astype(np.float64) + 0.5) * 2.0**-53
    return np.minimum(u, _BELOW_ONE)
