"""Seeded random streams.

Uniform variates come from numpy's PCG64 (128-bit LCG state, 64-bit
permuted output, XSL-RR).  Normal variates are produced here with the basic
Box-Muller transform, so the Gaussian stream depends only on PCG64's
documented ``random()`` output and not on numpy's ziggurat sampler.

Independent streams for sweeps are derived from ``(master_seed, *indices)``
through :class:`numpy.random.SeedSequence`, so a run's randomness does not
depend on which other runs execute or in which order.
"""
from __future__ import annotations

import math

import numpy as np


def derive_seed(master_seed: int, *indices: int) -> int:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(i) for i in indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def uniform_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def box_muller(u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map uniforms on ``[0, 1)`` to two independent standard normal arrays."""
    r = np.sqrt(-2.0 * np.log1p(-u1))  # log(1 - u1), finite since u1 < 1
    phi = 2.0 * math.pi * u2
    return r * np.cos(phi), r * np.sin(phi)


def gaussian_source(seed: int, n: int, std: float = 1.0) -> np.ndarray:
    """``n`` normal deviates with standard deviation ``std``; deterministic per seed."""
    if std <= 0:
        raise ValueError("std must be positive")
    if n < 0:
        raise ValueError("n must be >= 0")
    pairs = (n + 1) // 2
    u = uniform_stream(seed).random(2 * pairs)
    z0, z1 = box_muller(u[0::2], u[1::2])
    z = np.empty(2 * pairs)
    z[0::2] = z0
    z[1::2] = z1
    return std * z[:n]


def initial_condition(seed: int) -> float:
    """Orbit starting point in (0.05, 0.95) drawn from the seed."""
    return 0.05 + 0.9 * float(uniform_stream(seed).random())
