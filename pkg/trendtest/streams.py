"""Seeded random substreams and inversion samplers.

Every random draw in the package comes from a generator returned by
:func:`substream`, keyed by the master seed and a tuple of indices, so a
replicate's values depend on its key only and never on evaluation order.
"""

from typing import Literal

import numpy as np
from scipy import special

Family = Literal["normal", "logistic"]

_TINY = np.finfo(float).tiny

_QUANTILES = {
    "normal": special.ndtri,
    "logistic": special.logit,
}


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream addressed by ``(seed, *key)``."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def open_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniforms on (0, 1); ``Generator.random`` can return exactly 0."""
    return np.maximum(rng.random(size), _TINY)


def location_variates(
    rng: np.random.Generator, size: int, family: Family = "normal"
) -> np.ndarray:
    """Standard variates of ``family`` by inversion of the stream's uniforms."""
    return _QUANTILES[family](open_uniforms(rng, size))
