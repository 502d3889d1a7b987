"""Salt-and-pepper impulse noise and its per-pixel channel footprint.

Every (pixel, plane) cell is corrupted independently with probability
``ratio``. Random stream (numpy PCG64 seeded with ``seed``): one uniform draw
per cell in row-major pixel order, planes R, G, B; then one uniform draw per
corrupted cell, in the same order, choosing salt (255) below 0.5 and pepper (0)
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, expm1, log1p

import numpy as np

from colorlbp.image import as_rgb

SALT, PEPPER = 255, 0


@dataclass(frozen=True)
class NoiseSpec:
    ratio: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"noise ratio must lie in [0, 1], got {self.ratio}")


@dataclass
class ChannelEffectStats:
    counts: dict = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})

    @property
    def total_noisy(self) -> int:
        return sum(self.counts.values())

    @property
    def fractions(self) -> dict:
        total = self.total_noisy
        if total == 0:
            return {}
        return {k: v / total for k, v in self.counts.items()}

    def merge(self, other: "ChannelEffectStats") -> "ChannelEffectStats":
        return ChannelEffectStats({k: self.counts[k] + other.counts[k] for k in (1, 2, 3)})


def apply_impulse_noise(image, spec: NoiseSpec) -> np.ndarray:
    image = as_rgb(image)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    hit = rng.random(image.shape) < spec.ratio
    out = image.copy()
    salt = rng.random(int(np.count_nonzero(hit))) < 0.5
    out[hit] = np.where(salt, SALT, PEPPER).astype(np.uint8)
    return out


def channel_effect_stats(clean, noisy) -> ChannelEffectStats:
    """Count pixels by how many planes actually changed value (1, 2 or 3)."""
    clean, noisy = as_rgb(clean), as_rgb(noisy)
    if clean.shape != noisy.shape:
        raise ValueError(f"shape mismatch: {clean.shape} vs {noisy.shape}")
    changed = np.count_nonzero(clean != noisy, axis=2)
    per_k = np.bincount(changed.ravel(), minlength=4)
    return ChannelEffectStats({k: int(per_k[k]) for k in (1, 2, 3)})


def expected_channel_effect(ratio: float, noop: float = 0.0) -> dict:
    """Binomial share of noisy pixels hit in exactly K planes, given at least one.

    ``noop`` is the chance that a corrupted cell already held the replacement
    value and so shows no change; the default ignores this.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie strictly inside (0, 1), got {ratio}")
    if not 0.0 <= noop < 1.0:
        raise ValueError(f"noop must lie in [0, 1), got {noop}")
    p = ratio * (1.0 - noop)
    # 1 - (1 - p)^3 without cancellation for small p
    any_hit = -expm1(3.0 * log1p(-p))
    return {
        k: comb(3, k) * p**k * (1.0 - p) ** (3 - k) / any_hit
        for k in (1, 2, 3)
    }
