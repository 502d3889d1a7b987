"""Seeded synthetic color-texture corpus used when no licensed dataset is at hand.

Four classes, each a texture family with its own color pair:

* ``flat``      - near-uniform field with faint grain
* ``checker``   - checkerboard of random cell size and phase
* ``stripes``   - oriented bars of random period
* ``sinusoid``  - random-phase plaid of two sinusoids
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from colorlbp.image import save_image

CLASSES = ("flat", "checker", "stripes", "sinusoid")

_PALETTES = {
    "flat": ((150, 110, 70), (150, 110, 70)),
    "checker": ((200, 60, 60), (60, 60, 190)),
    "stripes": ((60, 170, 70), (220, 210, 90)),
    "sinusoid": ((90, 60, 150), (210, 160, 120)),
}


def _mix(a, b, t):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a + (b - a) * t[..., None]


def texture(kind: str, size: int, rng: np.random.Generator) -> np.ndarray:
    """One ``size`` x ``size`` RGB sample of texture family ``kind``."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    lo, hi = _PALETTES[kind]
    shift = rng.uniform(-15, 15, size=3)
    lo = np.asarray(lo) + shift
    hi = np.asarray(hi) + shift
    if kind == "flat":
        t = np.zeros((size, size))
    elif kind == "checker":
        cell = rng.integers(4, 9)
        ox, oy = rng.integers(0, cell, size=2)
        t = (((xx + ox) // cell + (yy + oy) // cell) % 2).astype(np.float64)
    elif kind == "stripes":
        period = rng.uniform(6, 12)
        theta = rng.uniform(0, np.pi)
        u = xx * np.cos(theta) + yy * np.sin(theta)
        t = (np.sin(2 * np.pi * u / period + rng.uniform(0, 2 * np.pi)) > 0).astype(np.float64)
    elif kind == "sinusoid":
        t = np.zeros((size, size))
        for _ in range(2):
            period = rng.uniform(8, 20)
            theta = rng.uniform(0, np.pi)
            u = xx * np.cos(theta) + yy * np.sin(theta)
            t += 0.25 * (1 + np.sin(2 * np.pi * u / period + rng.uniform(0, 2 * np.pi)))
    else:
        raise ValueError(f"unknown texture kind {kind!r}")
    img = _mix(lo, hi, t) + rng.normal(0, 2.0, size=(size, size, 3))
    return np.clip(np.rint(img), 1, 254).astype(np.uint8)


def synthetic_corpus(seed: int = 0, per_class: int = 25, size: int = 64):
    """Return ``(images, labels)`` with ``per_class`` samples of every class."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for kind in CLASSES:
        for _ in range(per_class):
            images.append(texture(kind, size, rng))
            labels.append(kind)
    return images, labels


def write_corpus(root, seed: int = 0, per_class: int = 25, size: int = 64) -> list[Path]:
    """Write the corpus as ``root/<class>/<class>_<nn>.png``."""
    root = Path(root)
    images, labels = synthetic_corpus(seed, per_class, size)
    paths = []
    counters = dict.fromkeys(CLASSES, 0)
    for img, label in zip(images, labels):
        d = root / label
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"{label}_{counters[label]:03d}.png"
        counters[label] += 1
        save_image(path, img)
        paths.append(path)
    return paths
