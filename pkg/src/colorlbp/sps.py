"""Significant points selection.

A pixel is significant when its local significance value (mean neighbor
difference magnitude) is strictly above the image-wide mean of that value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from colorlbp.image import (
    OperatorParams,
    check_size,
    interior_coords,
    interior_shape,
    mean_plane,
    sample_points,
)

LSV_MODES = ("absolute", "signed")


@dataclass
class SignificanceMask:
    selected: np.ndarray
    gsv: float
    fallback_used: bool
    params: OperatorParams
    mode: str = "absolute"

    @property
    def selected_count(self) -> int:
        return int(np.count_nonzero(self.selected))

    @property
    def interior_size(self) -> int:
        return int(self.selected.size)

    def summary(self) -> dict:
        return {
            "P": self.params.P,
            "R": self.params.R,
            "selected_count": self.selected_count,
            "interior_size": self.interior_size,
            "gsv": self.gsv,
            "fallback_used": self.fallback_used,
            "lsv_mode": self.mode,
        }

    def to_pgm(self, path) -> None:
        from colorlbp.image import save_image

        save_image(path, np.where(self.selected, 255, 0).astype(np.uint8))


def _check_mode(mode):
    if mode not in LSV_MODES:
        raise ValueError(f"unknown LSV mode {mode!r}, expected one of {LSV_MODES}")


def lsv_map(plane, params: OperatorParams, mode: str = "absolute", counter=None) -> np.ndarray:
    """Local significance value of every interior pixel, shape ``(H-2R, W-2R)``."""
    _check_mode(mode)
    plane = np.asarray(plane)
    check_size(plane.shape, params.R)
    ys, xs = interior_coords(plane.shape, params.R)
    diff = sample_points(plane, ys, xs, params) - plane[ys, xs].astype(np.float64)
    if mode == "absolute":
        diff = np.abs(diff)
    if counter is not None:
        n = diff.size
        counter.add_aux("sps", "subtractions", n)
        counter.add_aux("sps", "additions", n)
        counter.add_aux("sps", "divisions", ys.size)
    return (diff.sum(axis=0) / params.P).reshape(interior_shape(plane.shape, params.R))


def lsv(plane, x: int, y: int, params: OperatorParams, mode: str = "absolute") -> float:
    _check_mode(mode)
    plane = np.asarray(plane)
    h, w = plane.shape
    R = params.R
    if not (R <= x < w - R and R <= y < h - R):
        raise ValueError(f"pixel ({x}, {y}) closer than R={R} to the border")
    diff = sample_points(plane, [y], [x], params)[:, 0] - float(plane[y, x])
    if mode == "absolute":
        diff = np.abs(diff)
    return float(diff.sum() / params.P)


def _mean(values: np.ndarray) -> float:
    # exactly rounded sum: independent of traversal order
    return math.fsum(values.ravel().tolist()) / values.size


def gsv(plane, params: OperatorParams, mode: str = "absolute") -> float:
    return _mean(lsv_map(plane, params, mode))


def significance_mask(image, params: OperatorParams, mode: str = "absolute", counter=None) -> SignificanceMask:
    """Mask of interior pixels whose LSV exceeds the GSV.

    Color images are reduced to their mean plane first so a single mask gates
    every descriptor block. If nothing qualifies (flat image) every interior
    pixel is selected and ``fallback_used`` is set.
    """
    arr = np.asarray(image)
    plane = arr if arr.ndim == 2 else mean_plane(arr)
    values = lsv_map(plane, params, mode, counter)
    g = _mean(values)
    selected = values > g
    if counter is not None:
        counter.add_aux("sps", "additions", values.size)
        counter.add_aux("sps", "divisions", 1)
        counter.add_aux("sps", "comparisons", values.size)
    fallback = not selected.any()
    if fallback:
        selected = np.ones_like(selected)
    return SignificanceMask(selected, g, fallback, params, mode)
