"""Raster I/O, circular neighborhood sampling and window cropping.

Images are plain numpy arrays: a gray plane is ``(height, width)`` uint8 and
an RGB image is ``(height, width, 3)`` uint8 with planes ordered R, G, B.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

# interpolated samples closer than this to an integer are snapped onto it,
# so exact mathematical ties survive floating point rounding
SNAP_TOL = 1e-9


class ImageFormatError(ValueError):
    pass


@dataclass(frozen=True)
class OperatorParams:
    """Neighbor count ``P``, radius ``R`` and uniformity threshold."""

    P: int = 8
    R: int = 1
    u_threshold: int | None = None

    def __post_init__(self):
        if self.P < 4:
            raise ValueError(f"P must be >= 4, got {self.P}")
        if self.R < 1:
            raise ValueError(f"R must be >= 1, got {self.R}")
        if self.u_threshold is None:
            object.__setattr__(self, "u_threshold", self.P // 4)

    @property
    def n_labels(self) -> int:
        return self.P + 2

    def __str__(self):
        return f"{self.P},{self.R}"


@dataclass(frozen=True)
class NeighborhoodSample:
    center: float
    neighbors: tuple[float, ...]


def load_image(path) -> np.ndarray:
    """Read a PNG or binary PPM/PGM file into an ``(H, W, 3)`` uint8 array.

    Gray sources are replicated into all three planes.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "PPM"):
                raise ImageFormatError(f"unsupported format: {im.format}")
            im.load()
            mode = im.mode
            if mode in ("L", "P", "1", "LA"):
                arr = np.asarray(im.convert("L"))
                arr = np.repeat(arr[:, :, None], 3, axis=2)
            elif mode in ("RGB", "RGBA"):
                arr = np.asarray(im.convert("RGB"))
            else:
                raise ImageFormatError(f"unsupported format: mode {mode}")
    except (UnidentifiedImageError, SyntaxError, OSError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise ImageFormatError(f"unsupported format: {path}") from exc
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ImageFormatError(f"zero-dimension image: {path}")
    return np.ascontiguousarray(arr, dtype=np.uint8)


def save_image(path, image: np.ndarray) -> None:
    """Write an RGB or gray uint8 array; the format follows the suffix."""
    arr = np.asarray(image, dtype=np.uint8)
    Image.fromarray(arr, mode="RGB" if arr.ndim == 3 else "L").save(path)


def as_rgb(image) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("zero-dimension image")
    return arr


def neighbor_offsets(params: OperatorParams) -> np.ndarray:
    """``(P, 2)`` array of (dx, dy) offsets, neighbor 0 due east, counter-clockwise.

    The y axis points down (row index), hence the minus on the sine term.
    """
    k = np.arange(params.P)
    angle = 2.0 * np.pi * k / params.P
    dx = params.R * np.cos(angle)
    dy = -params.R * np.sin(angle)
    off = np.stack([dx, dy], axis=1)
    # kill the 1e-16 residue of cos(pi/2) and friends
    nearest = np.rint(off)
    return np.where(np.abs(off - nearest) < SNAP_TOL, nearest, off) + 0.0


def interior_shape(shape, R: int) -> tuple[int, int]:
    h, w = shape[:2]
    return h - 2 * R, w - 2 * R


def check_size(shape, R: int) -> None:
    h, w = shape[:2]
    if h < 2 * R + 1 or w < 2 * R + 1:
        raise ValueError(
            f"image {w}x{h} too small for radius {R} "
            f"(needs at least {2 * R + 1}x{2 * R + 1})"
        )


def _snap(values: np.ndarray) -> np.ndarray:
    nearest = np.rint(values)
    return np.where(np.abs(values - nearest) < SNAP_TOL, nearest, values)


def sample_points(plane, ys, xs, params: OperatorParams, counter=None) -> np.ndarray:
    """Bilinearly sampled circular neighbors of the pixels ``(ys, xs)``.

    Returns a ``(P, n)`` float array. Callers guarantee every pixel lies at
    least ``R`` pixels from the border.
    """
    plane = np.asarray(plane, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.intp)
    xs = np.asarray(xs, dtype=np.intp)
    out = np.empty((params.P, ys.size), dtype=np.float64)
    for k, (ox, oy) in enumerate(neighbor_offsets(params)):
        fx, fy = np.floor(ox), np.floor(oy)
        tx, ty = ox - fx, oy - fy
        x0 = xs + int(fx)
        y0 = ys + int(fy)
        # lerp form: exact whenever the corners agree
        top = plane[y0, x0]
        if tx:
            top = top + tx * (plane[y0, x0 + 1] - top)
        if ty:
            bottom = plane[y0 + 1, x0]
            if tx:
                bottom = bottom + tx * (plane[y0 + 1, x0 + 1] - bottom)
            val = top + ty * (bottom - top)
        else:
            val = top
        if counter is not None and (tx or ty):
            n = ys.size
            lerps = 3 if tx and ty else 1
            counter.add_aux("interpolation", "multiplications", lerps * n)
            counter.add_aux("interpolation", "additions", lerps * n)
            counter.add_aux("interpolation", "subtractions", lerps * n)
        out[k] = val
    return _snap(out)


def interior_coords(shape, R: int, mask=None) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of interior pixels, optionally restricted by ``mask``.

    ``mask`` is a boolean array over the interior, ``(H - 2R, W - 2R)``.
    """
    ih, iw = interior_shape(shape, R)
    if mask is None:
        yy, xx = np.mgrid[0:ih, 0:iw]
        return yy.ravel() + R, xx.ravel() + R
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (ih, iw):
        raise ValueError(f"mask shape {mask.shape} does not match interior {(ih, iw)}")
    yy, xx = np.nonzero(mask)
    return yy + R, xx + R


def sample_neighborhood(plane, x: int, y: int, params: OperatorParams) -> NeighborhoodSample:
    plane = np.asarray(plane)
    h, w = plane.shape
    R = params.R
    if not (R <= x < w - R and R <= y < h - R):
        raise ValueError(f"pixel ({x}, {y}) closer than R={R} to the border")
    vals = sample_points(plane, [y], [x], params)[:, 0]
    return NeighborhoodSample(float(plane[y, x]), tuple(float(v) for v in vals))


def crop_windows(image, w: int, h: int) -> list[np.ndarray]:
    """Non-overlapping ``w`` x ``h`` windows, row-major from the top-left.

    Remainder rows/columns that do not fill a whole window are dropped.
    """
    image = np.asarray(image)
    height, width = image.shape[:2]
    if w <= 0 or h <= 0:
        raise ValueError("window size must be positive")
    if w > width or h > height:
        raise ValueError(f"window {w}x{h} larger than image {width}x{height}")
    return [
        image[r * h:(r + 1) * h, c * w:(c + 1) * w]
        for r, c in window_grid(width, height, w, h)
    ]


def window_grid(width: int, height: int, w: int, h: int) -> list[tuple[int, int]]:
    return [(r, c) for r in range(height // h) for c in range(width // w)]


def mean_plane(image) -> np.ndarray:
    """Per-pixel mean of R, G, B rounded to the nearest integer."""
    image = as_rgb(image)
    s = image.astype(np.int32).sum(axis=2)
    # s/3 is never exactly .5 away from an integer, so plain rounding is safe
    return ((2 * s + 3) // 6).astype(np.uint8)
