"""Gray-level LBP codes, rotation-invariant uniform labels and label histograms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from colorlbp.image import (
    NeighborhoodSample,
    OperatorParams,
    check_size,
    interior_coords,
    interior_shape,
    sample_points,
)

UNLABELED = -1


def omega(x: float) -> int:
    return 1 if x >= 0 else 0


def lbp_code(sample: NeighborhoodSample) -> int:
    return sum(omega(f - sample.center) << k for k, f in enumerate(sample.neighbors))


def rotate_right(code: int, i: int, P: int) -> int:
    i %= P
    mask = (1 << P) - 1
    return ((code >> i) | (code << (P - i))) & mask


def ror_min(code: int, P: int = 8) -> int:
    """Smallest value among all circular right rotations of ``code``."""
    return min(rotate_right(code, i, P) for i in range(P))


def uniformity(code: int, P: int = 8) -> int:
    """Number of 0/1 transitions around the closed ring of ``P`` bits."""
    bits = [(code >> k) & 1 for k in range(P)]
    return sum(bits[k] != bits[k - 1] for k in range(P))


def riu_from_code(code: int, params: OperatorParams) -> int:
    if uniformity(code, params.P) <= params.u_threshold:
        return bin(code).count("1")
    return params.P + 1


def riu_label(sample: NeighborhoodSample, params: OperatorParams) -> int:
    return riu_from_code(lbp_code(sample), params)


def riu_labels_from_bits(bits: np.ndarray, params: OperatorParams, counter=None) -> np.ndarray:
    """Labels for a ``(P, n)`` 0/1 bit array, one column per neighborhood.

    Works for any ``P`` since the integer code is never materialised; popcount
    and transition count are both rotation invariant so no ROR step is needed.
    """
    bits = np.asarray(bits, dtype=np.int8)
    ones = np.zeros(bits.shape[1], dtype=np.int64)
    for k in range(params.P):
        ones += bits[k]
    if counter is not None:
        counter.add("additions", bits.size)
    transitions = np.count_nonzero(bits != np.roll(bits, 1, axis=0), axis=0)
    return np.where(transitions <= params.u_threshold, ones, params.P + 1)


@dataclass
class LabelMap:
    """riu labels over the valid interior; ``UNLABELED`` marks masked-out pixels."""

    labels: np.ndarray
    params: OperatorParams
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.labels.shape

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.labels != UNLABELED))


def _mask_array(mask):
    if mask is None:
        return None
    return getattr(mask, "selected", mask)


def label_map(plane, params: OperatorParams, mask=None, counter=None) -> LabelMap:
    """riu labels of every interior pixel of ``plane`` (or only the masked ones)."""
    plane = np.asarray(plane)
    check_size(plane.shape, params.R)
    sel = _mask_array(mask)
    ys, xs = interior_coords(plane.shape, params.R, sel)
    nbrs = sample_points(plane, ys, xs, params, counter)
    center = plane[ys, xs].astype(np.float64)
    diff = nbrs - center
    bits = diff >= 0
    if counter is not None:
        counter.add("subtractions", diff.size)
        counter.add("comparisons", diff.size)
    labels = np.full(interior_shape(plane.shape, params.R), UNLABELED, dtype=np.int64)
    labels[ys - params.R, xs - params.R] = riu_labels_from_bits(bits, params, counter)
    return LabelMap(labels, params)


def label_counts(lmap: LabelMap) -> np.ndarray:
    valid = lmap.labels[lmap.labels != UNLABELED]
    return np.bincount(valid, minlength=lmap.params.n_labels).astype(np.int64)


def label_histogram(lmap: LabelMap, counter=None) -> np.ndarray:
    """Occurrence probability of each of the ``P + 2`` labels.

    Normalised by the number of labeled pixels, so the bins sum to one for any
    image size or mask.
    """
    counts = label_counts(lmap)
    total = counts.sum()
    if total == 0:
        raise ValueError("empty label map: no labeled pixels to histogram")
    if counter is not None:
        counter.add_aux("histogram", "additions", int(total))
        counter.add_aux("histogram", "divisions", counts.size)
    return counts / total
