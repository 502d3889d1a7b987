"""Color texture descriptors: per-plane LBP histograms and the hybrid AND-fused operator.

The hybrid bit of a neighbor is set only when the neighbor is strictly
brighter than the center in all three planes, so an impulse hitting one or
two planes of a pixel rarely changes the code. Hybrid codes then go through
the same rotation-invariant uniform labeling as gray codes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from colorlbp.image import (
    OperatorParams,
    as_rgb,
    check_size,
    interior_coords,
    interior_shape,
    sample_points,
)
from colorlbp.lbp import UNLABELED, LabelMap, label_histogram, label_map, riu_labels_from_bits
from colorlbp.sps import significance_mask

PLANE_BLOCKS = ("D_R", "D_G", "D_B")
HYBRID_BLOCK = "D_H"
NORMALIZATION_NOTE = "bins divided by labeled interior pixel count"


@dataclass(frozen=True)
class Block:
    name: str
    P: int
    R: int
    offset: int
    length: int
    masked: bool = False


@dataclass
class Descriptor:
    """Concatenated label histograms with their block layout."""

    bins: np.ndarray
    blocks: list[Block]
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.bins.size)

    def block(self, name: str, P: int | None = None, R: int | None = None) -> np.ndarray:
        for b in self.blocks:
            if b.name == name and P in (None, b.P) and R in (None, b.R):
                return self.bins[b.offset:b.offset + b.length]
        raise KeyError(name)

    @classmethod
    def concat(cls, parts) -> "Descriptor":
        parts = list(parts)
        if not parts:
            raise ValueError("nothing to concatenate")
        blocks, offset = [], 0
        for part in parts:
            for b in part.blocks:
                blocks.append(Block(b.name, b.P, b.R, offset + b.offset, b.length, b.masked))
            offset += len(part)
        meta = {"normalization": NORMALIZATION_NOTE}
        masks = [m for p in parts for m in p.meta.get("masks", [])]
        if masks:
            meta["masks"] = masks
        return cls(np.concatenate([p.bins for p in parts]), blocks, meta)

    def to_json_dict(self) -> dict:
        out = {
            "blocks": [
                {
                    "name": b.name,
                    "P": b.P,
                    "R": b.R,
                    "masked": b.masked,
                    "bins": [float(v) for v in self.bins[b.offset:b.offset + b.length]],
                }
                for b in self.blocks
            ]
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Descriptor":
        blocks, bins, offset = [], [], 0
        for b in obj["blocks"]:
            n = len(b["bins"])
            blocks.append(Block(b["name"], b["P"], b["R"], offset, n, b.get("masked", False)))
            bins.extend(b["bins"])
            offset += n
        return cls(np.array(bins, dtype=np.float64), blocks, dict(obj.get("meta", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Descriptor":
        return cls.from_json_dict(json.loads(text))

    def column_names(self) -> list[str]:
        return [f"{b.name}_{b.P}_{b.R}_{i}" for b in self.blocks for i in range(b.length)]


def hclbp_bit(center_rgb, neighbor_rgb) -> int:
    bits = [1 if n - c > 0 else 0 for c, n in zip(center_rgb, neighbor_rgb)]
    return bits[0] * bits[1] * bits[2]


def hclbp_label_map(image, params: OperatorParams, mask=None, counter=None) -> LabelMap:
    image = as_rgb(image)
    check_size(image.shape, params.R)
    sel = None if mask is None else getattr(mask, "selected", mask)
    ys, xs = interior_coords(image.shape, params.R, sel)
    fused = None
    for i in range(3):
        plane = image[:, :, i]
        diff = sample_points(plane, ys, xs, params, counter) - plane[ys, xs].astype(np.float64)
        omega = (diff > 0).astype(np.int8)
        fused = omega if fused is None else fused * omega
    if counter is not None:
        n = params.P * ys.size
        counter.add("subtractions", n)
        counter.add("comparisons", n)
        counter.add("multiplications", 2 * n)
    labels = np.full(interior_shape(image.shape, params.R), UNLABELED, dtype=np.int64)
    labels[ys - params.R, xs - params.R] = riu_labels_from_bits(fused, params, counter)
    return LabelMap(labels, params)


def _block(name, params, hist, masked):
    return Descriptor(hist, [Block(name, params.P, params.R, 0, hist.size, masked)])


def color_descriptor(
    image,
    params: OperatorParams,
    include_hclbp: bool = True,
    mask=None,
    hclbp_only: bool = False,
) -> Descriptor:
    """Per-plane histograms ``D_R, D_G, D_B`` followed by ``D_H`` when requested.

    The same mask, if given, restricts all blocks. ``hclbp_only`` emits ``D_H``
    by itself.
    """
    image = as_rgb(image)
    masked = mask is not None
    parts = []
    if not hclbp_only:
        for i, name in enumerate(PLANE_BLOCKS):
            hist = label_histogram(label_map(image[:, :, i], params, mask))
            parts.append(_block(name, params, hist, masked))
    if include_hclbp or hclbp_only:
        hist = label_histogram(hclbp_label_map(image, params, mask))
        parts.append(_block(HYBRID_BLOCK, params, hist, masked))
    desc = Descriptor.concat(parts)
    if masked and hasattr(mask, "summary"):
        desc.meta["masks"] = [mask.summary()]
    return desc


def multiresolution_descriptor(
    image,
    schedule,
    include_hclbp: bool = True,
    sps: bool = False,
    lsv_mode: str = "absolute",
    hclbp_only: bool = False,
) -> Descriptor:
    """Concatenate color descriptors over ``schedule`` in order.

    With ``sps`` a separate significance mask is computed for every (P, R).
    """
    schedule = list(schedule)
    if not schedule:
        raise ValueError("empty resolution schedule")
    radii = [p.R for p in schedule]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"schedule radii must be strictly increasing, got {radii}")
    image = as_rgb(image)
    check_size(image.shape, max(radii))
    parts = []
    for params in schedule:
        mask = significance_mask(image, params, lsv_mode) if sps else None
        parts.append(color_descriptor(image, params, include_hclbp, mask, hclbp_only))
    return Descriptor.concat(parts)
