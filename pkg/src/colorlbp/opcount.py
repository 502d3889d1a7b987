"""Arithmetic operation accounting for descriptor extraction.

The *modeled* group covers the per-bit work of the thresholding loop: the
difference, the threshold comparison, the accumulation of the code, and for
the hybrid operator the two products that AND the three plane bits together.
For the hybrid operator a difference or comparison acts on an RGB triple and
counts once. Interpolation, histogramming and significance computation are
tallied in separate auxiliary groups and never enter the model.

The reference MLBP division figure (12708) has no counterpart in the
thresholding loop and is deliberately not reproduced.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from colorlbp.image import OperatorParams, as_rgb, check_size, interior_shape

OPS = ("comparisons", "multiplications", "divisions", "additions", "subtractions")
OPERATORS = ("lbp", "hclbp")


@dataclass
class OpCounters:
    modeled: dict = field(default_factory=lambda: dict.fromkeys(OPS, 0))
    auxiliary: dict = field(default_factory=lambda: defaultdict(lambda: dict.fromkeys(OPS, 0)))
    context: dict = field(default_factory=dict)

    def add(self, kind: str, n: int) -> None:
        self.modeled[kind] += int(n)

    def add_aux(self, group: str, kind: str, n: int) -> None:
        self.auxiliary[group][kind] += int(n)

    def merge(self, other: "OpCounters") -> "OpCounters":
        out = OpCounters(context=dict(self.context))
        for src in (self, other):
            for k, v in src.modeled.items():
                out.modeled[k] += v
            for g, ops in src.auxiliary.items():
                for k, v in ops.items():
                    out.auxiliary[g][k] += v
        return out

    def to_dict(self) -> dict:
        return {
            "context": dict(self.context),
            "modeled": dict(self.modeled),
            "auxiliary": {g: dict(v) for g, v in sorted(self.auxiliary.items())},
        }


def predict_ops(operator: str, params: OperatorParams, width: int, height: int, selected=None) -> OpCounters:
    """Closed-form modeled counts for one operator over one image."""
    if operator not in OPERATORS:
        raise ValueError(f"unknown operator {operator!r}")
    if width <= 2 * params.R or height <= 2 * params.R:
        raise ValueError(f"degenerate size {width}x{height} for R={params.R}")
    ih, iw = interior_shape((height, width), params.R)
    n = ih * iw if selected is None else int(selected)
    if not 0 <= n <= ih * iw:
        raise ValueError(f"selected count {n} outside [0, {ih * iw}]")
    P = params.P
    out = OpCounters(context=_context(operator, params, width, height, n))
    out.modeled.update(
        comparisons=P * n,
        subtractions=P * n,
        additions=P * n,
        multiplications=2 * P * n if operator == "hclbp" else 0,
        divisions=0,
    )
    return out


def _context(operator, params, width, height, n):
    return {
        "operator": operator,
        "P": params.P,
        "R": params.R,
        "width": width,
        "height": height,
        "neighborhoods": n,
    }


def measure_ops(image, operator: str, params: OperatorParams, sps: bool = False, plane: int = 0) -> OpCounters:
    """Run an instrumented extraction and return the tallied counters.

    ``operator="lbp"`` labels the single plane ``plane``; ``"hclbp"`` runs the
    hybrid operator over all three planes. With ``sps`` the significance mask
    (computed under its own auxiliary group) restricts the labeled pixels.
    """
    from colorlbp.color import hclbp_label_map
    from colorlbp.lbp import label_histogram, label_map
    from colorlbp.sps import significance_mask

    if operator not in OPERATORS:
        raise ValueError(f"unknown operator {operator!r}")
    image = as_rgb(image)
    check_size(image.shape, params.R)
    counter = OpCounters()
    mask = significance_mask(image, params, counter=counter) if sps else None
    if operator == "hclbp":
        lmap = hclbp_label_map(image, params, mask, counter=counter)
    else:
        lmap = label_map(image[:, :, plane], params, mask, counter=counter)
    label_histogram(lmap, counter=counter)
    h, w = image.shape[:2]
    counter.context = _context(operator, params, w, h, lmap.n_labeled)
    if mask is not None:
        counter.context["fallback_used"] = mask.fallback_used
    return counter


def table_rows(rows) -> list[dict]:
    """Flatten ``(label, predicted, measured)`` triples into table rows."""
    out = []
    for label, predicted, measured in rows:
        row = {"operator": label, "neighborhoods": predicted.context["neighborhoods"]}
        for op in OPS:
            row[op] = predicted.modeled[op]
            row[f"measured_{op}"] = measured.modeled[op]
        out.append(row)
    return out


def op_vector(counters: OpCounters) -> np.ndarray:
    return np.array([counters.modeled[k] for k in OPS], dtype=np.int64)
