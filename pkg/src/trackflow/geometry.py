"""Box geometry: overlap ratio and discretized same-frame spatial relations.

Boxes are ``(left, top, width, height)`` in image coordinates, so ``y`` grows
downward and "above" means a smaller center ``y``.
"""

from __future__ import annotations

import math
from typing import Sequence

Box = Sequence[float]

STRICT_OVERLAP = 0
OVERLAP = 1
ON_TOP_OF = 2
ABOVE = 3
BELOW = 4
NEXT_TO = 5
NEAR = 6
FAR = 7

RELATION_NAMES = (
    "strict_overlap",
    "overlap",
    "on_top_of",
    "above",
    "below",
    "next_to",
    "near",
    "far",
)
NUM_RELATIONS = len(RELATION_NAMES)

OVERLAP_IOU = 0.3
STRICT_OVERLAP_RATIO = 0.9
NEXT_TO_RADIUS = 1.5
NEAR_RADIUS = 3.0


def intersection(a: Box, b: Box) -> float:
    w = min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0])
    h = min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1])
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two axis-aligned boxes."""
    inter = intersection(a, b)
    if inter == 0.0:
        return 0.0
    union = a[2] * a[3] + b[2] * b[3] - inter
    return min(inter / union, 1.0)  # round-off on near-identical boxes


def center(box: Box) -> tuple[float, float]:
    return box[0] + 0.5 * box[2], box[1] + 0.5 * box[3]


def diagonal(box: Box) -> float:
    return math.hypot(box[2], box[3])


def spatial_relation(a: Box, b: Box) -> int:
    """Relation of box ``b`` with respect to box ``a``.

    Rules are checked in order and the first match wins:

    ==============  ==========================================================
    strict_overlap  intersection / area(a) > 0.9
    overlap         IoU >= 0.3
    on_top_of       0 < IoU < 0.3 and center of b above center of a
    far             center distance > 3 * mean diagonal
    above / below   IoU == 0 and |dy| >= |dx|; sign of dy decides
    next_to         IoU == 0, |dx| > |dy| and distance <= 1.5 * mean diagonal
    near            anything else
    ==============  ==========================================================
    """
    inter = intersection(a, b)
    if inter / (a[2] * a[3]) > STRICT_OVERLAP_RATIO:
        return STRICT_OVERLAP
    o = iou(a, b)
    ax, ay = center(a)
    bx, by = center(b)
    dx, dy = bx - ax, by - ay
    if o >= OVERLAP_IOU:
        return OVERLAP
    if o > 0.0 and dy < 0.0:
        return ON_TOP_OF
    s = 0.5 * (diagonal(a) + diagonal(b))
    d = math.hypot(dx, dy)
    if d > NEAR_RADIUS * s:
        return FAR
    if o == 0.0:
        if abs(dy) >= abs(dx):
            return ABOVE if dy < 0.0 else BELOW
        if d <= NEXT_TO_RADIUS * s:
            return NEXT_TO
    return NEAR


def interpolate(a: Box, b: Box, alpha: float) -> tuple[float, float, float, float]:
    """Linear interpolation between two boxes; ``alpha=0`` gives ``a``."""
    return tuple(float(x + alpha * (y - x)) for x, y in zip(a, b))  # type: ignore[return-value]
