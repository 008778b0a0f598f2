"""Exact pixel-set algebra on run-length encoded masks.

Every operation here works directly on run lists; full bitmaps are never
materialized. Correctness is defined against a per-pixel bitmap model and
checked that way in the test suite.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .model import BoundingBox, InstanceMask, RleMask, tight_bbox


class DimensionMismatchError(ValueError):
    """Operands of a mask set operation do not share dimensions."""


class EmptyRasterizationError(ValueError):
    """A box lies entirely outside the image it is rasterized onto."""


def _require_same_shape(a: RleMask, b: RleMask) -> None:
    if not a.same_shape(b):
        raise DimensionMismatchError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def _runs(counts: Sequence[int]) -> Iterable[tuple[int, int]]:
    """Yield (value, length) runs with positive length, value in {0, 1}."""
    value = 0
    for c in counts:
        if c:
            yield value, c
        value ^= 1


def _combine_counts(
    a_counts: Sequence[int], b_counts: Sequence[int], op: Callable[[int, int], int]
) -> list[int]:
    """Merge two aligned run lists under a boolean operator, canonically."""
    merged: list[list[int]] = []  # [value, length], adjacent values differ
    it_a, it_b = iter(_runs(a_counts)), iter(_runs(b_counts))
    va, la = next(it_a, (0, 0))
    vb, lb = next(it_b, (0, 0))
    while la and lb:
        step = min(la, lb)
        v = op(va, vb)
        if merged and merged[-1][0] == v:
            merged[-1][1] += step
        else:
            merged.append([v, step])
        la -= step
        lb -= step
        if not la:
            va, la = next(it_a, (0, 0))
        if not lb:
            vb, lb = next(it_b, (0, 0))
    counts = [length for _, length in merged]
    if merged and merged[0][0] == 1:
        counts.insert(0, 0)
    return counts


def _binary_op(a: RleMask, b: RleMask, op: Callable[[int, int], int]) -> RleMask:
    _require_same_shape(a, b)
    return RleMask(a.width, a.height, tuple(_combine_counts(a.counts, b.counts, op)))


def intersection(a: RleMask, b: RleMask) -> RleMask:
    return _binary_op(a, b, lambda x, y: x & y)


def union(a: RleMask, b: RleMask) -> RleMask:
    return _binary_op(a, b, lambda x, y: x | y)


def difference(a: RleMask, b: RleMask) -> RleMask:
    """Pixels of ``a`` not claimed by ``b``."""
    return _binary_op(a, b, lambda x, y: x & (1 - y))


def mask_area(mask: RleMask) -> int:
    return mask.area


def intersection_area(a: RleMask, b: RleMask) -> int:
    return intersection(a, b).area


def union_area(a: RleMask, b: RleMask) -> int:
    return union(a, b).area


def multi_union_area(masks: Sequence[RleMask]) -> int:
    """Cardinality of the union of all foregrounds; empty input gives 0."""
    if not masks:
        return 0
    acc = masks[0]
    for m in masks[1:]:
        acc = union(acc, m)
    return acc.area


def empty_mask(width: int, height: int) -> RleMask:
    return RleMask(width, height, (width * height,))


def full_mask(width: int, height: int) -> RleMask:
    return RleMask(width, height, (0, width * height))


def rasterize_box(box: BoundingBox, width: int, height: int) -> RleMask:
    """Rasterize a box onto a width x height grid, clamping to the image.

    Raises EmptyRasterizationError if nothing of the box survives the clamp.
    """
    if width < 1 or height < 1:
        raise ValueError(f"image dimensions must be >= 1, got {width}x{height}")
    x0, y0 = max(0, box.x_min), max(0, box.y_min)
    x1, y1 = min(width, box.x_max), min(height, box.y_max)
    if x0 >= x1 or y0 >= y1:
        raise EmptyRasterizationError(
            f"box {box.as_list()} is empty after clamping to {width}x{height}"
        )
    row_fg = x1 - x0
    counts: list[int] = [y0 * width + x0]
    if row_fg == width:
        # full-width rows collapse into a single foreground run
        counts.append((y1 - y0) * width)
        trailing = (height - y1) * width
    else:
        gap = width - row_fg
        for _ in range(y1 - y0 - 1):
            counts.append(row_fg)
            counts.append(gap)
        counts.append(row_fg)
        trailing = (width - x1) + (height - y1) * width
    if trailing:
        counts.append(trailing)
    return RleMask(width, height, tuple(counts))


def decode(mask: RleMask) -> np.ndarray:
    """Expand to a (height, width) boolean bitmap (for interop, not algebra)."""
    flat = np.zeros(mask.width * mask.height, dtype=bool)
    for start, end in mask.foreground_intervals():
        flat[start:end] = True
    return flat.reshape(mask.height, mask.width)


def encode(bitmap: np.ndarray) -> RleMask:
    """Encode a 2D boolean bitmap into canonical run-length form."""
    if bitmap.ndim != 2:
        raise ValueError(f"expected a 2D bitmap, got shape {bitmap.shape}")
    height, width = bitmap.shape
    flat = np.asarray(bitmap, dtype=bool).ravel()
    changes = np.flatnonzero(np.diff(flat))
    boundaries = np.concatenate(([0], changes + 1, [flat.size]))
    counts = np.diff(boundaries).tolist()
    if flat[0]:
        counts.insert(0, 0)
    return RleMask(width, height, tuple(counts))


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes under the half-open convention."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def instance_from_mask(mask: RleMask, confidence: float, genus=None) -> InstanceMask:
    """Build an instance whose box is the tight bounding box of the mask."""
    box = tight_bbox(mask)
    if box is None:
        raise ValueError("cannot build an instance from an empty mask")
    return InstanceMask(mask=mask, confidence=confidence, box=box, genus=genus)


class DisjointInstanceSet(tuple):
    """Instances whose masks are pairwise disjoint.

    Produced by :func:`resolve_overlaps`, which establishes the invariant by
    construction; :meth:`verify` re-checks it explicitly. Behaves like a
    plain tuple of :class:`InstanceMask`.
    """

    __slots__ = ()

    @property
    def instances(self) -> tuple[InstanceMask, ...]:
        return tuple(self)

    def verify(self) -> bool:
        for i in range(len(self)):
            for j in range(i + 1, len(self)):
                if intersection_area(self[i].mask, self[j].mask) > 0:
                    return False
        return True


def resolve_overlaps(instances: Sequence[InstanceMask]) -> DisjointInstanceSet:
    """Assign every contested pixel to its highest-confidence claimant.

    Ties go to the instance that appears first in the input. Instances left
    with no pixels are dropped; everyone else keeps its original order and
    gets a recomputed tight box. The union of foregrounds is preserved.
    """
    if not instances:
        return DisjointInstanceSet()
    first = instances[0].mask
    for inst in instances[1:]:
        _require_same_shape(first, inst.mask)
    priority = sorted(range(len(instances)), key=lambda i: (-instances[i].confidence, i))
    claimed = empty_mask(first.width, first.height)
    kept: dict[int, RleMask] = {}
    for idx in priority:
        mask = instances[idx].mask
        remaining = difference(mask, claimed)
        claimed = union(claimed, mask)
        if remaining.area > 0:
            kept[idx] = remaining
    resolved = []
    for idx in sorted(kept):
        inst = instances[idx]
        resolved.append(
            InstanceMask(
                mask=kept[idx],
                confidence=inst.confidence,
                box=tight_bbox(kept[idx]),
                genus=inst.genus,
            )
        )
    return DisjointInstanceSet(resolved)
