"""Core domain types shared across the quadrat analysis toolkit.

Conventions used everywhere:

* pixel coordinates are integers with the origin at the top-left corner,
* bounding boxes are half-open intervals ``[min, max)`` on both axes,
* binary masks are run-length encoded row-major (left to right, top to
  bottom) as alternating background/foreground run counts, starting with
  the background run (which may be 0 when the mask begins with foreground).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence


@dataclass(frozen=True)
class ImageRef:
    """Identity and dimensions of one quadrat image; pixels stay elsewhere."""

    id: str
    width: int
    height: int
    source: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("image id must be non-empty")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")

    @property
    def total_pixels(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, half-open on both axes: pixels with x_min <= x < x_max."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self) -> None:
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"box origin must be non-negative, got ({self.x_min}, {self.y_min})")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError(
                f"box must have positive extent, got "
                f"({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_list(self) -> list[int]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]


@dataclass(frozen=True)
class Detection:
    """One detector output: a box with a confidence and an optional class hint."""

    box: BoundingBox
    confidence: float
    class_hint: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class RleMask:
    """Run-length encoded binary mask.

    ``counts`` alternates background/foreground run lengths scanning
    row-major; the first count is background and is the only one allowed
    to be zero, so the encoding is canonical (one mask, one encoding).
    """

    width: int
    height: int
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"mask dimensions must be >= 1, got {self.width}x{self.height}")
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts:
            raise ValueError("counts must be non-empty")
        if counts[0] < 0 or any(c <= 0 for c in counts[1:]):
            raise ValueError("runs must be positive (a single leading zero is allowed)")
        total = sum(counts)
        if total != self.width * self.height:
            raise ValueError(
                f"run lengths sum to {total}, expected {self.width * self.height} "
                f"for a {self.width}x{self.height} mask"
            )

    @property
    def area(self) -> int:
        """Number of foreground pixels."""
        return sum(self.counts[1::2])

    def foreground_intervals(self) -> Iterator[tuple[int, int]]:
        """Yield half-open ``(start, end)`` foreground runs in flat pixel index space."""
        pos = 0
        foreground = False
        for c in self.counts:
            if foreground and c:
                yield pos, pos + c
            pos += c
            foreground = not foreground

    def same_shape(self, other: "RleMask") -> bool:
        return self.width == other.width and self.height == other.height


@dataclass(frozen=True)
class GenusLabel:
    """Genus-level classification of one instance."""

    name: str
    confidence: float

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("genus name must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class InstanceMask:
    """One segmented instance: mask, detection confidence, tight box, optional genus.

    The declared ``box`` is expected to be the tight bounding box of the
    mask foreground; :func:`validate_scene` reports a violation when it is
    not (construction does not enforce it so that invalid data can be
    represented and diagnosed).
    """

    mask: RleMask
    confidence: float
    box: BoundingBox
    genus: GenusLabel | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")

    def with_genus(self, genus: GenusLabel) -> "InstanceMask":
        return replace(self, genus=genus)


@dataclass(frozen=True)
class QuadratScene:
    """One quadrat image together with its (possibly overlapping) instances."""

    image: ImageRef
    roi: RleMask | None = None
    instances: tuple[InstanceMask, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "instances", tuple(self.instances))


@dataclass(frozen=True)
class GenusCover:
    """Per-genus aggregation for one quadrat."""

    genus: str
    pixels: int
    cover: float
    relative_abundance: float
    instances: int


@dataclass(frozen=True)
class QuadratReport:
    """Exported record of the ecological indicators of one quadrat."""

    quadrat_id: str
    total_pixels: int
    coral_pixels: int
    total_cover: float
    per_genus: tuple[GenusCover, ...]
    richness: int
    shannon: float
    simpson_gini: float
    simpson_dominance: float
    dominant_genus: str | None
    instance_count: int
    no_coral: bool


def tight_bbox(mask: RleMask) -> BoundingBox | None:
    """Tight bounding box of the mask foreground, or None for an empty mask.

    Works directly on runs: a run that wraps across rows spans the full
    column range by construction.
    """
    w = mask.width
    r_min = c_min = None
    r_max = c_max = -1
    for start, end in mask.foreground_intervals():
        r0, r1 = start // w, (end - 1) // w
        if r_min is None:
            r_min = r0
        r_max = max(r_max, r1)
        if r1 > r0:
            c_min, c_max = 0, w - 1
        else:
            c0, c1 = start % w, (end - 1) % w
            c_min = c0 if c_min is None else min(c_min, c0)
            c_max = max(c_max, c1)
    if r_min is None:
        return None
    return BoundingBox(c_min, r_min, c_max + 1, r_max + 1)


def validate_scene(scene: QuadratScene, taxonomy: Sequence[str] | None = None) -> list[str]:
    """Collect every invariant violation in a scene; an empty list means valid.

    Violations are data, not failures: callers decide whether to reject.
    When ``taxonomy`` is given, genus labels outside it are reported too.
    """
    violations: list[str] = []
    img = scene.image
    if scene.roi is not None and (scene.roi.width, scene.roi.height) != (img.width, img.height):
        violations.append(
            f"roi: dimension mismatch ({scene.roi.width}x{scene.roi.height} "
            f"under a {img.width}x{img.height} image)"
        )
    known = set(taxonomy) if taxonomy is not None else None
    for i, inst in enumerate(scene.instances):
        m = inst.mask
        if (m.width, m.height) != (img.width, img.height):
            violations.append(
                f"instance {i}: dimension mismatch ({m.width}x{m.height} "
                f"under a {img.width}x{img.height} image)"
            )
            continue
        tight = tight_bbox(m)
        if tight is None:
            violations.append(f"instance {i}: empty mask")
            continue
        if tight != inst.box:
            violations.append(
                f"instance {i}: box not tight (declared {inst.box.as_list()}, "
                f"tight {tight.as_list()})"
            )
        if known is not None and inst.genus is not None and inst.genus.name not in known:
            violations.append(f"instance {i}: unknown genus {inst.genus.name!r}")
    return violations


# --- scene interchange (one JSON document per scene) ---


def _mask_to_dict(mask: RleMask) -> dict:
    return {"width": mask.width, "height": mask.height, "counts": list(mask.counts)}


def _mask_from_dict(obj: dict) -> RleMask:
    return RleMask(width=obj["width"], height=obj["height"], counts=tuple(obj["counts"]))


def scene_to_dict(scene: QuadratScene) -> dict:
    instances = []
    for inst in scene.instances:
        entry: dict = {
            "mask": _mask_to_dict(inst.mask),
            "confidence": inst.confidence,
            "box": {
                "x_min": inst.box.x_min,
                "y_min": inst.box.y_min,
                "x_max": inst.box.x_max,
                "y_max": inst.box.y_max,
            },
            "genus": None
            if inst.genus is None
            else {"name": inst.genus.name, "confidence": inst.genus.confidence},
        }
        instances.append(entry)
    return {
        "image": {
            "id": scene.image.id,
            "width": scene.image.width,
            "height": scene.image.height,
            "source": scene.image.source,
        },
        "roi": None if scene.roi is None else _mask_to_dict(scene.roi),
        "instances": instances,
    }


def scene_from_dict(obj: dict) -> QuadratScene:
    img = obj["image"]
    instances = []
    for entry in obj.get("instances", []):
        box = entry["box"]
        genus = entry.get("genus")
        instances.append(
            InstanceMask(
                mask=_mask_from_dict(entry["mask"]),
                confidence=entry["confidence"],
                box=BoundingBox(box["x_min"], box["y_min"], box["x_max"], box["y_max"]),
                genus=None if genus is None else GenusLabel(genus["name"], genus["confidence"]),
            )
        )
    roi = obj.get("roi")
    return QuadratScene(
        image=ImageRef(
            id=img["id"], width=img["width"], height=img["height"], source=img.get("source")
        ),
        roi=None if roi is None else _mask_from_dict(roi),
        instances=tuple(instances),
    )


def write_scene(scene: QuadratScene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2), encoding="utf-8")


def read_scene(path: str | Path) -> QuadratScene:
    return scene_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
