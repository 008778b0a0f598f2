"""Ecological indicators computed from a resolved quadrat scene.

Cover is the fraction of counted pixels occupied by instance foreground;
diversity indices are computed from per-genus area shares. When the scene
carries a region-of-interest mask, instance masks are clipped to it first
and the ROI area becomes the denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import masks
from .model import GenusCover, InstanceMask, QuadratReport, QuadratScene, RleMask

ABUNDANCE_SUM_TOLERANCE = 1e-9


class DegenerateQuadratError(ValueError):
    """The counting region has zero area, so cover is undefined."""


class MissingGenusError(ValueError):
    """An instance reached genus aggregation without a label."""


@dataclass(frozen=True)
class GenusCoverTable:
    """Per-genus pixel tallies with cover and abundance shares."""

    rows: Mapping[str, GenusCover]
    total_pixels: int
    coral_pixels: int


def _clip_to_roi(scene: QuadratScene) -> tuple[list[tuple[InstanceMask, RleMask]], int]:
    """Pair each instance with its ROI-clipped mask; return the pixel denominator."""
    if scene.roi is None:
        total = scene.image.total_pixels
        clipped = [(inst, inst.mask) for inst in scene.instances]
    else:
        total = scene.roi.area
        clipped = [(inst, masks.intersection(inst.mask, scene.roi)) for inst in scene.instances]
    if total == 0:
        raise DegenerateQuadratError("counting region has zero area")
    return clipped, total


def total_cover(scene: QuadratScene) -> float:
    """Fraction of counted pixels covered by instances (assumed disjoint)."""
    clipped, total = _clip_to_roi(scene)
    coral = sum(m.area for _, m in clipped)
    return coral / total


def genus_cover(scene: QuadratScene) -> GenusCoverTable:
    """Aggregate clipped instance areas per genus.

    Every instance must carry a genus label. Genera whose instances were
    clipped to nothing keep a zero-pixel row (they do not count as present).
    """
    clipped, total = _clip_to_roi(scene)
    pixels: dict[str, int] = {}
    instances: dict[str, int] = {}
    for inst, mask in clipped:
        if inst.genus is None:
            raise MissingGenusError("instance has no genus label")
        name = inst.genus.name
        pixels[name] = pixels.get(name, 0) + mask.area
        instances[name] = instances.get(name, 0) + 1
    coral = sum(pixels.values())
    rows = {
        name: GenusCover(
            genus=name,
            pixels=n,
            cover=n / total,
            relative_abundance=(n / coral) if coral else 0.0,
            instances=instances[name],
        )
        for name, n in pixels.items()
    }
    return GenusCoverTable(rows=rows, total_pixels=total, coral_pixels=coral)


def richness(table: GenusCoverTable) -> int:
    """Number of genera present with at least one pixel."""
    return sum(1 for row in table.rows.values() if row.pixels > 0)


def _checked_abundances(abundances: Iterable[float]) -> list[float]:
    values = [p for p in abundances]
    if any(p < 0 for p in values):
        raise ValueError("abundances must be non-negative")
    values = [p for p in values if p > 0]
    if not values:
        return []
    total = math.fsum(values)
    if abs(total - 1.0) > ABUNDANCE_SUM_TOLERANCE:
        raise ValueError(f"abundances must sum to 1, got {total!r}")
    return values


def shannon_index(abundances: Iterable[float]) -> float:
    """Shannon-Wiener diversity, natural log; 0 for an empty community."""
    values = _checked_abundances(abundances)
    if not values:
        return 0.0
    return -math.fsum(p * math.log(p) for p in values)


def simpson_index(abundances: Iterable[float], variant: str = "gini") -> float:
    """Simpson diversity in either convention.

    ``gini`` is 1 - sum(p^2) (probability two random pixels differ in genus);
    ``dominance`` is its exact complement, so the two always add to 1.
    """
    values = _checked_abundances(abundances)
    gini = 0.0 if not values else 1.0 - math.fsum(p * p for p in values)
    if variant == "gini":
        return gini
    if variant == "dominance":
        return 1.0 - gini
    raise ValueError(f"unknown variant {variant!r} (expected 'gini' or 'dominance')")


def dominant_genus(table: GenusCoverTable) -> str | None:
    """Genus of maximal cover; ties break lexicographically; None when empty."""
    best: str | None = None
    best_pixels = 0
    for name in sorted(table.rows):
        row = table.rows[name]
        if row.pixels > best_pixels:
            best, best_pixels = name, row.pixels
    return best


def build_report(
    scene: QuadratScene,
    table: GenusCoverTable | None = None,
    quadrat_id: str | None = None,
) -> QuadratReport:
    """Assemble the full exported record for one quadrat."""
    if table is None:
        table = genus_cover(scene)
    abundances = [row.relative_abundance for row in table.rows.values() if row.pixels > 0]
    gini = simpson_index(abundances, "gini")
    per_genus = tuple(table.rows[name] for name in sorted(table.rows))
    return QuadratReport(
        quadrat_id=quadrat_id if quadrat_id is not None else scene.image.id,
        total_pixels=table.total_pixels,
        coral_pixels=table.coral_pixels,
        total_cover=table.coral_pixels / table.total_pixels,
        per_genus=per_genus,
        richness=richness(table),
        shannon=shannon_index(abundances),
        simpson_gini=gini,
        simpson_dominance=1.0 - gini,
        dominant_genus=dominant_genus(table),
        instance_count=len(scene.instances),
        no_coral=table.coral_pixels == 0,
    )


# --- report export ---

_SCALAR_FIELDS = (
    "quadrat_id",
    "total_pixels",
    "coral_pixels",
    "total_cover",
    "richness",
    "shannon",
    "simpson_gini",
    "simpson_dominance",
    "dominant_genus",
    "instance_count",
    "no_coral",
)

EXPORT_DECIMALS = 6


def _round6(x: float) -> float:
    return round(x, EXPORT_DECIMALS)


def report_to_dict(report: QuadratReport) -> dict:
    """JSON-ready view of a report, floats rendered at export precision."""
    return {
        "quadrat_id": report.quadrat_id,
        "total_pixels": report.total_pixels,
        "coral_pixels": report.coral_pixels,
        "total_cover": _round6(report.total_cover),
        "per_genus": [
            {
                "genus": row.genus,
                "pixels": row.pixels,
                "cover": _round6(row.cover),
                "relative_abundance": _round6(row.relative_abundance),
                "instances": row.instances,
            }
            for row in report.per_genus
        ],
        "richness": report.richness,
        "shannon": _round6(report.shannon),
        "simpson_gini": _round6(report.simpson_gini),
        "simpson_dominance": _round6(report.simpson_dominance),
        "dominant_genus": report.dominant_genus,
        "instance_count": report.instance_count,
        "no_coral": report.no_coral,
    }


def reports_to_csv_rows(reports: Sequence[QuadratReport]) -> tuple[list[str], list[list[str]]]:
    """Flatten reports to one row per quadrat with lexicographic genus columns."""
    genera = sorted({row.genus for rep in reports for row in rep.per_genus})
    header = list(_SCALAR_FIELDS)
    for g in genera:
        header += [f"{g}.pixels", f"{g}.cover", f"{g}.abundance"]
    rows = []
    for rep in reports:
        by_genus = {row.genus: row for row in rep.per_genus}
        row = [
            rep.quadrat_id,
            str(rep.total_pixels),
            str(rep.coral_pixels),
            f"{rep.total_cover:.6f}",
            str(rep.richness),
            f"{rep.shannon:.6f}",
            f"{rep.simpson_gini:.6f}",
            f"{rep.simpson_dominance:.6f}",
            rep.dominant_genus or "",
            str(rep.instance_count),
            str(rep.no_coral).lower(),
        ]
        for g in genera:
            if g in by_genus:
                gc = by_genus[g]
                row += [str(gc.pixels), f"{gc.cover:.6f}", f"{gc.relative_abundance:.6f}"]
            else:
                row += ["", "", ""]
        rows.append(row)
    return header, rows
