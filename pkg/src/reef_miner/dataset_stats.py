"""Dataset characterization: genus distributions, resolution histogram,
bounding-box geometry summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .evaluation import GroundTruthBox

DEFAULT_BIN_EDGES = (64, 128, 256, 512, 1024, 2048, 4096)


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    genus: str
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(
                f"manifest entry {self.image_id!r} has bad dimensions "
                f"{self.width}x{self.height}"
            )


@dataclass(frozen=True)
class DistributionRow:
    genus: str
    count: int
    percentage: float


@dataclass(frozen=True)
class HistogramBin:
    lower: int  # exclusive; 0 for the first bin
    upper: int | None  # inclusive; None marks the overflow bin
    count: int

    def label(self) -> str:
        if self.upper is None:
            return f">{self.lower}"
        return f"<={self.upper}" if self.lower == 0 else f"{self.lower + 1}-{self.upper}"


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Manifest CSV with header ``image_id,genus,width,height``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["image_id", "genus", "width", "height"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:4]] != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        entries = []
        for row_no, rec in enumerate(reader, 2):
            try:
                entries.append(
                    ManifestEntry(
                        image_id=rec["image_id"],
                        genus=rec["genus"],
                        width=int(rec["width"]),
                        height=int(rec["height"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{row_no}: bad manifest row: {exc}") from exc
    return entries


def genus_distribution(manifest: Sequence[ManifestEntry]) -> list[DistributionRow]:
    """Counts and percentages per genus, most numerous first (ties by name)."""
    if not manifest:
        raise ValueError("empty manifest")
    counts: dict[str, int] = {}
    for entry in manifest:
        counts[entry.genus] = counts.get(entry.genus, 0) + 1
    total = len(manifest)
    rows = [
        DistributionRow(genus=g, count=n, percentage=100.0 * n / total)
        for g, n in counts.items()
    ]
    rows.sort(key=lambda r: (-r.count, r.genus))
    return rows


def resolution_histogram(
    manifest: Sequence[ManifestEntry], bin_edges: Sequence[int] | None = None
) -> list[HistogramBin]:
    """Bin images by their longest side into ``(edge, next_edge]`` buckets.

    The overflow bin past the last edge is always present, so the counts
    always partition the manifest.
    """
    edges = tuple(bin_edges) if bin_edges is not None else DEFAULT_BIN_EDGES
    if not edges or any(b <= a for a, b in zip(edges, edges[1:])) or edges[0] < 1:
        raise ValueError(f"bin edges must be positive and strictly increasing, got {edges!r}")
    counts = [0] * (len(edges) + 1)
    for entry in manifest:
        side = max(entry.width, entry.height)
        for i, edge in enumerate(edges):
            if side <= edge:
                counts[i] += 1
                break
        else:
            counts[-1] += 1
    bins = []
    lower = 0
    for edge, count in zip(edges, counts):
        bins.append(HistogramBin(lower=lower, upper=edge, count=count))
        lower = edge
    bins.append(HistogramBin(lower=edges[-1], upper=None, count=counts[-1]))
    return bins


@dataclass(frozen=True)
class BboxStats:
    centers: tuple[tuple[float, float], ...]  # normalized (cx, cy)
    sizes: tuple[tuple[float, float], ...]  # normalized (w, h)
    aspect_ratios: tuple[float, ...]  # pixel width / pixel height


def bbox_stats(
    ground_truths: Sequence[GroundTruthBox], image_dims: Mapping[str, tuple[int, int]]
) -> BboxStats:
    """Normalized spatial statistics for annotated boxes.

    ``image_dims`` maps image_id to (width, height); every box's image must
    be present and non-degenerate.
    """
    centers = []
    sizes = []
    aspects = []
    for gt in ground_truths:
        if gt.image_id not in image_dims:
            raise ValueError(f"no image dimensions known for {gt.image_id!r}")
        width, height = image_dims[gt.image_id]
        if width < 1 or height < 1:
            raise ValueError(f"zero-dimension image {gt.image_id!r}")
        box = gt.box
        centers.append(((box.x_min + box.x_max) / (2 * width), (box.y_min + box.y_max) / (2 * height)))
        sizes.append((box.width / width, box.height / height))
        aspects.append(box.width / box.height)
    return BboxStats(
        centers=tuple(centers), sizes=tuple(sizes), aspect_ratios=tuple(aspects)
    )


def class_counts(ground_truths: Sequence[GroundTruthBox]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for gt in ground_truths:
        counts[gt.class_name] = counts.get(gt.class_name, 0) + 1
    return counts


def unknown_genera(manifest: Sequence[ManifestEntry], taxonomy: Sequence[str]) -> list[str]:
    """Genera present in the manifest but absent from the taxonomy, sorted."""
    known = set(taxonomy)
    return sorted({e.genus for e in manifest} - known)


def distribution_text(rows: Sequence[DistributionRow]) -> str:
    width = max([len("genus")] + [len(r.genus) for r in rows])
    lines = [f"{'genus':<{width}}  {'count':>8}  {'percent':>8}"]
    for r in rows:
        lines.append(f"{r.genus:<{width}}  {r.count:>8}  {r.percentage:>8.2f}")
    return "\n".join(lines)


def histogram_text(bins: Sequence[HistogramBin]) -> str:
    width = max(len(b.label()) for b in bins)
    return "\n".join(f"{b.label():<{width}}  {b.count:>8}" for b in bins)
