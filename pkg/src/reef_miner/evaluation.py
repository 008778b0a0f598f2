"""Detection and classification scoring over prediction/ground-truth records.

Detection follows the standard greedy protocol: predictions sorted by
descending confidence claim the highest-IoU unmatched ground truth of
their class, and average precision is the 101-point interpolated mean of
the resulting precision-recall curve.
"""

from __future__ import annotations

import csv
import json
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .masks import box_iou
from .model import BoundingBox

COCO_THRESHOLDS = tuple((50 + 5 * i) / 100 for i in range(10))
RECALL_POINTS = tuple(j / 100 for j in range(101))


@dataclass(frozen=True)
class GroundTruthBox:
    image_id: str
    box: BoundingBox
    class_name: str


@dataclass(frozen=True)
class PredictionBox:
    image_id: str
    box: BoundingBox
    class_name: str
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class MatchedPrediction:
    prediction: PredictionBox
    is_tp: bool
    gt_index: int | None  # index into the ground-truth list, when matched


@dataclass(frozen=True)
class DetectionMatches:
    matches: tuple[MatchedPrediction, ...]  # descending confidence order
    num_gt: int
    num_unmatched_gt: int


def match_detections(
    predictions: Sequence[PredictionBox],
    ground_truths: Sequence[GroundTruthBox],
    iou_threshold: float,
) -> DetectionMatches:
    """Greedy per-class matching; ties on confidence keep input order."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    order = sorted(range(len(predictions)), key=lambda i: (-predictions[i].confidence, i))
    taken = [False] * len(ground_truths)
    matches = []
    for i in order:
        pred = predictions[i]
        best_iou, best_j = 0.0, None
        for j, gt in enumerate(ground_truths):
            if taken[j] or gt.image_id != pred.image_id or gt.class_name != pred.class_name:
                continue
            iou = box_iou(pred.box, gt.box)
            if iou >= iou_threshold and iou > best_iou:
                best_iou, best_j = iou, j
        if best_j is not None:
            taken[best_j] = True
            matches.append(MatchedPrediction(pred, True, best_j))
        else:
            matches.append(MatchedPrediction(pred, False, None))
    return DetectionMatches(
        matches=tuple(matches),
        num_gt=len(ground_truths),
        num_unmatched_gt=taken.count(False),
    )


def _interpolated_ap(tp_flags: Sequence[bool], num_gt: int) -> float:
    """101-point interpolated AP from confidence-ordered TP/FP flags."""
    if not tp_flags:
        return 0.0
    precisions: list[float] = []
    recalls: list[float] = []
    tp = 0
    for k, flag in enumerate(tp_flags, start=1):
        tp += bool(flag)
        precisions.append(tp / k)
        recalls.append(tp / num_gt)
    # running max from the right: best precision at recall >= r
    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    total = 0.0
    for r in RECALL_POINTS:
        idx = bisect_left(recalls, r)
        if idx < len(envelope):
            total += envelope[idx]
    return total / len(RECALL_POINTS)


def average_precision(
    predictions: Sequence[PredictionBox],
    ground_truths: Sequence[GroundTruthBox],
    iou_threshold: float,
) -> float:
    """AP for a single class set of records; undefined without ground truth."""
    if not ground_truths:
        raise ValueError("AP is undefined with zero ground-truth boxes")
    matched = match_detections(predictions, ground_truths, iou_threshold)
    return _interpolated_ap([m.is_tp for m in matched.matches], matched.num_gt)


@dataclass(frozen=True)
class MeanApResult:
    per_threshold: Mapping[float, float]
    per_class: Mapping[str, Mapping[float, float]]
    map50: float | None
    map5095: float


def mean_ap(
    predictions: Sequence[PredictionBox],
    ground_truths: Sequence[GroundTruthBox],
    thresholds: Sequence[float] | None = None,
) -> MeanApResult:
    """Class-mean AP per IoU threshold; classes without ground truth are skipped."""
    if thresholds is None:
        thresholds = COCO_THRESHOLDS
    if not thresholds:
        raise ValueError("at least one IoU threshold required")
    classes = sorted({gt.class_name for gt in ground_truths})
    if not classes:
        raise ValueError("AP is undefined with zero ground-truth boxes")
    preds_by_class: dict[str, list[PredictionBox]] = {c: [] for c in classes}
    for p in predictions:
        if p.class_name in preds_by_class:
            preds_by_class[p.class_name].append(p)
    gts_by_class: dict[str, list[GroundTruthBox]] = {c: [] for c in classes}
    for g in ground_truths:
        gts_by_class[g.class_name].append(g)
    per_class: dict[str, dict[float, float]] = {}
    for c in classes:
        per_class[c] = {
            t: average_precision(preds_by_class[c], gts_by_class[c], t) for t in thresholds
        }
    per_threshold = {
        t: sum(per_class[c][t] for c in classes) / len(classes) for t in thresholds
    }
    return MeanApResult(
        per_threshold=per_threshold,
        per_class=per_class,
        map50=per_threshold.get(0.5),
        map5095=sum(per_threshold.values()) / len(per_threshold),
    )


# --- classification ---


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square integer matrix; rows are true classes, columns predictions."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.labels)
        if len(self.counts) != n or any(len(row) != n for row in self.counts):
            raise ValueError("counts must be square and match the label count")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be non-negative")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None

    def row_sum(self, label: str) -> int:
        return sum(self.counts[self.index(label)])

    def col_sum(self, label: str) -> int:
        j = self.index(label)
        return sum(row[j] for row in self.counts)

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def share(self, true_label: str, predicted_label: str) -> float:
        """Row-normalized cell: fraction of a true class predicted as another."""
        support = self.row_sum(true_label)
        if support == 0:
            return 0.0
        return self.counts[self.index(true_label)][self.index(predicted_label)] / support


def confusion_matrix(
    pairs: Iterable[tuple[str, str]], labels: Sequence[str]
) -> ConfusionMatrix:
    """Tally (true, predicted) pairs into a matrix over the given labels."""
    index = {label: i for i, label in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for true_label, predicted_label in pairs:
        if true_label not in index:
            raise ValueError(f"unknown true class {true_label!r}")
        if predicted_label not in index:
            raise ValueError(f"unknown predicted class {predicted_label!r}")
        counts[index[true_label]][index[predicted_label]] += 1
    return ConfusionMatrix(labels=tuple(labels), counts=tuple(tuple(r) for r in counts))


@dataclass(frozen=True)
class ClassMetrics:
    accuracy: float  # equals recall: the per-class accuracy convention here
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassReport:
    per_class: Mapping[str, ClassMetrics]
    overall_accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float


def class_report(matrix: ConfusionMatrix) -> ClassReport:
    """Per-class precision/recall/F1 plus micro accuracy and macro means."""
    total = matrix.total()
    if total == 0:
        raise ValueError("cannot report on an all-zero confusion matrix")
    per_class: dict[str, ClassMetrics] = {}
    for i, label in enumerate(matrix.labels):
        diag = matrix.counts[i][i]
        support = sum(matrix.counts[i])
        col = sum(row[i] for row in matrix.counts)
        recall = diag / support if support else 0.0
        precision = diag / col if col else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassMetrics(
            accuracy=recall, precision=precision, recall=recall, f1=f1, support=support
        )
    n = len(matrix.labels)
    trace = sum(matrix.counts[i][i] for i in range(n))
    return ClassReport(
        per_class=per_class,
        overall_accuracy=trace / total,
        macro_precision=sum(m.precision for m in per_class.values()) / n,
        macro_recall=sum(m.recall for m in per_class.values()) / n,
        macro_f1=sum(m.f1 for m in per_class.values()) / n,
    )


@dataclass(frozen=True)
class CellDelta:
    label: str
    metric: str
    computed_pct: float
    expected_pct: float
    delta_pp: float
    ok: bool


@dataclass(frozen=True)
class FixtureCheck:
    passed: bool
    cells: tuple[CellDelta, ...]

    def failures(self) -> tuple[CellDelta, ...]:
        return tuple(c for c in self.cells if not c.ok)


def fixture_check(
    report: ClassReport,
    expected: Mapping[str, Mapping[str, float]],
    tolerance_pp: float,
) -> FixtureCheck:
    """Compare computed per-class metrics to an expected table of percentages.

    Every expected label must exist in the report; each expected metric cell
    is compared in percentage points against the computed value.
    """
    cells = []
    for label in expected:
        if label not in report.per_class:
            raise ValueError(f"label mismatch: {label!r} not present in report")
        computed = report.per_class[label]
        for metric, expected_pct in expected[label].items():
            value = getattr(computed, metric, None)
            if value is None:
                raise ValueError(f"unknown metric {metric!r} for label {label!r}")
            computed_pct = 100.0 * value
            delta = abs(computed_pct - expected_pct)
            cells.append(
                CellDelta(
                    label=label,
                    metric=metric,
                    computed_pct=computed_pct,
                    expected_pct=expected_pct,
                    delta_pp=delta,
                    ok=delta <= tolerance_pp + 1e-12,
                )
            )
    return FixtureCheck(passed=all(c.ok for c in cells), cells=tuple(cells))


# --- record file formats ---


def _parse_box(values: Sequence[float]) -> BoundingBox:
    if len(values) != 4:
        raise ValueError(f"box must have 4 coordinates, got {values!r}")
    coords = [int(v) if float(v).is_integer() else float(v) for v in values]
    return BoundingBox(*coords)


def read_ground_truth(path: str | Path) -> list[GroundTruthBox]:
    """Newline-delimited JSON, one box record per line."""
    records = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(
                GroundTruthBox(
                    image_id=obj["image_id"],
                    box=_parse_box(obj["box"]),
                    class_name=obj["class"],
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"{path}:{line_no}: bad ground-truth record: {exc}") from exc
    return records


def read_predictions(path: str | Path) -> list[PredictionBox]:
    records = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(
                PredictionBox(
                    image_id=obj["image_id"],
                    box=_parse_box(obj["box"]),
                    class_name=obj["class"],
                    confidence=float(obj["confidence"]),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"{path}:{line_no}: bad prediction record: {exc}") from exc
    return records


def write_boxes(path: str | Path, records: Iterable[GroundTruthBox | PredictionBox]) -> None:
    lines = []
    for rec in records:
        obj: dict = {"image_id": rec.image_id, "class": rec.class_name, "box": rec.box.as_list()}
        if isinstance(rec, PredictionBox):
            obj["confidence"] = rec.confidence
        lines.append(json.dumps(obj, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_pairs(path: str | Path) -> list[tuple[str, str]]:
    """Classification pairs CSV with a ``true,predicted`` header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["true", "predicted"]:
            raise ValueError(f"{path}: expected header 'true,predicted'")
        pairs = []
        for row_no, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) < 2 or not row[0] or not row[1]:
                raise ValueError(f"{path}:{row_no}: bad pair row {row!r}")
            pairs.append((row[0], row[1]))
    return pairs


def class_report_text(matrix: ConfusionMatrix, report: ClassReport) -> str:
    """Aligned-column text rendering of a class report."""
    width = max([len("class")] + [len(label) for label in matrix.labels])
    lines = [
        f"{'class':<{width}}  {'accuracy':>9} {'precision':>9} {'recall':>9} "
        f"{'f1':>9} {'support':>8}"
    ]
    for label in matrix.labels:
        m = report.per_class[label]
        lines.append(
            f"{label:<{width}}  {100 * m.accuracy:9.2f} {100 * m.precision:9.2f} "
            f"{100 * m.recall:9.2f} {100 * m.f1:9.2f} {m.support:8d}"
        )
    lines.append("")
    lines.append(f"overall accuracy: {100 * report.overall_accuracy:.2f}%")
    lines.append(
        f"macro precision/recall/f1: {100 * report.macro_precision:.2f}% "
        f"{100 * report.macro_recall:.2f}% {100 * report.macro_f1:.2f}%"
    )
    return "\n".join(lines)
