"""Loaders for the reference tables bundled with the package.

These are the published benchmark values the evaluation tooling can check
a run against: the per-genus identification metrics, the low-accuracy
confusion fixture, and the genus count distributions of the two dataset
tiers.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .evaluation import ConfusionMatrix

# Comparison tolerance, percentage points. Reference percentages are printed
# to 2 decimals with an inconsistent truncate-vs-round convention, so exact
# recomputation can differ by up to one unit in the last place.
PERCENT_TOLERANCE_PP = 0.02
F1_CONSISTENCY_TOLERANCE_PP = 0.01

FIXTURE_ALIASES = {
    "tableA2": "genus-metrics",
    "genus-metrics": "genus-metrics",
}


def _data_text(name: str) -> str:
    return resources.files("reef_miner.data").joinpath(name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class GenusMetricsRow:
    genus: str
    accuracy_pct: float
    precision_pct: float
    recall_pct: float
    f1_pct: float


@lru_cache(maxsize=1)
def genus_metrics_reference() -> tuple[tuple[GenusMetricsRow, ...], GenusMetricsRow]:
    """Per-genus reference metrics and the separate overall row."""
    reader = csv.DictReader(io.StringIO(_data_text("genus_metrics_reference.csv")))
    rows = []
    overall = None
    for rec in reader:
        row = GenusMetricsRow(
            genus=rec["genus"],
            accuracy_pct=float(rec["accuracy_pct"]),
            precision_pct=float(rec["precision_pct"]),
            recall_pct=float(rec["recall_pct"]),
            f1_pct=float(rec["f1_pct"]),
        )
        if row.genus == "Overall":
            overall = row
        else:
            rows.append(row)
    if overall is None:
        raise ValueError("genus metrics reference is missing its Overall row")
    return tuple(rows), overall


def genus_metrics_expected_table() -> dict[str, dict[str, float]]:
    """Reference metrics shaped for :func:`reef_miner.evaluation.fixture_check`."""
    rows, _ = genus_metrics_reference()
    return {
        row.genus: {
            "accuracy": row.accuracy_pct,
            "precision": row.precision_pct,
            "recall": row.recall_pct,
            "f1": row.f1_pct,
        }
        for row in rows
    }


@dataclass(frozen=True)
class LowAccuracyFixture:
    matrix: ConfusionMatrix
    expected_recall_pct: dict[str, float]
    expected_share_pct: tuple[tuple[str, str, float], ...]


@lru_cache(maxsize=1)
def low_accuracy_confusion() -> LowAccuracyFixture:
    """Confusion fixture for the hardest genera, with its published expectations."""
    obj = json.loads(_data_text("confusion_low_accuracy.json"))
    labels = obj["labels"]
    index = {label: i for i, label in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for true_label, row in obj["rows"].items():
        for predicted_label, n in row.items():
            counts[index[true_label]][index[predicted_label]] = n
    return LowAccuracyFixture(
        matrix=ConfusionMatrix(labels=tuple(labels), counts=tuple(tuple(r) for r in counts)),
        expected_recall_pct=dict(obj["expected_recall_pct"]),
        expected_share_pct=tuple((a, b, v) for a, b, v in obj["expected_share_pct"]),
    )


@dataclass(frozen=True)
class GenusCountRow:
    genus: str
    count: int
    printed_percent: float


@lru_cache(maxsize=2)
def genus_count_table(tier: str) -> tuple[GenusCountRow, ...]:
    """Reference genus counts; ``tier`` is 'core' or 'extended'."""
    if tier not in ("core", "extended"):
        raise ValueError(f"unknown tier {tier!r} (expected 'core' or 'extended')")
    reader = csv.DictReader(io.StringIO(_data_text(f"genus_counts_{tier}.csv")))
    return tuple(
        GenusCountRow(
            genus=rec["genus"], count=int(rec["count"]), printed_percent=float(rec["percent"])
        )
        for rec in reader
    )


def resolve_fixture_name(name: str) -> str:
    if name not in FIXTURE_ALIASES:
        known = ", ".join(sorted(FIXTURE_ALIASES))
        raise ValueError(f"unknown fixture set {name!r} (known: {known})")
    return FIXTURE_ALIASES[name]
