"""Command-line entry point: analyze quadrats, score predictions, summarize datasets.

Exit codes: 0 success, 1 bad flags or invalid input data, 2 backend or
protocol failure. Output files are written atomically (temp file + rename)
so a crash never leaves a partial artifact behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__, dataset_stats, ecology, evaluation, fixtures, pipeline
from .backends import BackendSet, TransportError, descriptor_from_cli, open_backend
from .taxonomy import canonical_taxonomy
from .pipeline import PipelineConfig, PipelineError
from .protocol import PROTOCOL_VERSION, ProtocolError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

CONFIG_KEYS = {
    "detector": str,
    "segmenter": str,
    "classifier": str,
    "seed": int,
    "parallelism": int,
    "confidence-min": float,
    "prompt-padding": int,
    "mock": bool,
}


class ConfigError(ValueError):
    pass


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def load_config_file(path: str | Path) -> dict:
    """Flat key=value file; unknown keys are rejected before any work starts."""
    values: dict = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
        caster = CONFIG_KEYS[key]
        try:
            if caster is bool:
                if value.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(f"not a boolean: {value!r}")
                values[key] = value.lower() in ("true", "1")
            else:
                values[key] = caster(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{line_no}: bad value for {key!r}: {exc}") from exc
    return values


def _merged_option(args, flag_name: str, config: dict, config_key: str, default):
    value = getattr(args, flag_name, None)
    if value is not None:
        return value
    if config_key in config:
        return config[config_key]
    return default


def _load_run_config(args) -> dict:
    config_path = getattr(args, "config", None)
    if config_path is None:
        config_path = os.environ.get("REEF_MINER_CONFIG") or None
    if config_path is None:
        return {}
    if not Path(config_path).is_file():
        raise ConfigError(f"config file not found: {config_path}")
    return load_config_file(config_path)


def _open_backends(args, config: dict, seed: int) -> BackendSet:
    mock = bool(_merged_option(args, "mock", config, "mock", False))
    if mock:
        return pipeline.mock_backends(seed)
    clients = {}
    for kind_flag, kind in (
        ("detector", "detector"),
        ("segmenter", "segmenter"),
        ("classifier", "classifier"),
    ):
        value = _merged_option(args, kind_flag, config, kind_flag, None)
        if not value:
            raise ConfigError(f"--{kind_flag} is required unless --mock is given")
        clients[kind] = open_backend(descriptor_from_cli(kind, value))
    return BackendSet(
        detector=clients["detector"],
        segmenter=clients["segmenter"],
        classifier=clients["classifier"],
    )


def cmd_analyze(args) -> int:
    config = _load_run_config(args)
    seed = int(_merged_option(args, "seed", config, "seed", 0))
    pconfig = PipelineConfig(
        detection_confidence_min=float(
            _merged_option(args, "confidence_min", config, "confidence-min", 0.25)
        ),
        prompt_padding=int(_merged_option(args, "prompt_padding", config, "prompt-padding", 0)),
        batch_parallelism=int(_merged_option(args, "parallelism", config, "parallelism", 1)),
    )
    target = Path(args.path)
    if not target.exists():
        raise ConfigError(f"no such image or directory: {target}")

    with _open_backends(args, config, seed) as backends:
        if target.is_dir():
            images = sorted(
                p for p in target.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
            )
            if not images:
                raise ConfigError(f"no images found under {target}")
            result = pipeline.analyze_batch(images, backends, pconfig)
            payload = {
                "reports": [ecology.report_to_dict(r) for r in result.reports],
                "failures": [
                    {"index": f.index, "image": f.image, "stage": f.stage, "error": f.error}
                    for f in result.failures
                ],
                "summary": {
                    **result.summary,
                    "mean_total_cover": round(result.summary["mean_total_cover"], 6),
                    "genus_cover_mean": {
                        g: round(v, 6) for g, v in result.summary["genus_cover_mean"].items()
                    },
                },
            }
            reports = result.reports
        else:
            report = pipeline.analyze_quadrat(args.path, backends, pconfig)
            payload = ecology.report_to_dict(report)
            reports = (report,)

    text = dump_json(payload)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.csv:
        header, rows = ecology.reports_to_csv_rows(reports)
        csv_text = "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"
        atomic_write(args.csv, csv_text)
    return 0


def cmd_eval_det(args) -> int:
    predictions = evaluation.read_predictions(args.pred)
    ground_truths = evaluation.read_ground_truth(args.gt)
    thresholds = evaluation.COCO_THRESHOLDS if args.coco_range else (args.iou,)
    result = evaluation.mean_ap(predictions, ground_truths, thresholds)
    payload = {
        "per_threshold": {f"{t:.2f}": round(v, 6) for t, v in result.per_threshold.items()},
        "map50": None if result.map50 is None else round(result.map50, 6),
        "map5095": round(result.map5095, 6),
        "per_class": {
            c: {f"{t:.2f}": round(v, 6) for t, v in by_t.items()}
            for c, by_t in result.per_class.items()
        },
        "predictions": len(predictions),
        "ground_truths": len(ground_truths),
    }
    text = dump_json(payload)
    if args.out:
        atomic_write(args.out, text)
    for t in thresholds:
        sys.stdout.write(f"AP@{t:.2f}: {result.per_threshold[t]:.6f}\n")
    if args.coco_range:
        sys.stdout.write(f"mAP@0.50-0.95: {result.map5095:.6f}\n")
    return 0


def cmd_eval_cls(args) -> int:
    pairs = evaluation.read_pairs(args.pairs)
    if not pairs:
        raise ConfigError(f"{args.pairs}: no classification pairs")
    labels = sorted({c for pair in pairs for c in pair})
    matrix = evaluation.confusion_matrix(pairs, labels)
    report = evaluation.class_report(matrix)
    payload = {
        "labels": list(labels),
        "overall_accuracy": round(report.overall_accuracy, 6),
        "macro_precision": round(report.macro_precision, 6),
        "macro_recall": round(report.macro_recall, 6),
        "macro_f1": round(report.macro_f1, 6),
        "per_class": {
            label: {
                "accuracy": round(m.accuracy, 6),
                "precision": round(m.precision, 6),
                "recall": round(m.recall, 6),
                "f1": round(m.f1, 6),
                "support": m.support,
            }
            for label, m in report.per_class.items()
        },
    }
    sys.stdout.write(evaluation.class_report_text(matrix, report) + "\n")
    if args.fixtures:
        name = fixtures.resolve_fixture_name(args.fixtures)
        expected = fixtures.genus_metrics_expected_table()
        check = evaluation.fixture_check(report, expected, args.tolerance)
        payload["fixture"] = {
            "name": name,
            "tolerance_pp": args.tolerance,
            "passed": check.passed,
            "failures": [
                {
                    "label": c.label,
                    "metric": c.metric,
                    "computed_pct": round(c.computed_pct, 4),
                    "expected_pct": c.expected_pct,
                    "delta_pp": round(c.delta_pp, 4),
                }
                for c in check.failures()
            ],
        }
        status = "pass" if check.passed else "FAIL"
        sys.stdout.write(f"fixture {name}: {status} ({len(check.cells)} cells)\n")
    if args.out:
        atomic_write(args.out, dump_json(payload))
    return 0


def cmd_stats(args) -> int:
    manifest = dataset_stats.read_manifest(args.manifest)
    distribution = dataset_stats.genus_distribution(manifest)
    edges = None
    if args.edges:
        edges = tuple(int(e) for e in args.edges.split(","))
    histogram = dataset_stats.resolution_histogram(manifest, edges)
    payload = {
        "images": len(manifest),
        "distribution": [
            {"genus": r.genus, "count": r.count, "percent": round(r.percentage, 2)}
            for r in distribution
        ],
        "unknown_genera": dataset_stats.unknown_genera(manifest, canonical_taxonomy()),
        "resolution_histogram": [
            {"bin": b.label(), "count": b.count} for b in histogram
        ],
    }
    sys.stdout.write(dataset_stats.distribution_text(distribution) + "\n\n")
    sys.stdout.write(dataset_stats.histogram_text(histogram) + "\n")
    if args.hist_csv:
        lines = ["lower_exclusive,upper_inclusive,count"]
        lines += [f"{b.lower},{'' if b.upper is None else b.upper},{b.count}" for b in histogram]
        atomic_write(args.hist_csv, "\n".join(lines) + "\n")
    if args.bboxes:
        ground_truths = evaluation.read_ground_truth(args.bboxes)
        dims = {e.image_id: (e.width, e.height) for e in manifest}
        stats = dataset_stats.bbox_stats(ground_truths, dims)
        n = len(stats.aspect_ratios)
        payload["bboxes"] = {
            "count": n,
            "class_counts": dataset_stats.class_counts(ground_truths),
            "mean_center": [
                round(sum(c[0] for c in stats.centers) / n, 6),
                round(sum(c[1] for c in stats.centers) / n, 6),
            ]
            if n
            else None,
            "mean_size": [
                round(sum(s[0] for s in stats.sizes) / n, 6),
                round(sum(s[1] for s in stats.sizes) / n, 6),
            ]
            if n
            else None,
            "mean_aspect": round(sum(stats.aspect_ratios) / n, 6) if n else None,
        }
        if args.bbox_csv:
            lines = ["image_id,class,cx,cy,w,h,aspect"]
            for gt, c, s, a in zip(
                ground_truths, stats.centers, stats.sizes, stats.aspect_ratios
            ):
                lines.append(
                    f"{gt.image_id},{gt.class_name},{c[0]:.6f},{c[1]:.6f},"
                    f"{s[0]:.6f},{s[1]:.6f},{a:.6f}"
                )
            atomic_write(args.bbox_csv, "\n".join(lines) + "\n")
    if args.out:
        atomic_write(args.out, dump_json(payload))
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reef-miner", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"reef-miner {__version__} (protocol v{PROTOCOL_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the cascade over an image or directory")
    p.add_argument("path", help="image file or directory of images")
    p.add_argument("--detector", help="backend command line or http(s) URL")
    p.add_argument("--segmenter", help="backend command line or http(s) URL")
    p.add_argument("--classifier", help="backend command line or http(s) URL")
    p.add_argument("--mock", action="store_true", default=None, help="use in-process mock backends")
    p.add_argument("--seed", type=int, help="seed for all mock randomness (default 0)")
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--csv", help="write the flattened report CSV here")
    p.add_argument("--parallelism", type=int, help="quadrats in flight (default 1)")
    p.add_argument("--confidence-min", dest="confidence_min", type=float,
                   help="drop detections below this confidence (default 0.25)")
    p.add_argument("--prompt-padding", dest="prompt_padding", type=int,
                   help="pixels of padding around each box prompt (default 0)")
    p.add_argument("--config", help="key=value config file (or set REEF_MINER_CONFIG)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("eval-det", help="detection mAP over prediction/ground-truth files")
    p.add_argument("--pred", required=True, help="predictions, newline-delimited JSON")
    p.add_argument("--gt", required=True, help="ground truth, newline-delimited JSON")
    p.add_argument("--iou", type=float, default=0.5, help="IoU threshold (default 0.5)")
    p.add_argument("--coco-range", action="store_true",
                   help="sweep IoU 0.50:0.05:0.95 and report the mean")
    p.add_argument("--out", help="write the metrics JSON here")
    p.set_defaults(func=cmd_eval_det)

    p = sub.add_parser("eval-cls", help="classification report from a true/predicted pairs file")
    p.add_argument("--pairs", required=True, help="CSV with header true,predicted")
    p.add_argument("--fixtures", help="compare against a bundled reference table (e.g. tableA2)")
    p.add_argument("--tolerance", type=float, default=0.02,
                   help="fixture tolerance in percentage points (default 0.02)")
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_eval_cls)

    p = sub.add_parser("stats", help="dataset statistics from a manifest (and optional boxes)")
    p.add_argument("--manifest", required=True, help="CSV with header image_id,genus,width,height")
    p.add_argument("--bboxes", help="ground-truth boxes, newline-delimited JSON")
    p.add_argument("--edges", help="comma-separated histogram edges (default 64..4096)")
    p.add_argument("--out", help="write the statistics JSON here")
    p.add_argument("--hist-csv", dest="hist_csv", help="write histogram rows as CSV")
    p.add_argument("--bbox-csv", dest="bbox_csv", help="write per-box geometry rows as CSV")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (PipelineError, ProtocolError, TransportError) as exc:
        sys.stderr.write(f"backend error: {exc}\n")
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
