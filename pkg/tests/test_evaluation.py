from __future__ import annotations

import random

import pytest

from reef_miner import fixtures
from reef_miner.evaluation import (
    COCO_THRESHOLDS,
    ConfusionMatrix,
    GroundTruthBox,
    PredictionBox,
    average_precision,
    class_report,
    confusion_matrix,
    fixture_check,
    match_detections,
    mean_ap,
    read_ground_truth,
    read_pairs,
    read_predictions,
    write_boxes,
)
from reef_miner.masks import box_iou
from reef_miner.model import BoundingBox

from oracles import ap_101_point, greedy_match_reference


def gt(image_id, cls, x0, y0, x1, y1):
    return GroundTruthBox(image_id=image_id, box=BoundingBox(x0, y0, x1, y1), class_name=cls)


def pred(image_id, cls, x0, y0, x1, y1, conf):
    return PredictionBox(
        image_id=image_id, box=BoundingBox(x0, y0, x1, y1), class_name=cls, confidence=conf
    )


def random_scene(rng: random.Random, max_boxes=6, max_classes=3):
    """A synthetic image's ground truths and loosely-jittered predictions."""
    classes = ["A", "B", "C"][: rng.randint(1, max_classes)]
    gts, preds = [], []
    for _ in range(rng.randint(1, max_boxes)):
        x0, y0 = rng.randrange(0, 80), rng.randrange(0, 80)
        w, h = rng.randint(4, 20), rng.randint(4, 20)
        cls = rng.choice(classes)
        gts.append(gt("img", cls, x0, y0, x0 + w, y0 + h))
        if rng.random() < 0.8:  # jittered prediction for this gt
            dx, dy = rng.randint(-3, 3), rng.randint(-3, 3)
            px0, py0 = max(0, x0 + dx), max(0, y0 + dy)
            preds.append(
                pred(
                    "img", rng.choice(classes),
                    px0, py0,
                    px0 + w + rng.randint(-2, 2),
                    py0 + h + rng.randint(-2, 2),
                    round(rng.random(), 3),
                )
            )
    for _ in range(rng.randint(0, 2)):  # spurious predictions
        x0, y0 = rng.randrange(0, 80), rng.randrange(0, 80)
        preds.append(
            pred("img", rng.choice(classes), x0, y0, x0 + rng.randint(2, 10),
                 y0 + rng.randint(2, 10), round(rng.random(), 3))
        )
    return preds, gts


class TestMatching:
    def test_single_tp(self):
        g = [gt("i", "A", 0, 0, 10, 10)]
        p = [pred("i", "A", 0, 0, 10, 8, 0.9)]  # IoU 0.8
        result = match_detections(p, g, 0.5)
        assert [m.is_tp for m in result.matches] == [True]
        assert result.num_unmatched_gt == 0

    def test_low_iou_is_fp_and_missed_gt(self):
        g = [gt("i", "A", 0, 0, 10, 10)]
        p = [pred("i", "A", 0, 6, 10, 16, 0.9)]  # IoU = 40/160 = 0.25
        result = match_detections(p, g, 0.5)
        assert [m.is_tp for m in result.matches] == [False]
        assert result.num_unmatched_gt == 1

    def test_class_must_match(self):
        g = [gt("i", "A", 0, 0, 10, 10)]
        p = [pred("i", "B", 0, 0, 10, 10, 0.9)]
        assert [m.is_tp for m in match_detections(p, g, 0.5).matches] == [False]

    def test_two_predictions_one_gt(self):
        g = [gt("i", "A", 0, 0, 10, 10)]
        p = [
            pred("i", "A", 0, 0, 10, 9, 0.6),
            pred("i", "A", 0, 0, 10, 10, 0.9),
        ]
        result = match_detections(p, g, 0.5)
        # confidence 0.9 matches first; the 0.6 one finds the gt taken
        assert [(m.prediction.confidence, m.is_tp) for m in result.matches] == [
            (0.9, True),
            (0.6, False),
        ]

    def test_threshold_validated(self):
        with pytest.raises(ValueError):
            match_detections([], [], 0.0)
        with pytest.raises(ValueError):
            match_detections([], [], 1.2)

    def test_matches_reference_on_random_small_cases(self):
        rng = random.Random(2024)
        for _ in range(300):
            preds, gts = random_scene(rng, max_boxes=3)
            result = match_detections(preds, gts, 0.5)
            ref_flags = greedy_match_reference(
                [(p.image_id, p.class_name, p.box, p.confidence) for p in preds],
                [(g.image_id, g.class_name, g.box) for g in gts],
                0.5,
                box_iou,
            )
            assert [m.is_tp for m in result.matches] == ref_flags

    def test_duplicating_a_tp_never_increases_matched_count(self):
        # on scenes whose ground truths are spaced so a box can reach only
        # its own gt, a duplicated detection must fall out as an FP
        rng = random.Random(808)
        for _ in range(100):
            gts, preds = [], []
            for k in range(rng.randint(1, 6)):
                x0, y0 = 200 * k, 0
                w, h = rng.randint(10, 30), rng.randint(10, 30)
                gts.append(gt("i", "A", x0, y0, x0 + w, y0 + h))
                preds.append(pred("i", "A", x0, y0, x0 + w, y0 + h, round(rng.random(), 3)))
            base = match_detections(preds, gts, 0.5)
            tps = [m.prediction for m in base.matches if m.is_tp]
            doubled = list(preds) + [tps[0]]
            again = match_detections(doubled, gts, 0.5)
            assert sum(m.is_tp for m in again.matches) == sum(m.is_tp for m in base.matches)

    def test_no_gt_matched_twice_even_with_duplicates(self):
        rng = random.Random(809)
        for _ in range(100):
            preds, gts = random_scene(rng)
            base = match_detections(preds, gts, 0.5)
            tps = [m.prediction for m in base.matches if m.is_tp]
            if not tps:
                continue
            doubled = list(preds) + [tps[0]]
            again = match_detections(doubled, gts, 0.5)
            matched_gts = [m.gt_index for m in again.matches if m.is_tp]
            assert len(matched_gts) == len(set(matched_gts))
            assert again.num_unmatched_gt == len(gts) - len(matched_gts)


class TestAveragePrecision:
    def test_perfect_predictions(self):
        gts = [gt("i", "A", 0, 0, 10, 10), gt("i", "A", 20, 20, 30, 30)]
        preds = [
            pred("i", "A", 0, 0, 10, 10, 0.9),
            pred("i", "A", 20, 20, 30, 30, 0.8),
        ]
        assert average_precision(preds, gts, 0.5) == 1.0

    def test_no_predictions(self):
        assert average_precision([], [gt("i", "A", 0, 0, 5, 5)], 0.5) == 0.0

    def test_zero_gt_undefined(self):
        with pytest.raises(ValueError):
            average_precision([pred("i", "A", 0, 0, 5, 5, 0.5)], [], 0.5)

    def test_tp_fp_tp_sequence(self):
        gts = [gt("i", "A", 0, 0, 10, 10), gt("i", "A", 40, 40, 50, 50)]
        preds = [
            pred("i", "A", 0, 0, 10, 10, 0.9),   # TP
            pred("i", "A", 70, 70, 80, 80, 0.8),  # FP
            pred("i", "A", 40, 40, 50, 50, 0.7),  # TP
        ]
        ap = average_precision(preds, gts, 0.5)
        result = match_detections(preds, gts, 0.5)
        oracle = ap_101_point(
            [(m.prediction.confidence, m.is_tp) for m in result.matches], 2
        )
        assert ap == pytest.approx(oracle, abs=1e-12)
        # hand value: p=1 up to r=0.5, then max precision 2/3 up to r=1
        assert ap == pytest.approx((51 * 1.0 + 50 * (2 / 3)) / 101, abs=1e-12)

    def test_oracle_equivalence_on_200_random_scenes(self):
        rng = random.Random(31337)
        for _ in range(200):
            preds, gts = random_scene(rng)
            for cls in sorted({g.class_name for g in gts}):
                cls_preds = [p for p in preds if p.class_name == cls]
                cls_gts = [g for g in gts if g.class_name == cls]
                ap = average_precision(cls_preds, cls_gts, 0.5)
                matched = match_detections(cls_preds, cls_gts, 0.5)
                oracle = ap_101_point(
                    [(m.prediction.confidence, m.is_tp) for m in matched.matches],
                    len(cls_gts),
                )
                assert ap == pytest.approx(oracle, abs=1e-12)

    def test_confidence_rank_invariance(self):
        rng = random.Random(17)
        preds, gts = random_scene(rng)
        base = average_precision(preds, gts, 0.5)
        squashed = [
            PredictionBox(p.image_id, p.box, p.class_name, p.confidence**3) for p in preds
        ]
        assert average_precision(squashed, gts, 0.5) == pytest.approx(base, abs=1e-12)

    def test_trailing_fp_never_increases_ap(self):
        rng = random.Random(23)
        for _ in range(50):
            preds, gts = random_scene(rng)
            if not preds:
                continue
            base = average_precision(preds, gts, 0.5)
            lowest = min(p.confidence for p in preds)
            extra = preds + [pred("img", gts[0].class_name, 0, 0, 1, 1, lowest * 0.5)]
            assert average_precision(extra, gts, 0.5) <= base + 1e-12


class TestMeanAp:
    def test_perfect_everywhere(self):
        gts = [gt("i", "A", 0, 0, 10, 10), gt("i", "B", 20, 20, 40, 40)]
        preds = [
            pred("i", "A", 0, 0, 10, 10, 0.9),
            pred("i", "B", 20, 20, 40, 40, 0.9),
        ]
        result = mean_ap(preds, gts)
        assert result.map50 == 1.0
        assert result.map5095 == 1.0

    def test_constant_ap_mean(self):
        # same AP at every threshold -> map5095 equals it
        gts = [gt("i", "A", 0, 0, 10, 10)]
        preds = [pred("i", "A", 0, 0, 10, 10, 0.9), pred("i", "A", 50, 50, 60, 60, 0.8)]
        result = mean_ap(preds, gts)
        aps = set(result.per_threshold.values())
        assert len(aps) == 1
        assert result.map5095 == pytest.approx(next(iter(aps)), abs=1e-12)

    def test_classes_without_gt_excluded(self):
        gts = [gt("i", "A", 0, 0, 10, 10)]
        preds = [
            pred("i", "A", 0, 0, 10, 10, 0.9),
            pred("i", "B", 50, 50, 60, 60, 0.9),  # class B has no gt
        ]
        result = mean_ap(preds, gts, thresholds=(0.5,))
        assert set(result.per_class) == {"A"}
        assert result.map50 == 1.0

    def test_two_class_mean_matches_per_class_oracle(self):
        rng = random.Random(555)
        preds_a, gts_a = random_scene(rng, max_classes=1)
        preds_b, gts_b = random_scene(rng, max_classes=1)
        preds_b = [PredictionBox(p.image_id, p.box, "B", p.confidence) for p in preds_b]
        gts_b = [GroundTruthBox(g.image_id, g.box, "B") for g in gts_b]
        result = mean_ap(preds_a + preds_b, gts_a + gts_b, thresholds=(0.5,))
        ap_a = average_precision(preds_a, gts_a, 0.5)
        ap_b = average_precision(preds_b, gts_b, 0.5)
        assert result.per_threshold[0.5] == pytest.approx((ap_a + ap_b) / 2, abs=1e-12)

    def test_coco_thresholds(self):
        assert COCO_THRESHOLDS == (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)

    def test_map5095_bounded_by_map50_on_monotone_corpus(self):
        # one jittered prediction per well-separated gt: AP can only fall
        # as the IoU threshold rises, so the range mean cannot beat map50
        rng = random.Random(4040)
        gts, preds = [], []
        for k in range(40):
            x0, y0 = 100 * (k % 8), 100 * (k // 8)
            w = h = rng.randint(20, 40)
            gts.append(gt(f"i{k % 4}", "A", x0, y0, x0 + w, y0 + h))
            shrink = rng.randint(0, 8)
            preds.append(
                pred(f"i{k % 4}", "A", x0, y0, x0 + w - shrink, y0 + h - shrink,
                     round(rng.random(), 3))
            )
        result = mean_ap(preds, gts)
        values = [result.per_threshold[t] for t in COCO_THRESHOLDS]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
        assert result.map5095 <= result.map50 + 1e-12


class TestConfusionMatrix:
    def test_diagonal_when_perfect(self):
        pairs = [("A", "A"), ("B", "B"), ("A", "A")]
        m = confusion_matrix(pairs, ["A", "B"])
        assert m.counts == ((2, 0), (0, 1))
        assert m.row_sum("A") == 2 and m.col_sum("B") == 1

    def test_empty_pairs(self):
        m = confusion_matrix([], ["A", "B"])
        assert m.counts == ((0, 0), (0, 0))

    def test_mixed_pairs_hand_count(self):
        pairs = [("A", "A"), ("A", "B"), ("B", "B"), ("B", "B"), ("B", "A")]
        m = confusion_matrix(pairs, ["A", "B"])
        assert m.counts == ((1, 1), (1, 2))

    def test_unknown_class_named(self):
        with pytest.raises(ValueError, match="Zoanthus"):
            confusion_matrix([("Zoanthus", "A")], ["A"])

    def test_share(self):
        m = confusion_matrix([("A", "A"), ("A", "B"), ("A", "B"), ("A", "B")], ["A", "B"])
        assert m.share("A", "B") == 0.75


class TestClassReport:
    def test_hand_checked_2x2(self):
        m = ConfusionMatrix(labels=("x", "y"), counts=((1, 1), (0, 2)))
        report = class_report(m)
        assert report.overall_accuracy == pytest.approx(0.75)
        assert report.per_class["x"].recall == pytest.approx(0.5)
        assert report.per_class["x"].precision == pytest.approx(1.0)
        assert report.per_class["x"].f1 == pytest.approx(2 / 3)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            class_report(ConfusionMatrix(labels=("a",), counts=((0,),)))

    def test_label_permutation_invariance(self):
        pairs = [("A", "A"), ("A", "B"), ("B", "B"), ("C", "A"), ("C", "C")]
        r1 = class_report(confusion_matrix(pairs, ["A", "B", "C"]))
        r2 = class_report(confusion_matrix(pairs, ["C", "A", "B"]))
        for label in "ABC":
            assert r1.per_class[label] == r2.per_class[label]
        assert r1.macro_f1 == pytest.approx(r2.macro_f1, abs=1e-15)

    def test_f1_from_printed_precision_recall(self):
        # Acropora reference row: P 96.36, R 94.79 -> F1 95.57
        p, r = 0.9636, 0.9479
        f1 = 2 * p * r / (p + r)
        assert 100 * f1 == pytest.approx(95.57, abs=0.01)


class TestFixtureCheck:
    def build_report_from_fixture(self):
        return class_report(fixtures.low_accuracy_confusion().matrix)

    def test_identical_tables_zero_tolerance(self):
        report = self.build_report_from_fixture()
        expected = {
            label: {"recall": 100 * m.recall} for label, m in report.per_class.items()
        }
        assert fixture_check(report, expected, 0.0).passed

    def test_perturbed_cell_fails_and_names_it(self):
        report = self.build_report_from_fixture()
        expected = {"Favites": {"recall": 100 * report.per_class["Favites"].recall + 0.1}}
        check = fixture_check(report, expected, 0.02)
        assert not check.passed
        assert check.failures()[0].label == "Favites"
        assert check.failures()[0].metric == "recall"

    def test_label_mismatch_raises(self):
        report = self.build_report_from_fixture()
        with pytest.raises(ValueError, match="label mismatch"):
            fixture_check(report, {"Zoanthus": {"recall": 50.0}}, 0.02)

    def test_low_accuracy_fixture_reproduces_published_recalls(self):
        fx = fixtures.low_accuracy_confusion()
        report = class_report(fx.matrix)
        expected = {g: {"recall": pct} for g, pct in fx.expected_recall_pct.items()}
        check = fixture_check(report, expected, 0.02)
        assert check.passed, check.failures()

    def test_low_accuracy_fixture_misclassification_shares(self):
        fx = fixtures.low_accuracy_confusion()
        for true_g, pred_g, pct in fx.expected_share_pct:
            assert 100 * fx.matrix.share(true_g, pred_g) == pytest.approx(pct, abs=0.02)


class TestReferenceTables:
    def test_44_genus_rows(self):
        rows, overall = fixtures.genus_metrics_reference()
        assert len(rows) == 44
        assert overall.accuracy_pct == 88.00

    def test_f1_consistent_with_printed_precision_recall(self):
        rows, _ = fixtures.genus_metrics_reference()
        for row in rows:
            p, r = row.precision_pct, row.recall_pct
            f1 = 2 * p * r / (p + r)
            assert f1 == pytest.approx(row.f1_pct, abs=0.01), row.genus

    def test_accuracy_column_equals_recall_column(self):
        rows, _ = fixtures.genus_metrics_reference()
        assert all(row.accuracy_pct == row.recall_pct for row in rows)

    def test_overall_row_holds_macro_means(self):
        rows, overall = fixtures.genus_metrics_reference()
        macro_r = sum(r.recall_pct for r in rows) / len(rows)
        macro_p = sum(r.precision_pct for r in rows) / len(rows)
        macro_f1 = sum(r.f1_pct for r in rows) / len(rows)
        assert macro_r == pytest.approx(overall.recall_pct, abs=0.01)
        assert macro_p == pytest.approx(overall.precision_pct, abs=0.01)
        assert macro_f1 == pytest.approx(overall.f1_pct, abs=0.01)


class TestRecordFiles:
    def test_round_trip(self, tmp_path):
        gts = [gt("img1", "A", 0, 0, 10, 10), gt("img2", "B", 5, 5, 9, 9)]
        preds = [pred("img1", "A", 0, 0, 10, 10, 0.9)]
        gt_path, pred_path = tmp_path / "gt.ndjson", tmp_path / "pred.ndjson"
        write_boxes(gt_path, gts)
        write_boxes(pred_path, preds)
        assert read_ground_truth(gt_path) == gts
        assert read_predictions(pred_path) == preds

    def test_bad_record_rejected_with_line(self, tmp_path):
        path = tmp_path / "bad.ndjson"
        path.write_text('{"image_id": "a", "class": "A", "box": [0, 0, 10]}\n')
        with pytest.raises(ValueError, match=":1:"):
            read_ground_truth(path)

    def test_pairs_csv(self, tmp_path):
        path = tmp_path / "pairs.csv"
        path.write_text("true,predicted\nAcropora,Acropora\nFavia,Favites\n")
        assert read_pairs(path) == [("Acropora", "Acropora"), ("Favia", "Favites")]

    def test_pairs_header_required(self, tmp_path):
        path = tmp_path / "pairs.csv"
        path.write_text("a,b\nx,y\n")
        with pytest.raises(ValueError, match="header"):
            read_pairs(path)
