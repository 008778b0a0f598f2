from __future__ import annotations

import math
import random

import pytest

from reef_miner import masks
from reef_miner.ecology import (
    DegenerateQuadratError,
    MissingGenusError,
    build_report,
    dominant_genus,
    genus_cover,
    report_to_dict,
    reports_to_csv_rows,
    richness,
    shannon_index,
    simpson_index,
    total_cover,
)
from reef_miner.masks import instance_from_mask, rasterize_box
from reef_miner.model import BoundingBox, GenusLabel, ImageRef, QuadratScene, RleMask

from oracles import pixel_set, shannon_direct, simpson_sum_squares


def labeled_instance(box, width, height, genus, confidence=0.8):
    mask = rasterize_box(box, width, height)
    return instance_from_mask(mask, confidence, genus=GenusLabel(genus, 0.9))


def scene_with(instances, width=100, height=100, roi=None):
    return QuadratScene(image=ImageRef("q", width, height), roi=roi, instances=tuple(instances))


class TestTotalCover:
    def test_full_cover(self):
        inst = labeled_instance(BoundingBox(0, 0, 10, 10), 10, 10, "Porites")
        assert total_cover(scene_with([inst], 10, 10)) == 1.0

    def test_no_instances(self):
        assert total_cover(scene_with([], 10, 10)) == 0.0

    def test_direct_ratio(self):
        inst = labeled_instance(BoundingBox(0, 0, 50, 50), 100, 100, "Porites")
        assert total_cover(scene_with([inst])) == 2500 / 10000

    def test_roi_changes_denominator(self):
        # ROI is the left half; an instance on the right half contributes nothing
        roi = rasterize_box(BoundingBox(0, 0, 50, 100), 100, 100)
        left = labeled_instance(BoundingBox(0, 0, 25, 100), 100, 100, "Porites")
        right = labeled_instance(BoundingBox(50, 0, 100, 100), 100, 100, "Acropora")
        cover = total_cover(scene_with([left, right], roi=roi))
        assert cover == pytest.approx(2500 / 5000)

    def test_degenerate_roi(self):
        roi = RleMask(100, 100, (10000,))
        with pytest.raises(DegenerateQuadratError):
            total_cover(scene_with([], roi=roi))

    def test_removing_instances_never_increases_cover(self):
        rng = random.Random(11)
        insts = [
            labeled_instance(BoundingBox(x, y, x + 10, y + 10), 100, 100, "Porites")
            for x, y in [(rng.randrange(80), rng.randrange(80)) for _ in range(5)]
        ]
        insts = list(masks.resolve_overlaps(insts))
        full = total_cover(scene_with(insts))
        for i in range(len(insts)):
            reduced = total_cover(scene_with(insts[:i] + insts[i + 1 :]))
            assert reduced <= full + 1e-15


class TestGenusCover:
    def test_single_genus_full_abundance(self):
        inst = labeled_instance(BoundingBox(0, 0, 5, 5), 10, 10, "Porites")
        table = genus_cover(scene_with([inst], 10, 10))
        assert table.rows["Porites"].relative_abundance == 1.0

    def test_forced_ratio(self):
        a = labeled_instance(BoundingBox(0, 0, 30, 10), 100, 100, "Acropora")
        b = labeled_instance(BoundingBox(0, 20, 10, 30), 100, 100, "Porites")
        table = genus_cover(scene_with([a, b]))
        assert table.rows["Acropora"].relative_abundance == pytest.approx(0.75)
        assert table.rows["Porites"].relative_abundance == pytest.approx(0.25)

    def test_missing_genus_raises(self):
        inst = instance_from_mask(rasterize_box(BoundingBox(0, 0, 5, 5), 10, 10), 0.8)
        with pytest.raises(MissingGenusError):
            genus_cover(scene_with([inst], 10, 10))

    def test_three_genus_scene_matches_pixel_tally(self):
        rng = random.Random(77)
        genera = ["Acropora", "Porites", "Favia"]
        instances = []
        for _ in range(6):
            x, y = rng.randrange(90), rng.randrange(90)
            instances.append(
                labeled_instance(
                    BoundingBox(x, y, x + rng.randint(2, 10), y + rng.randint(2, 10)),
                    100, 100, rng.choice(genera), confidence=rng.random(),
                )
            )
        resolved = masks.resolve_overlaps(instances)
        table = genus_cover(scene_with(resolved))
        # oracle: tally pixels per genus from decoded bitmaps
        tally: dict[str, set] = {}
        for inst in resolved:
            tally.setdefault(inst.genus.name, set()).update(
                pixel_set(inst.mask.counts, 100, 100)
            )
        assert set(table.rows) == set(tally)
        for name, pixels in tally.items():
            assert table.rows[name].pixels == len(pixels)
            assert table.rows[name].cover == pytest.approx(len(pixels) / 10000)
        assert table.coral_pixels == sum(len(p) for p in tally.values())
        assert math.fsum(r.relative_abundance for r in table.rows.values()) == pytest.approx(1.0)


class TestRichness:
    def test_empty(self):
        table = genus_cover(scene_with([], 10, 10))
        assert richness(table) == 0

    def test_counts_only_nonzero_pixel_rows(self):
        a = labeled_instance(BoundingBox(0, 0, 3, 3), 10, 10, "Acropora")
        # clipped to an ROI that excludes it entirely -> zero-pixel row
        b = labeled_instance(BoundingBox(8, 8, 10, 10), 10, 10, "Porites")
        roi = rasterize_box(BoundingBox(0, 0, 5, 10), 10, 10)
        table = genus_cover(scene_with([a, b], 10, 10, roi=roi))
        assert table.rows["Porites"].pixels == 0
        assert richness(table) == 1


class TestShannon:
    def test_single_genus_is_zero(self):
        assert shannon_index([1.0]) == 0.0

    def test_two_equal_genera(self):
        assert shannon_index([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-12)

    def test_mixed_vector_matches_direct_summation(self):
        p = (0.5, 0.3, 0.2)
        assert shannon_index(p) == pytest.approx(shannon_direct(p), abs=1e-15)
        assert shannon_index(p) == pytest.approx(1.029653014901327, abs=1e-9)

    def test_empty_is_zero(self):
        assert shannon_index([]) == 0.0

    def test_bad_sum_rejected(self):
        with pytest.raises(ValueError):
            shannon_index([0.5, 0.4])

    def test_uniform_equals_log_k(self):
        for k in range(1, 51):
            p = [1.0 / k] * k
            assert shannon_index(p) == pytest.approx(math.log(k), abs=1e-9)

    def test_never_exceeds_log_richness(self):
        rng = random.Random(13)
        for _ in range(1000):
            k = rng.randint(1, 12)
            raw = [rng.random() + 1e-9 for _ in range(k)]
            total = math.fsum(raw)
            p = [x / total for x in raw]
            assert shannon_index(p) <= math.log(k) + 1e-9


class TestSimpson:
    def test_single_genus(self):
        assert simpson_index([1.0], "gini") == 0.0
        assert simpson_index([1.0], "dominance") == 1.0

    def test_two_equal(self):
        assert simpson_index([0.5, 0.5], "gini") == pytest.approx(0.5, abs=1e-12)

    def test_known_vector(self):
        p = (0.5, 0.3, 0.2)
        assert simpson_index(p, "gini") == pytest.approx(1 - simpson_sum_squares(p), abs=1e-15)
        assert simpson_index(p, "gini") == pytest.approx(0.62, abs=1e-12)

    def test_dominance_is_exact_complement(self):
        rng = random.Random(29)
        for _ in range(1000):
            k = rng.randint(1, 15)
            raw = [rng.random() + 1e-9 for _ in range(k)]
            total = math.fsum(raw)
            p = [x / total for x in raw]
            gini = simpson_index(p, "gini")
            assert simpson_index(p, "dominance") == 1.0 - gini  # bitwise
            assert 0.0 <= gini <= 1.0 - 1.0 / k + 1e-12

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            simpson_index([1.0], "other")


class TestDominantGenus:
    def test_max_cover_wins(self):
        a = labeled_instance(BoundingBox(0, 0, 20, 20), 100, 100, "Acropora")
        b = labeled_instance(BoundingBox(50, 50, 60, 60), 100, 100, "Porites")
        assert dominant_genus(genus_cover(scene_with([a, b]))) == "Acropora"

    def test_empty_is_none(self):
        assert dominant_genus(genus_cover(scene_with([]))) is None

    def test_tie_breaks_lexicographically(self):
        a = labeled_instance(BoundingBox(0, 0, 10, 10), 100, 100, "Porites")
        b = labeled_instance(BoundingBox(50, 50, 60, 60), 100, 100, "Acropora")
        assert dominant_genus(genus_cover(scene_with([a, b]))) == "Acropora"


class TestBuildReport:
    def test_empty_scene(self):
        report = build_report(scene_with([], 10, 10))
        assert report.total_cover == 0.0
        assert report.richness == 0
        assert report.shannon == 0.0
        assert report.dominant_genus is None
        assert report.no_coral is True
        assert report.simpson_dominance == 1.0 - report.simpson_gini

    def test_single_full_cover_genus(self):
        inst = labeled_instance(BoundingBox(0, 0, 10, 10), 10, 10, "Porites")
        report = build_report(scene_with([inst], 10, 10))
        assert report.total_cover == 1.0
        assert report.richness == 1
        assert report.shannon == 0.0
        assert report.simpson_gini == 0.0
        assert report.dominant_genus == "Porites"

    def test_three_genus_composition(self):
        specs = [
            ("Acropora", BoundingBox(0, 0, 50, 10)),   # 500 px
            ("Porites", BoundingBox(0, 20, 30, 30)),   # 300 px
            ("Favia", BoundingBox(0, 40, 20, 50)),     # 200 px
        ]
        instances = [labeled_instance(box, 100, 100, g) for g, box in specs]
        report = build_report(scene_with(instances))
        assert report.coral_pixels == 1000
        assert report.total_cover == pytest.approx(0.1)
        assert report.richness == 3
        p = (0.5, 0.3, 0.2)
        assert report.shannon == pytest.approx(shannon_direct(p), abs=1e-12)
        assert report.simpson_gini == pytest.approx(1 - simpson_sum_squares(p), abs=1e-12)
        assert report.dominant_genus == "Acropora"
        assert report.instance_count == 3
        # model invariants of the report itself
        assert report.coral_pixels <= report.total_pixels
        assert sum(r.pixels for r in report.per_genus) == report.coral_pixels
        assert math.fsum(r.relative_abundance for r in report.per_genus) == pytest.approx(1.0)
        assert report.richness == sum(1 for r in report.per_genus if r.pixels > 0)

    def test_scaling_pixel_counts_preserves_indices(self):
        small = [
            labeled_instance(BoundingBox(0, 0, 5, 1), 100, 100, "Acropora"),
            labeled_instance(BoundingBox(0, 2, 3, 3), 100, 100, "Porites"),
        ]
        big = [
            labeled_instance(BoundingBox(0, 0, 50, 10), 1000, 1000, "Acropora"),
            labeled_instance(BoundingBox(0, 20, 30, 30), 1000, 1000, "Porites"),
        ]
        r1 = build_report(scene_with(small, 100, 100))
        r2 = build_report(scene_with(big, 1000, 1000))
        assert r1.shannon == pytest.approx(r2.shannon, abs=1e-12)
        assert r1.simpson_gini == pytest.approx(r2.simpson_gini, abs=1e-12)
        assert r1.richness == r2.richness
        assert r1.dominant_genus == r2.dominant_genus
        for a, b in zip(r1.per_genus, r2.per_genus):
            assert a.relative_abundance == pytest.approx(b.relative_abundance, abs=1e-12)


class TestExport:
    def test_json_rounding(self):
        inst = labeled_instance(BoundingBox(0, 0, 3, 1), 9, 1, "Porites")
        payload = report_to_dict(build_report(scene_with([inst], 9, 1)))
        assert payload["total_cover"] == round(3 / 9, 6)
        assert payload["per_genus"][0]["relative_abundance"] == 1.0

    def test_csv_columns_lexicographic(self):
        a = labeled_instance(BoundingBox(0, 0, 10, 10), 100, 100, "Porites")
        b = labeled_instance(BoundingBox(20, 20, 40, 40), 100, 100, "Acropora")
        header, rows = reports_to_csv_rows([build_report(scene_with([a, b]))])
        genus_cols = [c for c in header if "." in c]
        assert genus_cols == [
            "Acropora.pixels", "Acropora.cover", "Acropora.abundance",
            "Porites.pixels", "Porites.cover", "Porites.abundance",
        ]
        assert len(rows) == 1 and len(rows[0]) == len(header)
