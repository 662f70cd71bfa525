"""Metric arithmetic, success rates and dataset evaluation."""

from __future__ import annotations

import json

import numpy as np
import pytest

from craqreg.config import RegistrationConfig
from craqreg.errors import EmptyDataset, EmptyErrorList
from craqreg.evaluation import (
    ControlPointAnnotation,
    evaluate_dataset,
    load_annotation,
    load_manifest,
    mae,
    me,
    pair_errors,
    save_annotation,
    success_rate,
)
from craqreg.geometry import Homography
from craqreg.synthetic import build_dataset


class TestPairErrors:
    def test_identity_coincident_zero(self):
        ann = ControlPointAnnotation(
            "a", np.array([[1.0, 2.0]]), np.array([[1.0, 2.0]])
        )
        assert np.allclose(pair_errors(Homography.identity(), ann), 0.0)

    def test_offset_three_four_five(self):
        ann = ControlPointAnnotation(
            "a", np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])
        )
        assert pair_errors(Homography.identity(), ann)[0] == pytest.approx(5.0)

    def test_consistent_translation_zero(self):
        h = Homography.translation(1.0, 0.0)
        mov = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 2.0]])
        ann = ControlPointAnnotation("a", mov + [1.0, 0.0], mov)
        assert np.allclose(pair_errors(h, ann), 0.0)


class TestMetrics:
    def test_single_value(self):
        assert me([5.0]) == 5.0
        assert mae([5.0]) == 5.0

    def test_hand_arithmetic(self):
        assert me([2.0, 4.0, 6.0]) == 4.0
        assert mae([2.0, 4.0, 6.0]) == 6.0

    def test_zeros(self):
        assert me([0.0, 0.0]) == 0.0
        assert mae([0.0, 0.0]) == 0.0

    def test_me_leq_mae_property(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            errs = rng.exponential(3.0, size=rng.integers(1, 40))
            assert me(errs) <= mae(errs)

    def test_empty_raises(self):
        with pytest.raises(EmptyErrorList):
            me([])
        with pytest.raises(EmptyErrorList):
            mae([])


class TestSuccessRate:
    def test_two_of_three(self):
        assert success_rate([2.0, 4.0, 6.0], 5.0) == pytest.approx(66.6666666, abs=1e-4)

    def test_all_under(self):
        assert success_rate([1.0, 2.0], 5.0) == 100.0

    def test_twelve_of_thirteen(self):
        # matches the 92.3 of a 12/13 table cell: 1200/13
        values = [1.0] * 12 + [99.0]
        assert success_rate(values, 5.0) == pytest.approx(1200.0 / 13.0)

    def test_inf_counts_as_failure(self):
        assert success_rate([1.0, np.inf], 10.0) == 50.0

    def test_monotone_in_eps(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            vals = rng.exponential(5.0, size=rng.integers(1, 30))
            rates = [success_rate(vals, e) for e in (1, 2, 4, 8, 16)]
            assert all(a <= b for a, b in zip(rates, rates[1:]))
            assert all(0.0 <= r <= 100.0 for r in rates)

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            success_rate([], 5.0)


class TestAnnotationIo:
    def test_roundtrip(self, tmp_path):
        ann = ControlPointAnnotation(
            "p1",
            np.array([[1.5, 2.5], [3.0, 4.0]]),
            np.array([[5.0, 6.0], [7.0, 8.0]]),
        )
        path = tmp_path / "ann.json"
        save_annotation(path, ann)
        back = load_annotation(path)
        assert back.pair_id == "p1"
        assert np.allclose(back.ref_pts, ann.ref_pts)
        assert np.allclose(back.mov_pts, ann.mov_pts)

    def test_empty_points_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"pair_id": "x", "points": []}))
        with pytest.raises(ValueError):
            load_annotation(path)


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    return build_dataset(root, "identity", n_pairs=3, width=448, height=448, seed0=50)


class TestEvaluateDataset:
    def test_fixture_dataset_all_success(self, small_dataset):
        entries = load_manifest(small_dataset)
        cfg = RegistrationConfig(resize_policy="none")
        result = evaluate_dataset(entries, cfg, [3.0, 5.0], [6.0, 10.0])
        assert all(r.rate == 100.0 for r in result.rows)
        assert all(p.status == "ok" for p in result.pairs)
        assert {r.metric for r in result.rows} == {"ME", "MAE"}

    def test_sabotaged_pair_caps_rate(self, small_dataset, tmp_path):
        entries = load_manifest(small_dataset)
        from craqreg.images import save_png

        blank = np.full((448, 448), 128, dtype=np.uint8)
        save_png(tmp_path / "blank.png", blank)
        from craqreg.evaluation import ManifestEntry

        bad = ManifestEntry(
            pair_id="sabotaged",
            reference=entries[0].reference,
            moving=tmp_path / "blank.png",
            annotations=entries[0].annotations,
            domain=entries[0].domain,
        )
        cfg = RegistrationConfig(resize_policy="none")
        result = evaluate_dataset(entries + [bad], cfg, [3.0], [6.0])
        assert all(r.rate == pytest.approx(75.0) for r in result.rows)
        statuses = {p.pair_id: p.status for p in result.pairs}
        assert statuses["sabotaged"] == "failed:detection"
        # every reported rate is 100 * k / n for integer k
        n = len(result.pairs)
        for r in result.rows:
            k = r.rate * n / 100.0
            assert abs(k - round(k)) < 1e-9

    def test_empty_manifest(self):
        with pytest.raises(EmptyDataset):
            evaluate_dataset([], RegistrationConfig(), [3.0], [6.0])

    def test_manifest_validation(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(
            json.dumps(
                {
                    "entries": [
                        {
                            "pair_id": "p",
                            "reference": "missing.png",
                            "moving": "missing.png",
                            "annotations": "missing.json",
                        }
                    ]
                }
            )
        )
        with pytest.raises(ValueError):
            load_manifest(path)

    def test_csv_outputs(self, small_dataset):
        entries = load_manifest(small_dataset)
        cfg = RegistrationConfig(resize_policy="none")
        result = evaluate_dataset(entries, cfg, [3.0, 5.0], [6.0])
        table = result.table_csv()
        assert table.splitlines()[0] == "method,domain,metric,threshold,success_rate"
        curve = result.curve_csv("ME")
        lines = curve.splitlines()
        assert lines[0].startswith("threshold,")
        assert len(lines) == 3  # header + 2 thresholds
