"""Tests for displacement metrics and report aggregation."""

import csv
import math

import numpy as np
import pytest

from trajreason.errors import DataError
from trajreason.metrics import (
    MetricsReport,
    SceneResult,
    aggregate,
    ade,
    fde,
    horizon_key,
    horizon_steps,
    inference_efficiency,
    miss_rate,
    score_scene,
)


def _truth(n=12):
    return np.stack([np.arange(1, n + 1, dtype=np.float64), np.zeros(n)], axis=1)


def _with_final_offset(offset):
    truth = _truth()
    pred = truth.copy()
    pred[-1] += offset
    return pred, truth


class TestDisplacement:
    """Tests for ADE and FDE."""

    def test_exact_prediction(self):
        """Test that a perfect prediction has zero error."""
        assert ade(_truth(), _truth()) == 0.0
        assert fde(_truth(), _truth()) == 0.0

    @pytest.mark.parametrize("steps", [4, 8, 12])
    def test_three_four_five(self, steps):
        """Test a constant (3, 4) offset gives 5 at every horizon."""
        truth = _truth()

        assert ade(truth + [3.0, 4.0], truth, steps) == pytest.approx(5.0, abs=1e-9)
        assert fde(truth + [3.0, 4.0], truth, steps) == pytest.approx(5.0, abs=1e-9)

    def test_prefix_restriction(self):
        """Test that errors after the horizon are ignored."""
        truth = _truth()
        pred = truth.copy()
        pred[4:] += 1.0

        assert ade(pred, truth, horizon_steps=4) == 0.0
        assert fde(pred, truth, horizon_steps=4) == 0.0

    def test_final_point_offset(self):
        """Test FDE of a (0, 2) offset on the last point."""
        assert fde(*_with_final_offset([0.0, 2.0])) == pytest.approx(2.0, abs=1e-9)

    def test_rigid_transform_invariance(self):
        """Test that moving both trajectories together keeps the errors."""
        rng = np.random.default_rng(0)
        pred, truth = rng.normal(size=(12, 2)), rng.normal(size=(12, 2))
        c, s = math.cos(0.7), math.sin(0.7)
        rotation = np.array([[c, -s], [s, c]])

        def move(points):
            return points @ rotation.T + [12.0, -3.0]

        assert ade(move(pred), move(truth)) == pytest.approx(ade(pred, truth), abs=1e-9)
        assert fde(move(pred), move(truth)) == pytest.approx(fde(pred, truth), abs=1e-9)

    def test_shape_mismatch(self):
        """Test that mismatched shapes are rejected."""
        with pytest.raises(ValueError):
            ade(np.zeros((12, 2)), np.zeros((11, 2)))

    def test_horizon_out_of_range(self):
        """Test that a horizon beyond the trajectory is rejected."""
        with pytest.raises(ValueError):
            ade(_truth(), _truth(), horizon_steps=13)


class TestHorizons:
    """Tests for horizon conversion."""

    def test_steps(self):
        """Test seconds to sample counts at 2 Hz."""
        assert [horizon_steps(h) for h in (2, 4, 6)] == [4, 8, 12]

    def test_keys(self):
        """Test report keys."""
        assert horizon_key(2) == "2s"
        assert horizon_key(1.5) == "1.5s"

    def test_off_grid_horizon(self):
        """Test that horizons must be multiples of the sample period."""
        with pytest.raises(ValueError):
            horizon_steps(1.2)


class TestMissRate:
    """Tests for miss rate."""

    def test_all_exact(self):
        """Test zero misses for perfect predictions."""
        assert miss_rate([(_truth(), _truth())] * 3) == 0.0

    def test_threshold_is_strict(self):
        """Test that an FDE of exactly 2.0 is not a miss."""
        assert miss_rate([_with_final_offset([0.0, 2.0])]) == 0.0

    def test_hand_counted(self):
        """Test final errors {1.0, 2.5, 3.0} give 2/3."""
        pairs = [_with_final_offset([d, 0.0]) for d in (1.0, 2.5, 3.0)]

        assert miss_rate(pairs) == pytest.approx(2 / 3, abs=1e-9)

    def test_point_mode(self):
        """Test the per-point miss fraction."""
        truth = _truth()
        pred = truth.copy()
        pred[:3] += [0.0, 5.0]

        assert miss_rate([(pred, truth)], mode="point") == pytest.approx(0.25)

    def test_empty(self):
        """Test that an empty list is an error."""
        with pytest.raises(DataError):
            miss_rate([])

    def test_unknown_mode(self):
        """Test that unknown modes are rejected."""
        with pytest.raises(ValueError):
            miss_rate([(_truth(), _truth())], mode="any")


class TestInferenceEfficiency:
    """Tests for inference efficiency."""

    def test_mean(self):
        """Test the mean of two samples."""
        assert inference_efficiency([0.01, 0.03]) == pytest.approx(0.02, abs=1e-12)

    def test_single_sample(self):
        """Test a single sample."""
        assert inference_efficiency([0.019]) == 0.019

    def test_warmup_excluded(self):
        """Test that warm-up samples are skipped."""
        assert inference_efficiency([5.0, 5.0, 0.02, 0.04], warmup=2) == pytest.approx(0.03, abs=1e-12)

    def test_warmup_keeps_one_sample(self):
        """Test that warm-up never removes every sample."""
        assert inference_efficiency([0.5, 0.25], warmup=10) == 0.25

    def test_empty(self):
        """Test that no samples is an error."""
        with pytest.raises(DataError):
            inference_efficiency([])


def _row(scene_id, ade_6, kind="turn", miss=0.0):
    return SceneResult(scene_id, ade={"6s": ade_6}, fde={"6s": ade_6}, miss=miss, kind=kind, inference_s=0.01)


class TestAggregate:
    """Tests for report aggregation."""

    def test_single_scene_has_zero_std(self):
        """Test the degenerate population."""
        report = aggregate([_row("a", 1.5)])

        assert report.ade["6s"] == (1.5, 0.0)

    def test_population_std(self):
        """Test ADE(6s) {1.0, 3.0} gives mean 2 and std 1."""
        report = aggregate([_row("a", 1.0), _row("b", 3.0, miss=1.0)])

        assert report.ade["6s"] == pytest.approx((2.0, 1.0))
        assert report.miss_rate == 0.5
        assert report.n_scenes == 2

    def test_matches_brute_force(self):
        """Test aggregation against a direct recomputation over the raw table."""
        rng = np.random.default_rng(3)
        truths = [rng.normal(size=(12, 2)) for _ in range(5)]
        preds = [t + rng.normal(scale=2.0, size=(12, 2)) for t in truths]
        rows = [score_scene(str(i), p, t) for i, (p, t) in enumerate(zip(preds, truths))]

        report = aggregate(rows)

        for h, steps in (("2s", 4), ("4s", 8), ("6s", 12)):
            values = [np.linalg.norm(p[:steps] - t[:steps], axis=1).mean() for p, t in zip(preds, truths)]
            assert report.ade[h][0] == pytest.approx(np.mean(values), abs=1e-9)
            assert report.ade[h][1] == pytest.approx(np.std(values), abs=1e-9)
        finals = [np.linalg.norm(p[-1] - t[-1]) for p, t in zip(preds, truths)]
        assert report.fde["6s"][0] == pytest.approx(np.mean(finals), abs=1e-9)
        assert report.miss_rate == pytest.approx(np.mean([f > 2.0 for f in finals]))

    def test_horizon_mismatch(self):
        """Test that rows with different horizons cannot be aggregated."""
        other = SceneResult("b", ade={"4s": 1.0}, fde={"6s": 1.0}, miss=0.0)

        with pytest.raises(DataError, match="horizons"):
            aggregate([_row("a", 1.0), other])

    def test_empty(self):
        """Test that zero scenes is an error."""
        with pytest.raises(DataError):
            aggregate([])

    def test_by_kind(self):
        """Test per-kind re-aggregation."""
        report = aggregate([_row("a", 1.0, "turn"), _row("b", 3.0, "straight"), _row("c", 5.0, "turn")])

        kinds = report.by_kind()

        assert set(kinds) == {"turn", "straight"}
        assert kinds["turn"].ade["6s"][0] == pytest.approx(3.0)
        assert kinds["straight"].n_scenes == 1


class TestMetricsReport:
    """Tests for report serialization."""

    def test_json_round_trip(self, tmp_path):
        """Test that a saved report loads back with the same numbers."""
        report = aggregate([_row("a", 1.0), _row("b", 3.0)], inference_efficiency=0.02)
        path = str(tmp_path / "report.json")

        report.save_json(path)
        loaded = MetricsReport.load_json(path)

        assert loaded.to_dict() == report.to_dict()
        assert loaded.to_dict()["ade"] == {"6s": [2.0, 1.0]}

    def test_malformed_report(self):
        """Test that missing keys raise DataError."""
        with pytest.raises(DataError):
            MetricsReport.from_dict({"ade": {}})

    def test_csv_rows(self, tmp_path):
        """Test one CSV row per scene."""
        report = aggregate([_row("a", 1.0), _row("b", 3.0)])
        path = tmp_path / "scenes.csv"

        assert report.save_csv(str(path)) == 2
        with open(path) as f:
            rows = list(csv.DictReader(f))

        assert [r["scene_id"] for r in rows] == ["a", "b"]
        assert float(rows[1]["ade_6s"]) == 3.0
