import math

import numpy as np
import pytest

from stereoid.detector import (
    DetectionResult,
    ForestConfig,
    IsolationForest,
    TuneGrid,
    average_path_correction,
    detect,
    fit,
    labels_from_scores,
    quantile_threshold,
    read_detection_report,
    score,
    score_many,
    tune,
    write_detection_report,
)
from stereoid.distance import DiscrepancyRecord
from stereoid.errors import ConfigError, DataError


def planted_points(seed, n_inliers=200, n_outliers=5, outlier_value=10.0):
    rng = np.random.default_rng(seed)
    pts = np.concatenate([rng.normal(0.0, 1.0, n_inliers), np.full(n_outliers, outlier_value)])
    return pts[:, None]


def records_from(values):
    return [DiscrepancyRecord(f"f{i}", 0.0, 0.0, 1.0, float(v)) for i, v in enumerate(values)]


def brute_force_labels(values, contamination):
    """Flag the top contamination-fraction by distance from the median."""
    values = np.asarray(values, dtype=float)
    dist = np.abs(values - np.median(values))
    k = math.ceil(contamination * len(values))
    order = np.argsort(-dist, kind="stable")
    labels = np.ones(len(values), dtype=int)
    labels[order[:k]] = -1
    return labels


class TestPathCorrection:
    def test_known_values(self):
        assert average_path_correction(1) == 0.0
        assert average_path_correction(2) == pytest.approx(1.0)
        # c(m) = 2 H(m-1) - 2 (m-1)/m with the exact harmonic number
        h4 = 1 + 0.5 + 1 / 3 + 0.25
        assert average_path_correction(5) == pytest.approx(2 * h4 - 2 * 4 / 5)


class TestFit:
    def test_planted_outliers_all_flagged(self):
        pts = planted_points(0)
        cfg = ForestConfig(n_estimators=110, contamination=0.058, seed=1)
        forest = fit(pts, cfg)
        labels = labels_from_scores(forest.train_scores, forest.threshold)
        assert (labels[-5:] == -1).all()

    def test_two_distinct_points(self):
        forest = fit(np.array([[0.0], [1.0]]), ForestConfig(n_estimators=10, seed=0))
        scores = score_many(forest, np.array([[0.0], [1.0], [0.5]]))
        assert ((scores > 0.0) & (scores < 1.0)).all()

    def test_identical_points_rejected(self):
        with pytest.raises(DataError, match="identical"):
            fit(np.full((10, 1), 3.0))

    def test_single_point_rejected(self):
        with pytest.raises(DataError):
            fit(np.array([[1.0]]))

    def test_height_cap(self):
        forest = fit(planted_points(3), ForestConfig(n_estimators=20, seed=2))
        assert forest.height_cap == math.ceil(math.log2(forest.psi))

        def max_depth(node, depth=0):
            if isinstance(node, int):
                return depth
            return max(max_depth(node[2], depth + 1), max_depth(node[3], depth + 1))

        assert max(max_depth(t) for t in forest.trees) <= forest.height_cap

    def test_determinism(self):
        pts = planted_points(4)
        cfg = ForestConfig(n_estimators=25, seed=9)
        a, b = fit(pts, cfg), fit(pts, cfg)
        assert a.trees == b.trees
        assert np.array_equal(a.train_scores, b.train_scores)
        assert a.threshold == b.threshold

    def test_tree_seeding_is_prefix_stable(self):
        # tree i only depends on (seed, i): a bigger forest shares its prefix
        pts = planted_points(5)
        small = fit(pts, ForestConfig(n_estimators=5, seed=3))
        big = fit(pts, ForestConfig(n_estimators=10, seed=3))
        assert big.trees[:5] == small.trees


class TestThreshold:
    def test_higher_order_statistic(self):
        rng = np.random.default_rng(0)
        scores = rng.random(4000)
        t = quantile_threshold(scores, 0.058)
        s = np.sort(scores)
        assert t == s[math.ceil(0.942 * 3999)]  # the 3768th 0-indexed order statistic
        assert int((scores >= t).sum()) == 232

    def test_flag_count_equals_ceil(self):
        for n, cont in [(205, 0.058), (400, 0.058), (100, 0.01), (50, 0.5)]:
            scores = np.random.default_rng(n).random(n)
            t = quantile_threshold(scores, cont)
            assert int((scores >= t).sum()) == math.ceil(cont * n)


class TestScore:
    def test_average_path_equal_to_correction_scores_half(self):
        # a forest of root-leaves: every path is exactly c(psi), so the
        # exponent is -1 and the score is 0.5
        psi = 64
        forest = IsolationForest(
            config=ForestConfig(), trees=[psi, psi, psi], psi=psi,
            threshold=1.0, train_scores=np.array([]),
        )
        assert score(forest, np.array([0.3])) == pytest.approx(0.5)

    def test_outlier_scores_above_inlier(self):
        pts = planted_points(6)
        forest = fit(pts, ForestConfig(n_estimators=3, seed=7))
        far = score(forest, np.array([10.0]))
        central = score(forest, np.array([0.0]))
        assert far > central

    def test_duplicate_point_scores_identically(self):
        forest = fit(planted_points(8), ForestConfig(n_estimators=30, seed=1))
        a = score(forest, np.array([2.5]))
        b = score(forest, np.array([2.5]))
        assert a == b

    def test_scores_strictly_inside_unit_interval(self):
        forest = fit(planted_points(9), ForestConfig(n_estimators=50, seed=2))
        assert ((forest.train_scores > 0) & (forest.train_scores < 1)).all()


class TestDetect:
    def test_identical_aggregates_short_circuit(self):
        results = detect(records_from([0.7] * 50))
        assert all(r.label == 1 for r in results)
        assert all(r.score == 0.5 for r in results)

    def test_flag_count_on_continuous_data(self):
        rng = np.random.default_rng(10)
        results = detect(records_from(rng.random(4000)), ForestConfig(110, 0.058, seed=0))
        assert sum(1 for r in results if r.label == -1) == 232

    def test_order_preserved(self):
        values = np.random.default_rng(11).random(40)
        results = detect(records_from(values), ForestConfig(20, 0.1, seed=0))
        assert [r.frame_id for r in results] == [f"f{i}" for i in range(40)]

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            detect([])

    def test_agreement_with_median_distance_oracle(self):
        agree = 0
        total = 0
        for trial in range(10):
            pts = planted_points(trial)
            cfg = ForestConfig(n_estimators=110, contamination=0.058, seed=trial)
            results = detect(records_from(pts.ravel()), cfg)
            predicted = np.array([r.label for r in results])
            oracle = brute_force_labels(pts.ravel(), 0.058)
            agree += int((predicted == oracle).sum())
            total += len(oracle)
        assert agree / total >= 0.99

    def test_components_feature_mode(self):
        records = [
            DiscrepancyRecord(f"f{i}", l1, l1 * 2, 1 - l1, l1)
            for i, l1 in enumerate(np.random.default_rng(1).random(60))
        ]
        results = detect(records, ForestConfig(20, 0.1, seed=3), feature_mode="components")
        assert len(results) == 60


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            ForestConfig(n_estimators=0)
        with pytest.raises(ConfigError):
            ForestConfig(contamination=0.0)
        with pytest.raises(ConfigError):
            ForestConfig(contamination=0.6)


class TestTune:
    def test_default_grid_dimensions(self):
        grid = TuneGrid()
        assert len(grid.contaminations) == 100
        assert grid.contaminations[0] == pytest.approx(0.01)
        assert grid.contaminations[-1] == pytest.approx(0.1)
        assert len(grid.n_estimators) == 51
        assert grid.n_estimators[0] == 50 and grid.n_estimators[-1] == 300

    def test_degenerate_single_cell(self):
        values = planted_points(1).ravel()
        labels = brute_force_labels(values, 0.058)
        grid = TuneGrid(contaminations=(0.05,), n_estimators=(25,), seed=0)
        best, table = tune(records_from(values), labels, grid)
        assert best.contamination == 0.05
        assert best.n_estimators == 25
        assert len(table) == 1

    def test_tie_break_prefers_smaller(self):
        values = planted_points(2, n_inliers=95, n_outliers=5).ravel()
        labels = np.ones(100, dtype=int)
        labels[-5:] = -1
        grid = TuneGrid(contaminations=(0.05, 0.09), n_estimators=(40, 60), seed=0)
        best, table = tune(records_from(values), labels, grid)
        perfect = [row for row in table if row["f1"] == 1.0]
        assert perfect, "clean separation should yield at least one perfect cell"
        assert best.n_estimators == min(r["n_estimators"] for r in perfect)
        conts = [r["contamination"] for r in perfect if r["n_estimators"] == best.n_estimators]
        assert best.contamination == min(conts)

    def test_single_class_rejected(self):
        values = planted_points(3).ravel()
        with pytest.raises(DataError, match="both classes"):
            tune(records_from(values), np.ones(len(values), dtype=int))


class TestReportIO:
    def test_round_trip(self, tmp_path):
        results = [DetectionResult("a", 0.7, -1), DetectionResult("b", 0.3, 1)]
        cfg = ForestConfig(10, 0.1, seed=4)
        path = tmp_path / "det.csv"
        write_detection_report(results, path, cfg, threshold=0.6)
        assert read_detection_report(path) == results
        meta = (tmp_path / "det.csv.meta.json").read_text()
        assert '"threshold": 0.6' in meta
