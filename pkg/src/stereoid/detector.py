"""Isolation-forest anomaly detection over discrepancy values.

Implements the classic algorithm directly: random binary partition trees on
subsamples of size psi, height-capped at ceil(log2(psi)), with the expected
path length of unresolved leaves corrected by c(m) = 2*H(m-1) - 2*(m-1)/m.
The anomaly score of a point is 2^(-E[h]/c(psi)); larger means more isolated.

Tree seeds are spawned from the master seed with numpy's SeedSequence, so a
parallel tree builder would produce the same forest as the sequential one
used here.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .distance import DiscrepancyRecord
from .errors import ConfigError, DataError
from . import evaluate

DEFAULT_N_ESTIMATORS = 110
DEFAULT_CONTAMINATION = 0.058
DEFAULT_SUBSAMPLE = 256


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = DEFAULT_N_ESTIMATORS
    contamination: float = DEFAULT_CONTAMINATION
    subsample_size: int = DEFAULT_SUBSAMPLE  # capped at dataset size
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        if not 0.0 < self.contamination <= 0.5:
            raise ConfigError("contamination must lie in (0, 0.5]")
        if self.subsample_size < 2:
            raise ConfigError("subsample_size must be >= 2")


@dataclass(frozen=True)
class DetectionResult:
    frame_id: str
    score: float
    label: int  # -1 issue, 1 normal


# A tree node is either an int leaf (the leaf's sample count) or a tuple
# (feature_index, split_value, left_node, right_node).
Node = object


def _harmonic(k: int) -> float:
    return float(np.sum(1.0 / np.arange(1, k + 1))) if k >= 1 else 0.0


@lru_cache(maxsize=None)
def average_path_correction(m: int) -> float:
    """Expected path length c(m) of an unsuccessful BST search among m points."""
    if m <= 1:
        return 0.0
    return 2.0 * _harmonic(m - 1) - 2.0 * (m - 1) / m


def _grow(x: np.ndarray, rng: np.random.Generator, depth: int, cap: int) -> Node:
    n = x.shape[0]
    if n <= 1 or depth >= cap:
        return n
    mins = x.min(axis=0)
    maxs = x.max(axis=0)
    splittable = np.nonzero(maxs > mins)[0]
    if splittable.size == 0:
        return n
    feature = int(splittable[rng.integers(splittable.size)])
    split = float(rng.uniform(mins[feature], maxs[feature]))
    mask = x[:, feature] < split
    n_left = int(mask.sum())
    if n_left == 0 or n_left == n:
        return n
    left = _grow(x[mask], rng, depth + 1, cap)
    right = _grow(x[~mask], rng, depth + 1, cap)
    return (feature, split, left, right)


def _path_lengths(node: Node, x: np.ndarray, depth: int, out: np.ndarray, idx: np.ndarray) -> None:
    if isinstance(node, int):
        out[idx] = depth + average_path_correction(node)
        return
    feature, split, left, right = node
    mask = x[idx, feature] < split
    if mask.any():
        _path_lengths(left, x, depth + 1, out, idx[mask])
    if not mask.all():
        _path_lengths(right, x, depth + 1, out, idx[~mask])


@dataclass
class IsolationForest:
    config: ForestConfig
    trees: list
    psi: int
    threshold: float
    train_scores: np.ndarray

    @property
    def height_cap(self) -> int:
        return math.ceil(math.log2(self.psi))


def _score_matrix(trees: list, psi: int, x: np.ndarray) -> np.ndarray:
    """Anomaly scores 2^(-E[h]/c(psi)) for every row of x."""
    paths = np.zeros((len(trees), x.shape[0]), dtype=np.float64)
    all_idx = np.arange(x.shape[0])
    for t, tree in enumerate(trees):
        _path_lengths(tree, x, 0, paths[t], all_idx)
    mean_path = paths.mean(axis=0)
    return np.power(2.0, -mean_path / average_path_correction(psi))


def quantile_threshold(scores: np.ndarray, contamination: float) -> float:
    """The (1 - contamination) quantile of training scores.

    Uses the 'higher' order statistic, i.e. sorted[ceil(q*(n-1))], so that
    with distinct scores exactly ceil(contamination*n) points sit at or
    above the threshold.
    """
    q = 1.0 - contamination
    s = np.sort(np.asarray(scores, dtype=np.float64))
    idx = math.ceil(q * (len(s) - 1))
    return float(s[idx])


def fit(points: np.ndarray, cfg: ForestConfig = ForestConfig()) -> IsolationForest:
    """Build the forest on (n, d) points and fix the anomaly-score threshold."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise DataError(f"need an (n>=2, d>=1) matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise DataError("points contain non-finite values")
    if (x == x[0]).all():
        raise DataError("all points identical: no split possible, nothing to isolate")
    n = x.shape[0]
    psi = min(cfg.subsample_size, n)
    cap = math.ceil(math.log2(psi))
    trees = []
    for seq in np.random.SeedSequence(cfg.seed).spawn(cfg.n_estimators):
        rng = np.random.default_rng(seq)
        sample = x[rng.choice(n, size=psi, replace=False)]
        trees.append(_grow(sample, rng, 0, cap))
    train_scores = _score_matrix(trees, psi, x)
    threshold = quantile_threshold(train_scores, cfg.contamination)
    return IsolationForest(
        config=cfg, trees=trees, psi=psi, threshold=threshold, train_scores=train_scores
    )


def score(forest: IsolationForest, point: np.ndarray) -> float:
    """Anomaly score of a single point under a fitted forest."""
    return float(score_many(forest, np.asarray(point, dtype=np.float64)[None, :])[0])


def score_many(forest: IsolationForest, points: np.ndarray) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return _score_matrix(forest.trees, forest.psi, x)


def labels_from_scores(scores: np.ndarray, threshold: float) -> np.ndarray:
    """-1 where score >= threshold (ties flag), else 1."""
    return np.where(np.asarray(scores) >= threshold, -1, 1)


def record_features(records: Sequence[DiscrepancyRecord], mode: str = "aggregate") -> np.ndarray:
    """Feature matrix fed to the forest: scalar aggregate (default) or [l1, l2, 1-ssim]."""
    if mode == "aggregate":
        return np.array([[r.aggregate] for r in records], dtype=np.float64)
    if mode == "components":
        return np.array([[r.l1, r.l2, 1.0 - r.ssim] for r in records], dtype=np.float64)
    raise ConfigError(f"unknown feature mode {mode!r}")


def detect(
    records: Sequence[DiscrepancyRecord],
    cfg: ForestConfig = ForestConfig(),
    feature_mode: str = "aggregate",
) -> list[DetectionResult]:
    """Fit on the records' discrepancies, score each record, label by threshold."""
    if not records:
        raise DataError("no records to detect on")
    feats = record_features(records, feature_mode)
    if (feats == feats[0]).all():
        # degenerate: identical discrepancies everywhere, nothing is an outlier
        return [DetectionResult(r.frame_id, 0.5, 1) for r in records]
    forest = fit(feats, cfg)
    scores = forest.train_scores  # the records are the fit set
    labels = labels_from_scores(scores, forest.threshold)
    return [
        DetectionResult(r.frame_id, float(s), int(lab))
        for r, s, lab in zip(records, scores, labels)
    ]


@dataclass(frozen=True)
class TuneGrid:
    """Hyperparameter grid; defaults reproduce the reference search space."""

    contaminations: tuple = tuple(np.linspace(0.01, 0.1, 100))
    n_estimators: tuple = tuple(range(50, 301, 5))
    subsample_size: int = DEFAULT_SUBSAMPLE
    seed: int = 0


def tune(
    records: Sequence[DiscrepancyRecord],
    labels: Sequence[int],
    grid: TuneGrid = TuneGrid(),
    feature_mode: str = "aggregate",
) -> tuple[ForestConfig, list[dict]]:
    """Grid search maximizing the F1 score of the issue class (-1).

    Scores do not depend on contamination, so each forest is fitted once per
    n_estimators value and the contamination axis is swept by re-thresholding.
    Ties resolve toward smaller n_estimators, then smaller contamination.
    """
    if len(records) != len(labels):
        raise DataError("records and labels differ in length")
    true = np.asarray(labels, dtype=int)
    if set(np.unique(true)) != {-1, 1}:
        raise DataError("tuning needs both classes (-1 and 1) in the labels")
    feats = record_features(records, feature_mode)
    table: list[dict] = []
    best: Optional[tuple[float, int, float]] = None
    for n_est in grid.n_estimators:
        cfg = ForestConfig(
            n_estimators=int(n_est),
            contamination=0.5,  # placeholder; threshold swept below
            subsample_size=grid.subsample_size,
            seed=grid.seed,
        )
        forest = fit(feats, cfg)
        for cont in grid.contaminations:
            threshold = quantile_threshold(forest.train_scores, float(cont))
            pred = labels_from_scores(forest.train_scores, threshold)
            f1 = evaluate.f1_issue(true, pred)
            table.append(
                {"contamination": float(cont), "n_estimators": int(n_est), "f1": f1}
            )
            key = (f1, -int(n_est), -float(cont))
            if best is None or key > (best[0], -best[1], -best[2]):
                best = (f1, int(n_est), float(cont))
    assert best is not None
    best_cfg = ForestConfig(
        n_estimators=best[1],
        contamination=best[2],
        subsample_size=grid.subsample_size,
        seed=grid.seed,
    )
    return best_cfg, table


def write_detection_report(
    results: Sequence[DetectionResult],
    path: str | Path,
    cfg: ForestConfig,
    threshold: Optional[float] = None,
) -> None:
    """CSV frame_id,score,label plus a JSON sidecar with the run metadata."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_id", "score", "label"])
        for r in results:
            writer.writerow([r.frame_id, repr(r.score), r.label])
    meta = {
        "n_estimators": cfg.n_estimators,
        "contamination": cfg.contamination,
        "subsample_size": cfg.subsample_size,
        "seed": cfg.seed,
        "threshold": threshold,
    }
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n"
    )


def read_detection_report(path: str | Path) -> list[DetectionResult]:
    path = Path(path)
    results = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["frame_id", "score", "label"]:
            raise DataError(f"{path}: unexpected header {reader.fieldnames}")
        for i, row in enumerate(reader, start=2):
            try:
                results.append(
                    DetectionResult(row["frame_id"], float(row["score"]), int(row["label"]))
                )
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{i}: bad record: {exc}") from exc
    return results
