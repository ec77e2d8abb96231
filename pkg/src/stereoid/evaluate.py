"""Classification/regression metrics, test-set composition, and the
Mann-Whitney U significance test.

Labels follow the detector convention: -1 is an issue, 1 is normal.
Zero-division in precision/recall yields 0.0 with a degenerate flag rather
than an error, since small sets can lack a class in the predictions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ManifestationCategory
from .errors import DataError

ISSUE, NORMAL = -1, 1


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    tp: int
    fp: int
    fn: int
    degenerate: bool  # some rate came from a 0/0


@dataclass(frozen=True)
class ClassificationReport:
    issue: ClassMetrics  # class -1
    normal: ClassMetrics  # class 1
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    total: int


def _safe_div(num: float, den: float) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def _class_metrics(true: np.ndarray, pred: np.ndarray, cls: int) -> ClassMetrics:
    tp = int(np.sum((pred == cls) & (true == cls)))
    fp = int(np.sum((pred == cls) & (true != cls)))
    fn = int(np.sum((pred != cls) & (true == cls)))
    precision, d1 = _safe_div(tp, tp + fp)
    recall, d2 = _safe_div(tp, tp + fn)
    f1, d3 = _safe_div(2 * precision * recall, precision + recall)
    return ClassMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        support=int(np.sum(true == cls)),
        tp=tp,
        fp=fp,
        fn=fn,
        degenerate=d1 or d2 or d3,
    )


def classification_report(
    true_labels: Sequence[int], pred_labels: Sequence[int]
) -> ClassificationReport:
    """Per-class precision/recall/F1 over {-1, 1}, plus accuracy and averages."""
    true = np.asarray(true_labels, dtype=int)
    pred = np.asarray(pred_labels, dtype=int)
    if true.size == 0:
        raise DataError("empty label lists")
    if true.shape != pred.shape:
        raise DataError(f"label lists differ in length: {true.shape} vs {pred.shape}")
    bad = set(np.unique(np.concatenate([true, pred]))) - {ISSUE, NORMAL}
    if bad:
        raise DataError(f"labels outside {{-1, 1}}: {sorted(bad)}")
    issue = _class_metrics(true, pred, ISSUE)
    normal = _class_metrics(true, pred, NORMAL)
    n = true.size
    accuracy = (issue.tp + normal.tp) / n
    w_issue, w_normal = issue.support / n, normal.support / n
    return ClassificationReport(
        issue=issue,
        normal=normal,
        accuracy=accuracy,
        macro_precision=(issue.precision + normal.precision) / 2,
        macro_recall=(issue.recall + normal.recall) / 2,
        macro_f1=(issue.f1 + normal.f1) / 2,
        weighted_precision=w_issue * issue.precision + w_normal * normal.precision,
        weighted_recall=w_issue * issue.recall + w_normal * normal.recall,
        weighted_f1=w_issue * issue.f1 + w_normal * normal.f1,
        total=n,
    )


def f1_issue(true_labels: Sequence[int], pred_labels: Sequence[int]) -> float:
    """F1 of the issue class alone; the grid-search objective."""
    true = np.asarray(true_labels, dtype=int)
    pred = np.asarray(pred_labels, dtype=int)
    return _class_metrics(true, pred, ISSUE).f1


@dataclass(frozen=True)
class CategoryRecallRow:
    category: ManifestationCategory
    detected: int
    undetected: int

    @property
    def total(self) -> int:
        return self.detected + self.undetected

    @property
    def recall(self) -> Optional[float]:
        return None if self.total == 0 else self.detected / self.total


@dataclass(frozen=True)
class CategoryRecallTable:
    rows: tuple[CategoryRecallRow, ...]

    @property
    def total_detected(self) -> int:
        return sum(r.detected for r in self.rows)

    @property
    def total(self) -> int:
        return sum(r.total for r in self.rows)

    @property
    def overall_recall(self) -> Optional[float]:
        return None if self.total == 0 else self.total_detected / self.total

    @classmethod
    def from_counts(cls, counts: dict[ManifestationCategory, tuple[int, int]]) -> "CategoryRecallTable":
        """Build from per-category (detected, undetected) counts."""
        rows = [
            CategoryRecallRow(cat, *counts.get(cat, (0, 0)))
            for cat in ManifestationCategory
        ]
        rows.sort(key=lambda r: (-r.total, r.category.value))
        return cls(rows=tuple(rows))


def recall_by_category(
    detected: Sequence[bool], categories: Sequence[ManifestationCategory]
) -> CategoryRecallTable:
    """Per-category detection tallies for issue frames.

    ``detected[i]`` says whether issue frame i was flagged; ``categories[i]``
    is its manifestation category. All 16 categories appear in the output;
    empty ones report a recall of None (rendered as "-").
    """
    if len(detected) != len(categories):
        raise DataError("detected flags and categories differ in length")
    counts: dict[ManifestationCategory, list[int]] = {}
    for hit, cat in zip(detected, categories):
        if cat is None:
            raise DataError("every issue frame must carry a category")
        y_n = counts.setdefault(ManifestationCategory(cat), [0, 0])
        y_n[0 if hit else 1] += 1
    return CategoryRecallTable.from_counts({c: (y, n) for c, (y, n) in counts.items()})


# natural issue:total ratio observed in the labeled corpus
NATURAL_ISSUE_RATIO = 237 / 4000


def compose_realistic_testset(
    issues: Sequence,
    normal_pool: Sequence,
    target_ratio: float = NATURAL_ISSUE_RATIO,
    seed: int = 0,
):
    """Mix issue entries with sampled normals at the natural issue ratio.

    Samples ceil(n_issues * (1 - r) / r) normals from the pool, shuffles the
    combined list with the seed, and returns a test-split manifest.
    """
    import dataclasses

    from .dataset import DatasetManifest  # local import: dataset pulls in image IO

    if not 0.0 < target_ratio < 1.0:
        raise DataError(f"target ratio must be in (0, 1), got {target_ratio}")
    n_issues = len(issues)
    if n_issues == 0:
        raise DataError("no issue entries: the mix ratio is undefined")
    # the epsilon guards exact-integer products against float round-up
    n_normals = math.ceil(n_issues * (1.0 - target_ratio) / target_ratio - 1e-9)
    if len(normal_pool) < n_normals:
        raise DataError(
            f"normal pool too small: need {n_normals}, have {len(normal_pool)}"
        )
    rng = np.random.default_rng(seed)
    picked = [normal_pool[i] for i in rng.choice(len(normal_pool), n_normals, replace=False)]
    combined = list(issues) + picked
    order = rng.permutation(len(combined))
    entries = [dataclasses.replace(combined[i], split="test") for i in order]
    return DatasetManifest(entries=entries, seed=seed, ratios=(0.0, 0.0, 1.0))


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    p_value: float
    method: str  # "exact" or "approx"


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled), dtype=np.float64)
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _u_statistic(ranks_a: np.ndarray, n_a: int) -> float:
    return float(ranks_a.sum() - n_a * (n_a + 1) / 2.0)


def mann_whitney_u(
    sample_a: Sequence[float], sample_b: Sequence[float], method: str = "auto"
) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test with midrank tie handling.

    Exact p by enumeration over all C(n+m, n) group assignments when
    n*m <= 64 (or method="exact"); otherwise the normal approximation with
    tie-corrected variance and continuity correction.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise DataError("both samples must be nonempty")
    n, m = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u_obs = _u_statistic(ranks[:n], n)
    if method == "auto":
        method = "exact" if n * m <= 64 else "approx"
    if method == "exact":
        p = _exact_p(ranks, n, m, u_obs)
    elif method == "approx":
        p = _approx_p(pooled, ranks, n, m, u_obs)
    else:
        raise DataError(f"unknown method {method!r}")
    return MannWhitneyResult(u=u_obs, p_value=p, method=method)


def _exact_p(ranks: np.ndarray, n: int, m: int, u_obs: float) -> float:
    mean = n * m / 2.0
    dev_obs = abs(u_obs - mean)
    const = n * (n + 1) / 2.0
    hits = 0
    count = 0
    for subset in combinations(range(n + m), n):
        u = ranks[list(subset)].sum() - const
        count += 1
        if abs(u - mean) >= dev_obs - 1e-12:
            hits += 1
    return hits / count


def _approx_p(pooled: np.ndarray, ranks: np.ndarray, n: int, m: int, u_obs: float) -> float:
    big_n = n + m
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (big_n * (big_n - 1))
    var = n * m / 12.0 * ((big_n + 1) - tie_term)
    if var <= 0:
        return 1.0
    mean = n * m / 2.0
    dev = u_obs - mean
    # continuity correction pulls |U - mean| toward zero by 0.5
    cc = max(abs(dev) - 0.5, 0.0)
    z = cc / math.sqrt(var)
    p = 2.0 * (1.0 - 0.5 * (1.0 + math.erf(z / math.sqrt(2.0))))
    return min(1.0, max(0.0, p))


def regression_table(metrics: dict[str, Sequence[float]]) -> list[dict]:
    """Population mean and std per metric, Table-2 style."""
    rows = []
    for name, values in metrics.items():
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            raise DataError(f"metric {name!r} has no values")
        rows.append({"metric": name, "avg": float(arr.mean()), "std": float(arr.std())})
    return rows


# ---------------------------------------------------------------------------
# rendering


def _fmt_rate(v: Optional[float]) -> str:
    return "-" if v is None else f"{100.0 * v:.1f}%"


def classification_text(report: ClassificationReport) -> str:
    lines = [
        f"{'class':>10} {'precision':>10} {'recall':>10} {'f1':>10} {'support':>10}",
        f"{'-1 issue':>10} {report.issue.precision:>10.4f} {report.issue.recall:>10.4f} "
        f"{report.issue.f1:>10.4f} {report.issue.support:>10d}",
        f"{'1 normal':>10} {report.normal.precision:>10.4f} {report.normal.recall:>10.4f} "
        f"{report.normal.f1:>10.4f} {report.normal.support:>10d}",
        "",
        f"{'accuracy':>10} {report.accuracy:>10.4f}  (n={report.total})",
        f"{'macro':>10} {report.macro_precision:>10.4f} {report.macro_recall:>10.4f} "
        f"{report.macro_f1:>10.4f}",
        f"{'weighted':>10} {report.weighted_precision:>10.4f} {report.weighted_recall:>10.4f} "
        f"{report.weighted_f1:>10.4f}",
    ]
    return "\n".join(lines) + "\n"


def write_classification_csv(report: ClassificationReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "precision", "recall", "f1", "support"])
        for name, m in (("issue", report.issue), ("normal", report.normal)):
            writer.writerow([name, repr(m.precision), repr(m.recall), repr(m.f1), m.support])
        writer.writerow(["accuracy", repr(report.accuracy), "", "", report.total])
        writer.writerow(
            ["macro", repr(report.macro_precision), repr(report.macro_recall), repr(report.macro_f1), ""]
        )
        writer.writerow(
            [
                "weighted",
                repr(report.weighted_precision),
                repr(report.weighted_recall),
                repr(report.weighted_f1),
                "",
            ]
        )


def category_table_text(table: CategoryRecallTable) -> str:
    lines = [f"{'category':<34} {'Y':>5} {'N':>5} {'total':>6} {'recall':>8}"]
    for r in table.rows:
        lines.append(
            f"{r.category.value:<34} {r.detected:>5d} {r.undetected:>5d} "
            f"{r.total:>6d} {_fmt_rate(r.recall):>8}"
        )
    lines.append(
        f"{'Total':<34} {table.total_detected:>5d} {table.total - table.total_detected:>5d} "
        f"{table.total:>6d} {_fmt_rate(table.overall_recall):>8}"
    )
    return "\n".join(lines) + "\n"


def write_category_csv(table: CategoryRecallTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "detected", "undetected", "total", "recall"])
        for r in table.rows:
            writer.writerow(
                [r.category.value, r.detected, r.undetected, r.total,
                 "" if r.recall is None else repr(r.recall)]
            )
        writer.writerow(
            ["Total", table.total_detected, table.total - table.total_detected,
             table.total, "" if table.overall_recall is None else repr(table.overall_recall)]
        )


def regression_table_text(rows: list[dict]) -> str:
    lines = [f"{'metric':<10} {'avg':>10} {'std':>10}"]
    for r in rows:
        lines.append(f"{r['metric']:<10} {r['avg']:>10.4f} {r['std']:>10.4f}")
    return "\n".join(lines) + "\n"
