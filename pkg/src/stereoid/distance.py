"""Discrepancy metrics between synthetic and actual right-eye images.

All metrics operate on unit-range images. L1 and L2 use mean reductions by
default: the raw-sum forms scale with pixel count and are only useful for
debugging, so they sit behind ``reduction="sum"``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._filters import gaussian_kernel_1d, separable_filter_2d
from .core import TensorImage, ValueRange
from .errors import DataError, ShapeError

SSIM_C1 = 0.01**2  # (k1 * L)^2 with L = 1
SSIM_C2 = 0.03**2


@dataclass(frozen=True)
class DistanceWeights:
    """Weights of the aggregate discrepancy (distinct from the painter's loss weights)."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("distance weights must be nonnegative")


@dataclass(frozen=True)
class DiscrepancyRecord:
    frame_id: str
    l1: float
    l2: float
    ssim: float
    aggregate: float


def _check_pair(syn: TensorImage, run: TensorImage) -> None:
    if syn.data.shape != run.data.shape:
        raise ShapeError(f"shape mismatch: {syn.data.shape} vs {run.data.shape}")
    if syn.value_range is not ValueRange.UNIT or run.value_range is not ValueRange.UNIT:
        raise ValueError("distance metrics operate on unit-range images")


def dist_l1(syn: TensorImage, run: TensorImage, reduction: str = "mean") -> float:
    """Mean (or raw-sum) absolute elementwise difference."""
    _check_pair(syn, run)
    diff = np.abs(syn.data.astype(np.float64) - run.data.astype(np.float64))
    return float(diff.sum() if reduction == "sum" else diff.mean())


def dist_l2(syn: TensorImage, run: TensorImage, reduction: str = "mean") -> float:
    """Root of the mean (or raw-sum) squared elementwise difference."""
    _check_pair(syn, run)
    sq = (syn.data.astype(np.float64) - run.data.astype(np.float64)) ** 2
    return float(np.sqrt(sq.sum() if reduction == "sum" else sq.mean()))


def dist_ssim(
    syn: TensorImage,
    run: TensorImage,
    c1: float = SSIM_C1,
    c2: float = SSIM_C2,
) -> float:
    """Global-statistics SSIM, computed per channel and averaged.

    Means, variances, and the covariance are population statistics over the
    whole channel plane; dynamic range is 1 (unit-range inputs).
    """
    _check_pair(syn, run)
    x = syn.data.astype(np.float64)
    y = run.data.astype(np.float64)
    per_channel = []
    for c in range(x.shape[0]):
        xc, yc = x[c], y[c]
        mx, my = xc.mean(), yc.mean()
        vx, vy = xc.var(), yc.var()
        cov = ((xc - mx) * (yc - my)).mean()
        num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        per_channel.append(num / den)
    return float(np.mean(per_channel))


def dist_ssim_windowed(
    syn: TensorImage,
    run: TensorImage,
    window: int = 11,
    sigma: float = 1.5,
    c1: float = SSIM_C1,
    c2: float = SSIM_C2,
) -> float:
    """Gaussian-window SSIM variant (mean of the local SSIM map).

    Provided for comparison with windowed implementations elsewhere; the
    pipeline and its oracles use the global-statistics :func:`dist_ssim`.
    """
    _check_pair(syn, run)
    kernel = gaussian_kernel_1d(window, sigma)
    x = syn.data.astype(np.float64)
    y = run.data.astype(np.float64)
    per_channel = []
    for c in range(x.shape[0]):
        xc, yc = x[c], y[c]
        mx = separable_filter_2d(xc, kernel)
        my = separable_filter_2d(yc, kernel)
        vx = separable_filter_2d(xc * xc, kernel) - mx * mx
        vy = separable_filter_2d(yc * yc, kernel) - my * my
        cov = separable_filter_2d(xc * yc, kernel) - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        per_channel.append((num / den).mean())
    return float(np.mean(per_channel))


def aggregate_discrepancy(
    l1: float, l2: float, ssim: float, weights: DistanceWeights = DistanceWeights()
) -> float:
    """Weighted sum alpha*L1 + beta*L2 + gamma*(1 - SSIM)."""
    for name, v in (("l1", l1), ("l2", l2), ("ssim", ssim)):
        if not np.isfinite(v):
            raise ValueError(f"non-finite {name} value {v}")
    return weights.alpha * l1 + weights.beta * l2 + weights.gamma * (1.0 - ssim)


def compute_record(
    frame_id: str,
    syn: TensorImage,
    run: TensorImage,
    weights: DistanceWeights = DistanceWeights(),
) -> DiscrepancyRecord:
    """All three metrics plus the aggregate for one frame pair."""
    l1 = dist_l1(syn, run)
    l2 = dist_l2(syn, run)
    ssim = dist_ssim(syn, run)
    return DiscrepancyRecord(
        frame_id=frame_id,
        l1=l1,
        l2=l2,
        ssim=ssim,
        aggregate=aggregate_discrepancy(l1, l2, ssim, weights),
    )


CSV_HEADER = ["frame_id", "l1", "l2", "ssim", "aggregate"]


def write_discrepancy_csv(
    records: list[DiscrepancyRecord], path: str | Path, weights: DistanceWeights
) -> None:
    """CSV table plus a JSON sidecar recording the weights used."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([r.frame_id, repr(r.l1), repr(r.l2), repr(r.ssim), repr(r.aggregate)])
    sidecar = path.with_suffix(path.suffix + ".weights.json")
    sidecar.write_text(
        json.dumps(
            {"alpha": weights.alpha, "beta": weights.beta, "gamma": weights.gamma},
            sort_keys=True,
        )
        + "\n"
    )


def read_discrepancy_csv(path: str | Path) -> list[DiscrepancyRecord]:
    path = Path(path)
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise DataError(f"{path}: expected header {CSV_HEADER}, got {reader.fieldnames}")
        for i, row in enumerate(reader, start=2):
            try:
                records.append(
                    DiscrepancyRecord(
                        frame_id=row["frame_id"],
                        l1=float(row["l1"]),
                        l2=float(row["l2"]),
                        ssim=float(row["ssim"]),
                        aggregate=float(row["aggregate"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{i}: bad record: {exc}") from exc
    return records
