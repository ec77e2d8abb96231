"""Stereo screenshot ingestion: side-by-side splitting, preprocessing,
train/val/test partitioning, and newline-delimited JSON manifests.

Screenshots are 8-bit RGB PNGs, either one side-by-side file per frame or
separate left/right files. Manifest-level metadata (seed, ratios) lives in a
``<manifest>.meta.json`` sidecar so each manifest line stays a bare record.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from PIL import Image

from .core import Label, ManifestationCategory, Source, StereoFrame, TensorImage, ValueRange
from .errors import DataError, ShapeError

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.90, 0.05, 0.05)
PAIR_SIZE = (1024, 576)  # binocular resize target (width, height)
CROP_SIZE = 512


@dataclass(frozen=True)
class ManifestEntry:
    frame_id: str
    split: str = "train"
    sbs_path: Optional[str] = None
    left_path: Optional[str] = None
    right_path: Optional[str] = None
    label: Optional[int] = None  # -1 issue, 1 normal, None unlabeled
    category: Optional[str] = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DataError(f"entry {self.frame_id!r}: bad split {self.split!r}")
        has_pair = self.left_path is not None and self.right_path is not None
        if self.sbs_path is None and not has_pair:
            raise DataError(
                f"entry {self.frame_id!r}: needs sbs_path or both left_path and right_path"
            )
        if self.label not in (None, -1, 1):
            raise DataError(f"entry {self.frame_id!r}: bad label {self.label!r}")
        if self.category is not None:
            ManifestationCategory(self.category)  # raises on unknown names

    def to_json(self) -> str:
        record: dict = {"frame_id": self.frame_id}
        if self.sbs_path is not None:
            record["sbs_path"] = self.sbs_path
        else:
            record["left_path"] = self.left_path
            record["right_path"] = self.right_path
        record["label"] = self.label
        record["category"] = self.category
        record["split"] = self.split
        return json.dumps(record, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ManifestEntry":
        obj = json.loads(line)
        known = {"frame_id", "sbs_path", "left_path", "right_path", "label", "category", "split"}
        extra = set(obj) - known
        if extra:
            raise DataError(f"unknown manifest fields {sorted(extra)}")
        return cls(
            frame_id=obj["frame_id"],
            split=obj.get("split", "train"),
            sbs_path=obj.get("sbs_path"),
            left_path=obj.get("left_path"),
            right_path=obj.get("right_path"),
            label=obj.get("label"),
            category=obj.get("category"),
        )


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    seed: int = 0
    ratios: tuple = DEFAULT_RATIOS

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise DataError(f"ratios must be three nonnegative reals, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise DataError(f"ratios must sum to 1, got {self.ratios}")
        seen = set()
        for e in self.entries:
            if e.frame_id in seen:
                raise DataError(f"duplicate frame_id {e.frame_id!r}")
            seen.add(e.frame_id)

    def split_entries(self, split: str) -> tuple:
        return tuple(e for e in self.entries if e.split == split)

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# image files


def load_image(path: str | Path) -> TensorImage:
    """8-bit RGB PNG -> unit-range 3xHxW image."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    return TensorImage(arr.transpose(2, 0, 1), ValueRange.UNIT)


def save_image(image: TensorImage, path: str | Path) -> None:
    """Unit-range image -> 8-bit PNG (RGB for 3 channels, grayscale for 1)."""
    if image.value_range is not ValueRange.UNIT:
        raise ValueError("save_image expects a unit-range image")
    arr = np.round(image.data * 255.0).astype(np.uint8)
    if image.channels == 3:
        Image.fromarray(arr.transpose(1, 2, 0), mode="RGB").save(path)
    elif image.channels == 1:
        Image.fromarray(arr[0], mode="L").save(path)
    else:
        raise ShapeError(f"cannot save a {image.channels}-channel image as PNG")


# ---------------------------------------------------------------------------
# frame construction


def split_sbs(
    screenshot: TensorImage,
    frame_id: str = "",
    source: Source = Source.CAPTURED,
    label: Optional[Label] = None,
    category: Optional[ManifestationCategory] = None,
) -> StereoFrame:
    """Split a side-by-side capture into left (first half of columns) and right."""
    w = screenshot.width
    if w % 2 != 0:
        raise ShapeError(f"side-by-side width must be even, got {w}")
    half = w // 2
    left = TensorImage(screenshot.data[:, :, :half], screenshot.value_range)
    right = TensorImage(screenshot.data[:, :, half:], screenshot.value_range)
    return StereoFrame(left, right, frame_id=frame_id, source=source, label=label, category=category)


def sbs_from_frame(frame: StereoFrame) -> TensorImage:
    """Horizontal re-concatenation; inverse of split_sbs."""
    data = np.concatenate([frame.left.data, frame.right.data], axis=2)
    return TensorImage(data, frame.left.value_range)


def _resize(image: TensorImage, size: tuple[int, int]) -> TensorImage:
    """Bilinear resize to (width, height)."""
    planes = [
        np.asarray(
            Image.fromarray(ch.astype(np.float32), mode="F").resize(size, Image.BILINEAR)
        )
        for ch in image.data
    ]
    lo, hi = image.value_range.bounds
    return TensorImage(np.clip(np.stack(planes), lo, hi), image.value_range)


def preprocess(
    frame: StereoFrame,
    mode: str = "eval",
    rng_seed: int = 0,
    pair_size: tuple[int, int] = PAIR_SIZE,
    crop: int = CROP_SIZE,
) -> StereoFrame:
    """Resize the pair to ``pair_size`` overall and crop a shared square window.

    Each eye is resized to (pair_width/2, pair_height). Train mode takes a
    random crop position (seeded); eval mode takes the center crop. Both eyes
    are cropped at identical coordinates to preserve epipolar alignment.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if (frame.width, frame.height) == (crop, crop):
        return frame  # already at the final size; resizing would distort
    eye_size = (pair_size[0] // 2, pair_size[1])
    left = _resize(frame.left, eye_size)
    right = _resize(frame.right, eye_size)
    w, h = eye_size
    if crop > w or crop > h:
        raise ShapeError(f"crop {crop} larger than eye size {w}x{h}")
    if mode == "train":
        rng = np.random.default_rng(rng_seed)
        x0 = int(rng.integers(0, w - crop + 1))
        y0 = int(rng.integers(0, h - crop + 1))
    else:
        x0 = (w - crop) // 2
        y0 = (h - crop) // 2
    left_c = TensorImage(left.data[:, y0 : y0 + crop, x0 : x0 + crop], left.value_range)
    right_c = TensorImage(right.data[:, y0 : y0 + crop, x0 : x0 + crop], right.value_range)
    return StereoFrame(
        left_c,
        right_c,
        frame_id=frame.frame_id,
        source=frame.source,
        label=frame.label,
        category=frame.category,
    )


# ---------------------------------------------------------------------------
# partitioning


def partition(
    manifest: DatasetManifest,
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> DatasetManifest:
    """Assign splits by a seeded shuffle; floor-based sizes, remainder to train."""
    n = len(manifest.entries)
    if n == 0:
        raise DataError("cannot partition an empty manifest")
    r_train, r_val, r_test = ratios
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"bad ratios {ratios}")
    n_val = int(np.floor(n * r_val))
    n_test = int(np.floor(n * r_test))
    n_train = n - n_val - n_test
    order = np.random.default_rng(seed).permutation(n)
    assignment = {}
    for pos, idx in enumerate(order):
        if pos < n_train:
            assignment[idx] = "train"
        elif pos < n_train + n_val:
            assignment[idx] = "val"
        else:
            assignment[idx] = "test"
    entries = [
        dataclasses.replace(e, split=assignment[i]) for i, e in enumerate(manifest.entries)
    ]
    return DatasetManifest(entries=entries, seed=seed, ratios=ratios)


def subsample_training(manifest: DatasetManifest, n: int = 20000, seed: int = 0) -> DatasetManifest:
    """Keep a uniform random n-subset of the train split; val/test untouched."""
    train_idx = [i for i, e in enumerate(manifest.entries) if e.split == "train"]
    if n > len(train_idx):
        raise DataError(f"requested {n} training entries, only {len(train_idx)} available")
    rng = np.random.default_rng(seed)
    keep = set(
        train_idx[j] for j in sorted(rng.choice(len(train_idx), size=n, replace=False))
    )
    entries = [
        e
        for i, e in enumerate(manifest.entries)
        if e.split != "train" or i in keep
    ]
    return DatasetManifest(entries=entries, seed=manifest.seed, ratios=manifest.ratios)


# ---------------------------------------------------------------------------
# manifest files


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        for e in manifest.entries:
            fh.write(e.to_json() + "\n")
    meta = {"seed": manifest.seed, "ratios": list(manifest.ratios)}
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n"
    )


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(ManifestEntry.from_json(line))
            except (json.JSONDecodeError, KeyError, DataError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    seed, ratios = 0, DEFAULT_RATIOS
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text())
            seed = int(meta.get("seed", 0))
            ratios = tuple(meta.get("ratios", DEFAULT_RATIOS))
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise DataError(f"{meta_path}: {exc}") from exc
    return DatasetManifest(entries=entries, seed=seed, ratios=ratios)


def load_frame(
    entry: ManifestEntry, root: str | Path = ".", source: Source = Source.CAPTURED
) -> StereoFrame:
    """Materialize a manifest entry into a StereoFrame."""
    root = Path(root)
    label = None if entry.label is None else Label(entry.label)
    category = None if entry.category is None else ManifestationCategory(entry.category)
    if entry.sbs_path is not None:
        sbs = load_image(root / entry.sbs_path)
        return split_sbs(sbs, frame_id=entry.frame_id, source=source, label=label, category=category)
    left = load_image(root / entry.left_path)
    right = load_image(root / entry.right_path)
    return StereoFrame(
        left, right, frame_id=entry.frame_id, source=source, label=label, category=category
    )
