"""Foundational image and frame types shared by the whole pipeline.

Images are dense float arrays in channels x height x width layout, tagged
with the value range they live in: "unit" [0, 1] for storage and metric
computation, "signed" [-1, 1] for everything that passes through the
translator networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional, Sequence

import numpy as np

from .errors import ShapeError

# Channel counts the pipeline itself produces: mono depth, RGB, the 9-channel
# generator condition and the 12-channel critic input. Not enforced on the
# type, since channel concatenation composes freely.
PIPELINE_CHANNELS = (1, 3, 9, 12)

_RANGE_BOUNDS = {"unit": (0.0, 1.0), "signed": (-1.0, 1.0)}


class ValueRange(str, Enum):
    UNIT = "unit"
    SIGNED = "signed"

    @property
    def bounds(self) -> tuple[float, float]:
        return _RANGE_BOUNDS[self.value]


class Source(str, Enum):
    CAPTURED = "captured"
    SYNTHETIC = "synthetic"


class Label(IntEnum):
    """Frame-level ground truth; -1 flags an SVI issue, 1 a normal frame."""

    ISSUE = -1
    NORMAL = 1


class Scope(str, Enum):
    VIEW_LEVEL = "view_level"
    OBJECT_LEVEL = "object_level"


class ManifestationCategory(str, Enum):
    """The 16-way vocabulary of stereo-inconsistency manifestations."""

    MONOCULAR_BLINDNESS = "MonocularBlindness"
    VIEW_MISALIGNMENT = "ViewMisalignment"
    WARPED_VIEWS = "WarpedViews"
    ASYMMETRIC_VIEWING_ANGLES = "AsymmetricViewingAngles"
    LIGHTING_SHADOW_DISCREPANCY = "LightingShadowDiscrepancy"
    SHADER_ABSENCE = "ShaderAbsence"
    MATERIAL_TEXTURE_MISMATCH = "MaterialTextureMismatch"
    POST_PROCESSING_INCONSISTENCY = "PostProcessingInconsistency"
    PARTICLE_VISUAL_EFFECT_VARIATION = "ParticleVisualEffectVariation"
    OBJECT_OMISSION = "ObjectOmission"
    UNILATERAL_OBJECT_RENDERING = "UnilateralObjectRendering"
    OBJECT_POSITION_DISCREPANCY = "ObjectPositionDiscrepancy"
    OBJECT_WARPING = "ObjectWarping"
    LEVEL_OF_DETAIL_INCONSISTENCY = "LevelOfDetailInconsistency"
    PARTIAL_OBJECT_RENDERING = "PartialObjectRendering"
    OTHER = "Other"

    @property
    def scope(self) -> Optional[Scope]:
        """View-level for the first four categories, object-level otherwise.

        OTHER may be either, so it reports None.
        """
        if self is ManifestationCategory.OTHER:
            return None
        view_level = (
            ManifestationCategory.MONOCULAR_BLINDNESS,
            ManifestationCategory.VIEW_MISALIGNMENT,
            ManifestationCategory.WARPED_VIEWS,
            ManifestationCategory.ASYMMETRIC_VIEWING_ANGLES,
        )
        return Scope.VIEW_LEVEL if self in view_level else Scope.OBJECT_LEVEL


VIEW_LEVEL_CATEGORIES = tuple(
    c for c in ManifestationCategory if c.scope is Scope.VIEW_LEVEL
)
OBJECT_LEVEL_CATEGORIES = tuple(
    c for c in ManifestationCategory if c.scope is Scope.OBJECT_LEVEL
)


@dataclass(frozen=True)
class TensorImage:
    """An immutable C x H x W float image with a declared value range."""

    data: np.ndarray
    value_range: ValueRange = ValueRange.UNIT

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ShapeError(f"image must be 3-D (C,H,W), got shape {arr.shape}")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        c, h, w = arr.shape
        if c < 1 or h < 1 or w < 1:
            raise ShapeError(f"degenerate image shape {arr.shape}")
        vr = ValueRange(self.value_range)
        lo, hi = vr.bounds
        if not np.isfinite(arr).all():
            raise ValueError("image contains non-finite values")
        amin, amax = float(arr.min()), float(arr.max())
        if amin < lo or amax > hi:
            raise ValueError(
                f"values [{amin:.6g}, {amax:.6g}] outside declared {vr.value} "
                f"range [{lo}, {hi}]"
            )
        arr = np.array(arr, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "value_range", vr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class StereoFrame:
    """A paired left/right-eye image with provenance metadata."""

    left: TensorImage
    right: TensorImage
    frame_id: str = ""
    source: Source = Source.CAPTURED
    label: Optional[Label] = None  # None = unlabeled
    category: Optional[ManifestationCategory] = None

    def __post_init__(self):
        if self.left.channels != 3 or self.right.channels != 3:
            raise ShapeError("stereo frames hold 3-channel eye images")
        if (self.left.height, self.left.width) != (self.right.height, self.right.width):
            raise ShapeError(
                f"eye sizes differ: left {self.left.height}x{self.left.width}, "
                f"right {self.right.height}x{self.right.width}"
            )
        if self.source is Source.SYNTHETIC and self.label is None:
            raise ValueError("synthetic frames must carry a label")

    @property
    def height(self) -> int:
        return self.left.height

    @property
    def width(self) -> int:
        return self.left.width


def concat_channels(images: Sequence[TensorImage]) -> TensorImage:
    """Stack images along the channel axis, preserving list order."""
    if not images:
        raise ShapeError("concat_channels needs at least one image")
    first = images[0]
    for img in images[1:]:
        if (img.height, img.width) != (first.height, first.width):
            raise ShapeError(
                f"spatial mismatch: {img.height}x{img.width} vs "
                f"{first.height}x{first.width}"
            )
        if img.value_range is not first.value_range:
            raise ShapeError("cannot concatenate images with mixed value ranges")
    data = np.concatenate([img.data for img in images], axis=0)
    return TensorImage(data, first.value_range)


def convert_range(image: TensorImage, target: ValueRange) -> TensorImage:
    """Affine map between unit [0,1] and signed [-1,1] ranges."""
    target = ValueRange(target)
    if image.value_range is target:
        return image
    if target is ValueRange.SIGNED:
        data = image.data * 2.0 - 1.0
    else:
        data = (image.data + 1.0) / 2.0
    # float arithmetic can overshoot the bounds by one ulp
    lo, hi = target.bounds
    return TensorImage(np.clip(data, lo, hi), target)
