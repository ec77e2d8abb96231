"""stereoid: unsupervised detection of stereoscopic visual inconsistencies
in VR stereo screenshots.

The pipeline synthesizes the right-eye image from the left-eye image with a
depth-aware conditional adversarial translator, measures the discrepancy
against the real right-eye image (L1, L2, SSIM, weighted aggregate), and
flags outliers with an isolation forest.
"""

from . import core, dataset, depth, detector, distance, evaluate, painter, synth
from .core import (
    Label,
    ManifestationCategory,
    Scope,
    Source,
    StereoFrame,
    TensorImage,
    ValueRange,
    concat_channels,
    convert_range,
)

__version__ = "0.1.0"

__all__ = [
    "core",
    "dataset",
    "depth",
    "detector",
    "distance",
    "evaluate",
    "painter",
    "synth",
    "Label",
    "ManifestationCategory",
    "Scope",
    "Source",
    "StereoFrame",
    "TensorImage",
    "ValueRange",
    "concat_channels",
    "convert_range",
]
