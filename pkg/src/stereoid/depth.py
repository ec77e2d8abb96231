"""Per-eye relative depth maps that condition the translator.

Two backends produce raw relative depth (larger = closer): a pretrained
monocular estimator consumed as a TorchScript file, and an analytic oracle
for flat-shaded synthetic scenes that maps pixel colors back to the inverse
depth they were rendered with. Raw maps are min-max normalized per image
before entering the generator.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .core import TensorImage, ValueRange
from .errors import BackendError, ShapeError

DEPTH_CACHE_ENV = "STEREOID_CACHE"
_DEPTH_SCALE = 65535  # 16-bit PNG cache quantization


class DepthConvention(str, Enum):
    RELATIVE_INVERSE = "relative_inverse"  # larger value = closer surface
    METRIC = "metric"


@dataclass(frozen=True)
class DepthMap:
    data: np.ndarray
    convention: DepthConvention = DepthConvention.RELATIVE_INVERSE
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64 if np.asarray(self.data).dtype == np.float64 else np.float32)
        if arr.ndim != 2:
            raise ShapeError(f"depth map must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("depth map contains non-finite values")
        if self.normalized and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("normalized depth must lie in [0, 1]")
        arr = np.array(arr, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "convention", DepthConvention(self.convention))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def normalize_depth(depth: DepthMap) -> DepthMap:
    """Per-image min-max normalization to [0, 1]; constant maps become 0.5."""
    lo, hi = float(depth.data.min()), float(depth.data.max())
    if hi == lo:
        data = np.full_like(depth.data, 0.5)
    else:
        data = (depth.data - lo) / (hi - lo)
    return DepthMap(data, convention=depth.convention, normalized=True)


class PretrainedDepthBackend:
    """Relative-depth inference through a serialized TorchScript module.

    The module must map a (1, 3, S, S) unit-range batch to an (S, S) depth
    plane (leading singleton dims are squeezed). Inputs are resized to the
    declared input size and the prediction is resized back.
    """

    kind = "pretrained_model"

    def __init__(self, model_path: str | Path, input_size: int = 512):
        import torch

        self.model_path = Path(model_path)
        self.input_size = int(input_size)
        if not self.model_path.is_file():
            raise BackendError(f"depth model file not readable: {self.model_path}")
        try:
            self._model = torch.jit.load(str(self.model_path), map_location="cpu")
            self._model.eval()
        except Exception as exc:
            raise BackendError(f"cannot load depth model {self.model_path}: {exc}") from exc

    def infer(self, image: TensorImage) -> np.ndarray:
        import torch

        from .dataset import _resize

        h, w = image.height, image.width
        resized = _resize(image, (self.input_size, self.input_size))
        batch = torch.from_numpy(np.array(resized.data, dtype=np.float32))[None]
        with torch.no_grad():
            out = self._model(batch)
        arr = np.asarray(out.detach().cpu(), dtype=np.float32).squeeze()
        if arr.ndim != 2:
            raise BackendError(f"depth model returned shape {arr.shape}, expected 2-D")
        plane = np.asarray(
            Image.fromarray(arr, mode="F").resize((w, h), Image.BILINEAR), dtype=np.float32
        )
        return plane


class SyntheticOracleBackend:
    """Analytic depth for flat-shaded renders: color -> inverse depth lookup.

    Built from a scene's (color, 1/z) table (see synth.oracle_backend).
    Pixels that match no table color fall back to the background depth.
    """

    kind = "synthetic_oracle"

    def __init__(self, color_inv_depths: Sequence[tuple[tuple[float, float, float], float]],
                 background_inv_depth: float, tol: float = 1e-3):
        if not color_inv_depths and background_inv_depth <= 0:
            raise BackendError("oracle needs at least a background depth")
        self._table = [(np.asarray(c, dtype=np.float64), float(iz)) for c, iz in color_inv_depths]
        self._bg = float(background_inv_depth)
        self._tol = float(tol)

    def infer(self, image: TensorImage) -> np.ndarray:
        pixels = image.data.astype(np.float64)
        out = np.full((image.height, image.width), self._bg, dtype=np.float64)
        for color, inv_z in self._table:
            mask = (np.abs(pixels - color[:, None, None]) <= self._tol).all(axis=0)
            out[mask] = inv_z
        return out.astype(np.float32)


def estimate_depth(backend, image: TensorImage) -> DepthMap:
    """Run a backend on one monocular view and min-max normalize the result."""
    if image.channels != 3:
        raise ShapeError(f"depth estimation expects a 3-channel image, got {image.channels}")
    if image.value_range is not ValueRange.UNIT:
        raise ValueError("depth estimation expects a unit-range image")
    try:
        raw = backend.infer(image)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"depth backend {getattr(backend, 'kind', backend)!r} failed: {exc}") from exc
    raw = np.asarray(raw)
    if raw.shape != (image.height, image.width):
        raise BackendError(
            f"backend returned shape {raw.shape}, expected {(image.height, image.width)}"
        )
    return normalize_depth(DepthMap(raw, DepthConvention.RELATIVE_INVERSE, normalized=False))


def depth_to_context(depth: DepthMap) -> TensorImage:
    """Replicate a normalized depth plane into the 3-channel generator context."""
    if not depth.normalized:
        raise ValueError("depth must be normalized before use as generator context")
    data = np.repeat(depth.data[None, :, :], 3, axis=0)
    return TensorImage(data, ValueRange.UNIT)


# ---------------------------------------------------------------------------
# 16-bit PNG depth cache


def save_depth_png(depth: DepthMap, path: str | Path) -> None:
    if not depth.normalized:
        raise ValueError("only normalized depth maps are cached")
    arr = np.round(depth.data.astype(np.float64) * _DEPTH_SCALE).astype(np.uint16)
    Image.fromarray(arr).save(path)


def load_depth_png(path: str | Path) -> DepthMap:
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.dtype != np.uint16:
        arr = arr.astype(np.uint16)
    return DepthMap(arr.astype(np.float32) / _DEPTH_SCALE,
                    DepthConvention.RELATIVE_INVERSE, normalized=True)


def resolve_cache_dir(explicit: Optional[str | Path] = None) -> Optional[Path]:
    """Explicit directory, else the STEREOID_CACHE environment variable."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(DEPTH_CACHE_ENV)
    return Path(env) if env else None


class DepthCache:
    """Per-frame depth-map store keyed by (frame_id, eye)."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, frame_id: str, eye: str) -> Path:
        return self.directory / f"{frame_id}.{eye}.png"

    def get(self, frame_id: str, eye: str) -> Optional[DepthMap]:
        path = self._path(frame_id, eye)
        return load_depth_png(path) if path.is_file() else None

    def put(self, frame_id: str, eye: str, depth: DepthMap) -> None:
        save_depth_png(depth, self._path(frame_id, eye))

    def get_or_compute(self, backend, image: TensorImage, frame_id: str, eye: str) -> DepthMap:
        cached = self.get(frame_id, eye)
        if cached is not None:
            return cached
        depth = estimate_depth(backend, image)
        self.put(frame_id, eye, depth)
        return depth
