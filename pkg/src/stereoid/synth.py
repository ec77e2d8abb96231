"""Disparity-correct synthetic stereo frames with analytic depth, plus
labeled fault injection spanning the manifestation taxonomy.

Scenes are flat-shaded vector shapes on a far background plane. The right
eye renders every object shifted left by its disparity d = round(f*b/z),
with painter's-algorithm occlusion, so ground-truth depth, disparity, and
the correct right-eye translation are all analytic. Faults mutate the right
eye only, matching the pipeline's left-to-right translation direction.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from ._filters import gaussian_blur
from .core import (
    Label,
    ManifestationCategory,
    Scope,
    Source,
    StereoFrame,
    TensorImage,
    ValueRange,
)
from .dataset import DatasetManifest, ManifestEntry, save_image, write_manifest
from .depth import DepthConvention, DepthMap, SyntheticOracleBackend, normalize_depth, save_depth_png
from .errors import DataError, ShapeError

SHAPES = ("rectangle", "ellipse", "triangle")

Color = tuple[float, float, float]


@dataclass(frozen=True)
class ObjectSpec:
    shape: str
    color: Color
    center: tuple[float, float]  # (x, y) in left-eye pixels
    size: tuple[float, float]  # (width, height) in pixels
    z: float  # depth in world units

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DataError(f"unknown shape {self.shape!r}")
        if self.z <= 0:
            raise DataError("object depth must be positive")
        if min(self.size) <= 0:
            raise DataError("object size must be positive")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    background_color: Color
    background_z: float
    objects: tuple
    focal: float  # pixels
    baseline: float  # world units
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.width < 2 or self.height < 2:
            raise DataError(f"degenerate canvas {self.width}x{self.height}")
        for obj in self.objects:
            if not 0 < obj.z < self.background_z:
                raise DataError(
                    f"object depth {obj.z} must lie in (0, background {self.background_z})"
                )
            if self.disparity(obj.z) >= self.width / 4:
                raise DataError(
                    f"disparity {self.disparity(obj.z)} exceeds width/4 = {self.width / 4}"
                )

    def disparity(self, z: float) -> int:
        """Whole-pixel horizontal shift of a surface at depth z."""
        return int(round(self.focal * self.baseline / z))


@dataclass(frozen=True)
class FaultSpec:
    category: ManifestationCategory
    magnitude: float = 1.0  # in (0, 1]
    target: Optional[int] = None  # object index for object-level faults
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.magnitude <= 1.0:
            raise DataError(f"magnitude must be in (0, 1], got {self.magnitude}")


# faults that operate on one existing object
_TARGETED = {
    ManifestationCategory.SHADER_ABSENCE,
    ManifestationCategory.MATERIAL_TEXTURE_MISMATCH,
    ManifestationCategory.OBJECT_OMISSION,
    ManifestationCategory.OBJECT_POSITION_DISCREPANCY,
    ManifestationCategory.OBJECT_WARPING,
    ManifestationCategory.LEVEL_OF_DETAIL_INCONSISTENCY,
    ManifestationCategory.PARTIAL_OBJECT_RENDERING,
}


# ---------------------------------------------------------------------------
# rendering


def _shape_mask(shape: str, center: tuple[float, float], size: tuple[float, float],
                height: int, width: int) -> np.ndarray:
    cx, cy = center
    w2, h2 = size[0] / 2.0, size[1] / 2.0
    yy, xx = np.ogrid[:height, :width]
    if shape == "rectangle":
        return (np.abs(xx - cx) <= w2) & (np.abs(yy - cy) <= h2)
    if shape == "ellipse":
        return ((xx - cx) / w2) ** 2 + ((yy - cy) / h2) ** 2 <= 1.0
    # isoceles triangle, apex up
    top = cy - h2
    inside_rows = (yy >= top) & (yy <= cy + h2)
    half_width_at = w2 * (yy - top) / (2.0 * h2)
    return inside_rows & (np.abs(xx - cx) <= half_width_at)


def _render_eye(spec: SceneSpec, eye: str) -> tuple[np.ndarray, np.ndarray]:
    """Returns (3xHxW color array, HxW inverse-depth array)."""
    h, w = spec.height, spec.width
    canvas = np.empty((3, h, w), dtype=np.float32)
    canvas[:] = np.asarray(spec.background_color, dtype=np.float32)[:, None, None]
    inv_depth = np.full((h, w), 1.0 / spec.background_z, dtype=np.float32)
    # far to near so nearer objects overwrite
    for obj in sorted(spec.objects, key=lambda o: -o.z):
        cx = obj.center[0] - (spec.disparity(obj.z) if eye == "right" else 0)
        mask = _shape_mask(obj.shape, (cx, obj.center[1]), obj.size, h, w)
        canvas[:, mask] = np.asarray(obj.color, dtype=np.float32)[:, None]
        inv_depth[mask] = 1.0 / obj.z
    return canvas, inv_depth


def render_scene(spec: SceneSpec) -> tuple[StereoFrame, DepthMap, DepthMap]:
    """Render both eyes plus their analytic (raw inverse) depth maps."""
    left, inv_l = _render_eye(spec, "left")
    right, inv_r = _render_eye(spec, "right")
    frame = StereoFrame(
        TensorImage(left, ValueRange.UNIT),
        TensorImage(right, ValueRange.UNIT),
        source=Source.SYNTHETIC,
        label=Label.NORMAL,
    )
    return (
        frame,
        DepthMap(inv_l, DepthConvention.RELATIVE_INVERSE, normalized=False),
        DepthMap(inv_r, DepthConvention.RELATIVE_INVERSE, normalized=False),
    )


def reference_right(spec: SceneSpec) -> TensorImage:
    """The analytic-disparity reference translation: the clean right-eye render."""
    right, _ = _render_eye(spec, "right")
    return TensorImage(right, ValueRange.UNIT)


def disparity_field(spec: SceneSpec) -> np.ndarray:
    """Per-pixel disparity of the surface visible at each left-eye pixel."""
    h, w = spec.height, spec.width
    disp = np.full((h, w), spec.disparity(spec.background_z), dtype=np.int64)
    for obj in sorted(spec.objects, key=lambda o: -o.z):
        mask = _shape_mask(obj.shape, obj.center, obj.size, h, w)
        disp[mask] = spec.disparity(obj.z)
    return disp


def warp_by_disparity(left: TensorImage, disparity: np.ndarray) -> TensorImage:
    """Forward-warp the left eye by a per-pixel disparity field.

    Pixels are splatted far-to-near (small disparity first). Disocclusion
    holes are filled from the nearest warped pixel on the background side
    (rightward first), so the result matches the true right eye except near
    occlusion boundaries.
    """
    h, w = left.height, left.width
    if disparity.shape != (h, w):
        raise ShapeError("disparity field must match the image size")
    out = np.array(left.data, copy=True)
    written = np.zeros((h, w), dtype=bool)
    for d in np.sort(np.unique(disparity)):
        ys, xcols = np.nonzero(disparity == d)
        xnew = xcols - int(d)
        keep = xnew >= 0
        out[:, ys[keep], xnew[keep]] = left.data[:, ys[keep], xcols[keep]]
        written[ys[keep], xnew[keep]] = True
    cols = np.arange(w)
    right_src = np.where(written, cols, w)
    right_near = np.minimum.accumulate(right_src[:, ::-1], axis=1)[:, ::-1]
    left_src = np.where(written, cols, -1)
    left_near = np.maximum.accumulate(left_src, axis=1)
    ys, xs = np.nonzero(~written)
    src = np.where(right_near[ys, xs] < w, right_near[ys, xs], left_near[ys, xs])
    valid = src >= 0
    out[:, ys[valid], xs[valid]] = out[:, ys[valid], src[valid]]
    return TensorImage(out, left.value_range)


def oracle_backend(spec: SceneSpec, tol: float = 0.02) -> SyntheticOracleBackend:
    """Analytic depth backend for this scene (color -> inverse depth)."""
    table = [(obj.color, 1.0 / obj.z) for obj in sorted(spec.objects, key=lambda o: -o.z)]
    return SyntheticOracleBackend(table, 1.0 / spec.background_z, tol=tol)


# ---------------------------------------------------------------------------
# fault injection


def _issue_frame(frame: StereoFrame, right: np.ndarray, category: ManifestationCategory) -> StereoFrame:
    return StereoFrame(
        frame.left,
        TensorImage(np.clip(right, 0.0, 1.0), ValueRange.UNIT),
        frame_id=frame.frame_id,
        source=Source.SYNTHETIC,
        label=Label.ISSUE,
        category=category,
    )


def _shift_columns(chw: np.ndarray, shift: int) -> np.ndarray:
    out = np.zeros_like(chw)
    if shift > 0:
        out[:, :, shift:] = chw[:, :, :-shift]
    elif shift < 0:
        out[:, :, :shift] = chw[:, :, -shift:]
    else:
        out[:] = chw
    return out


def _require_scene(fault: FaultSpec, scene: Optional[SceneSpec]) -> SceneSpec:
    if scene is None:
        raise DataError(f"{fault.category.value} requires the scene spec to re-render")
    return scene


def _require_target(fault: FaultSpec, scene: SceneSpec) -> int:
    if not scene.objects:
        raise DataError(f"{fault.category.value} needs an object but the scene has none")
    if fault.target is None:
        raise DataError(f"{fault.category.value} needs a target object index")
    if not 0 <= fault.target < len(scene.objects):
        raise DataError(f"target {fault.target} out of range for {len(scene.objects)} objects")
    return fault.target


def _visible_mask(spec: SceneSpec, index: int) -> np.ndarray:
    """Right-eye pixels where the target object is the visible surface."""
    _, inv = _render_eye(spec, "right")
    return np.isclose(inv, 1.0 / spec.objects[index].z, rtol=1e-6)


def inject_fault(
    frame: StereoFrame,
    depths: Optional[tuple[DepthMap, DepthMap]],
    fault: FaultSpec,
    scene: Optional[SceneSpec] = None,
) -> StereoFrame:
    """Apply one manifestation category to the right eye only.

    Object-level categories re-render the right eye from a mutated scene
    spec, so ``scene`` is required for them. A transform whose effect rounds
    to nothing returns the frame unchanged and warns.
    """
    cat = fault.category
    m = fault.magnitude
    h, w = frame.height, frame.width
    right = np.array(frame.right.data, copy=True)
    rng = np.random.default_rng(fault.seed)

    if cat is ManifestationCategory.OTHER:
        raise DataError("the Other category has no defined injection")

    if cat is ManifestationCategory.MONOCULAR_BLINDNESS:
        right[:] = 0.0

    elif cat is ManifestationCategory.VIEW_MISALIGNMENT:
        shift = int(round(m * w / 8.0))
        right = _shift_columns(right, shift)

    elif cat is ManifestationCategory.WARPED_VIEWS:
        from .dataset import _resize

        new_w = max(1, int(round(w * (1.0 - 0.25 * m))))
        squeezed = _resize(frame.right, (new_w, h))
        right[:] = 0.0
        x0 = (w - new_w) // 2
        right[:, :, x0 : x0 + new_w] = squeezed.data

    elif cat is ManifestationCategory.ASYMMETRIC_VIEWING_ANGLES:
        shear = 0.3 * m
        shifts = np.round(shear * (np.arange(h) - h / 2.0)).astype(int)
        out = np.zeros_like(right)
        for s in np.unique(shifts):
            rows = shifts == s
            out[:, rows, :] = _shift_columns(right[:, rows, :], int(s))
        right = out

    elif cat is ManifestationCategory.LIGHTING_SHADOW_DISCREPANCY:
        right *= 1.0 - m / 2.0

    elif cat is ManifestationCategory.POST_PROCESSING_INCONSISTENCY:
        right = gaussian_blur(right, sigma=0.5 + 2.5 * m).astype(np.float32)

    elif cat is ManifestationCategory.PARTICLE_VISUAL_EFFECT_VARIATION:
        n_speckles = max(1, int(round(m * 0.02 * h * w)))
        ys = rng.integers(0, h, n_speckles)
        xs = rng.integers(0, w, n_speckles)
        right[:, ys, xs] = rng.random((3, n_speckles), dtype=np.float32)

    elif cat in (
        ManifestationCategory.SHADER_ABSENCE,
        ManifestationCategory.MATERIAL_TEXTURE_MISMATCH,
    ):
        spec = _require_scene(fault, scene)
        idx = _require_target(fault, spec)
        obj = spec.objects[idx]
        if cat is ManifestationCategory.SHADER_ABSENCE:
            gray = float(np.mean(obj.color))
            new_color = (gray, gray, gray)
        else:
            r, g, b = obj.color
            new_color = (g, b, r)
        objects = list(spec.objects)
        objects[idx] = dataclasses.replace(obj, color=new_color)
        right, _ = _render_eye(dataclasses.replace(spec, objects=tuple(objects)), "right")

    elif cat is ManifestationCategory.OBJECT_OMISSION:
        spec = _require_scene(fault, scene)
        idx = _require_target(fault, spec)
        objects = tuple(o for i, o in enumerate(spec.objects) if i != idx)
        right, _ = _render_eye(dataclasses.replace(spec, objects=objects), "right")

    elif cat is ManifestationCategory.UNILATERAL_OBJECT_RENDERING:
        spec = _require_scene(fault, scene)
        extra = _sample_object(
            rng, spec.width, spec.height, spec,
            avoid_colors=[o.color for o in spec.objects] + [spec.background_color],
        )
        right, _ = _render_eye(
            dataclasses.replace(spec, objects=spec.objects + (extra,)), "right"
        )

    elif cat is ManifestationCategory.OBJECT_POSITION_DISCREPANCY:
        spec = _require_scene(fault, scene)
        idx = _require_target(fault, spec)
        extra_shift = int(round(m * 20.0))
        obj = spec.objects[idx]
        objects = list(spec.objects)
        objects[idx] = dataclasses.replace(
            obj, center=(obj.center[0] - extra_shift, obj.center[1])
        )
        right, _ = _render_eye(dataclasses.replace(spec, objects=tuple(objects)), "right")

    elif cat is ManifestationCategory.OBJECT_WARPING:
        spec = _require_scene(fault, scene)
        idx = _require_target(fault, spec)
        obj = spec.objects[idx]
        new_size = (obj.size[0] * (1.0 + 0.6 * m), max(2.0, obj.size[1] * (1.0 - 0.3 * m)))
        objects = list(spec.objects)
        objects[idx] = dataclasses.replace(obj, size=new_size)
        right, _ = _render_eye(dataclasses.replace(spec, objects=tuple(objects)), "right")

    elif cat is ManifestationCategory.LEVEL_OF_DETAIL_INCONSISTENCY:
        spec = _require_scene(fault, scene)
        idx = _require_target(fault, spec)
        mask = _visible_mask(spec, idx)
        # half-resolution sampling on an offset grid, nearest-upscaled
        coarse = right[:, 1::2, 1::2]
        lod = np.repeat(np.repeat(coarse, 2, axis=1), 2, axis=2)[:, :h, :w]
        if lod.shape[1] < h or lod.shape[2] < w:
            lod = np.pad(lod, ((0, 0), (0, h - lod.shape[1]), (0, w - lod.shape[2])), mode="edge")
        right = np.where(mask[None], lod, right)

    elif cat is ManifestationCategory.PARTIAL_OBJECT_RENDERING:
        spec = _require_scene(fault, scene)
        idx = _require_target(fault, spec)
        mask = _visible_mask(spec, idx)
        lower = np.zeros_like(mask)
        lower[int(spec.objects[idx].center[1]) :, :] = True
        objects = tuple(o for i, o in enumerate(spec.objects) if i != idx)
        without, _ = _render_eye(dataclasses.replace(spec, objects=objects), "right")
        right = np.where((mask & lower)[None], without, right)

    else:  # pragma: no cover - enum is exhaustive
        raise DataError(f"unhandled category {cat}")

    if depths is not None and depths[0].data.shape != (h, w):
        raise ShapeError("depth maps do not match the frame size")
    if np.array_equal(right, frame.right.data):
        warnings.warn(
            f"{cat.value} at magnitude {m} had no effect; frame left unchanged",
            stacklevel=2,
        )
        return frame
    return _issue_frame(frame, right, cat)


# ---------------------------------------------------------------------------
# corpus generation


def _distinct_color(rng: np.random.Generator, avoid: Sequence[Color], lo=0.0, hi=1.0,
                    min_dist: float = 0.25) -> Color:
    for _ in range(200):
        c = tuple(float(v) for v in rng.uniform(lo, hi, 3))
        if all(max(abs(a - b) for a, b in zip(c, other)) >= min_dist for other in avoid):
            return c
    raise DataError("could not sample a distinct color")


def _sample_object(rng: np.random.Generator, width: int, height: int, spec_like,
                   avoid_colors: Sequence[Color]) -> ObjectSpec:
    z = float(rng.uniform(4.0, 12.0))
    # keep sampled depths separated so the depth ordering is unambiguous
    existing = [o.z for o in getattr(spec_like, "objects", ())]
    for _ in range(100):
        if all(abs(z - other) >= 0.3 for other in existing):
            break
        z = float(rng.uniform(4.0, 12.0))
    focal_baseline = getattr(spec_like, "focal", width * 0.375) * getattr(spec_like, "baseline", 1.0)
    disp = int(round(focal_baseline / z))
    ow = float(rng.uniform(0.15, 0.40) * width)
    oh = float(rng.uniform(0.15, 0.40) * height)
    cx = float(rng.uniform(ow / 2 + disp + 1, width - ow / 2 - 1))
    cy = float(rng.uniform(oh / 2 + 1, height - oh / 2 - 1))
    return ObjectSpec(
        shape=SHAPES[int(rng.integers(0, len(SHAPES)))],
        color=_distinct_color(rng, avoid_colors),
        center=(cx, cy),
        size=(ow, oh),
        z=z,
    )


# Scenes draw from a fixed palette over a fixed dark plane, the way real GUI
# scenes reuse a small set of material colors. Geometry (shapes, positions,
# sizes, depths) carries the per-scene variation.
BACKGROUND_COLOR = (0.06, 0.07, 0.10)
OBJECT_PALETTE = (
    (0.85, 0.15, 0.15),
    (0.15, 0.80, 0.20),
    (0.20, 0.30, 0.90),
    (0.90, 0.85, 0.20),
    (0.85, 0.20, 0.80),
    (0.20, 0.85, 0.85),
    (0.95, 0.55, 0.15),
    (0.92, 0.92, 0.92),
)


def default_scene_sampler(rng: np.random.Generator, width: int = 64, height: int = 64) -> SceneSpec:
    """Random 1-4 flat palette-colored shapes, disparities 5-14% of width."""
    spec = SceneSpec(
        width=width,
        height=height,
        background_color=BACKGROUND_COLOR,
        background_z=50.0,
        objects=(),
        focal=width * 0.56,
        baseline=1.0,
        seed=int(rng.integers(0, 2**31)),
    )
    n_objects = int(rng.integers(1, 5))
    palette = [OBJECT_PALETTE[i] for i in rng.permutation(len(OBJECT_PALETTE))]
    objects: list[ObjectSpec] = []
    for k in range(n_objects):
        holder = dataclasses.replace(spec, objects=tuple(objects))
        obj = _sample_object(rng, width, height, holder, avoid_colors=())
        objects.append(dataclasses.replace(obj, color=palette[k]))
    return dataclasses.replace(spec, objects=tuple(objects))


DEFAULT_FAULT_MIX = {
    ManifestationCategory.OBJECT_POSITION_DISCREPANCY: 105,
    ManifestationCategory.OBJECT_OMISSION: 44,
    ManifestationCategory.ASYMMETRIC_VIEWING_ANGLES: 37,
    ManifestationCategory.OBJECT_WARPING: 21,
    ManifestationCategory.MONOCULAR_BLINDNESS: 17,
    ManifestationCategory.UNILATERAL_OBJECT_RENDERING: 7,
    ManifestationCategory.PARTIAL_OBJECT_RENDERING: 6,
}


@dataclass(frozen=True)
class CorpusFrame:
    frame: StereoFrame
    reference: TensorImage  # clean right-eye render
    depth_left: DepthMap  # raw inverse depth
    depth_right: DepthMap
    scene: SceneSpec


def _pick_target(rng: np.random.Generator, spec: SceneSpec,
                 category: ManifestationCategory) -> int:
    """Pick the object a fault applies to.

    Fully or mostly occluded objects make degenerate fault targets, so the
    choice is random among objects with at least 40% of their footprint
    visible in the right eye (falling back to the most visible one).
    Object omission always hits the most prominent object: losing a whole
    visible object is the gross manifestation, and anything smaller is a
    different fault class.
    """
    visible_px = []
    fractions = []
    for i, obj in enumerate(spec.objects):
        footprint = _shape_mask(
            obj.shape,
            (obj.center[0] - spec.disparity(obj.z), obj.center[1]),
            obj.size,
            spec.height,
            spec.width,
        ).sum()
        visible = _visible_mask(spec, i).sum()
        visible_px.append(visible)
        fractions.append(visible / max(1, footprint))
    if category is ManifestationCategory.OBJECT_OMISSION:
        return int(np.argmax(visible_px))
    candidates = [i for i, f in enumerate(fractions) if f >= 0.4]
    if not candidates:
        return int(np.argmax(fractions))
    return int(candidates[int(rng.integers(0, len(candidates)))])


def iter_corpus(
    n_normal: int,
    fault_mix: dict[ManifestationCategory, int],
    base_spec_sampler: Callable[[np.random.Generator], SceneSpec] = default_scene_sampler,
    seed: int = 0,
    magnitude_range: tuple[float, float] = (0.5, 1.0),
) -> Iterator[CorpusFrame]:
    """Yield clean frames then faulted frames, deterministically under seed."""
    if n_normal < 0 or any(c < 0 for c in fault_mix.values()):
        raise DataError("counts must be nonnegative")
    rng = np.random.default_rng(seed)
    for i in range(n_normal):
        spec = base_spec_sampler(rng)
        frame, dl, dr = render_scene(spec)
        frame = dataclasses.replace(frame, frame_id=f"normal_{i:05d}")
        yield CorpusFrame(frame, reference_right(spec), dl, dr, spec)
    for cat in sorted(fault_mix, key=lambda c: c.value):
        for j in range(fault_mix[cat]):
            fid = f"fault_{cat.value}_{j:04d}"
            # a fault can degenerate to a no-op (e.g. target fully occluded);
            # resample the scene until the injection actually bites
            for _ in range(50):
                spec = base_spec_sampler(rng)
                frame, dl, dr = render_scene(spec)
                frame = dataclasses.replace(frame, frame_id=fid)
                target = _pick_target(rng, spec, cat) if cat in _TARGETED else None
                fault = FaultSpec(
                    category=cat,
                    magnitude=float(rng.uniform(*magnitude_range)),
                    target=target,
                    seed=int(rng.integers(0, 2**31)),
                )
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    faulty = inject_fault(frame, (dl, dr), fault, scene=spec)
                if faulty.label is Label.ISSUE:
                    break
            else:
                raise DataError(f"could not produce an effective {cat.value} fault")
            yield CorpusFrame(faulty, reference_right(spec), dl, dr, spec)


def scene_to_json(spec: SceneSpec) -> str:
    obj = dataclasses.asdict(spec)
    return json.dumps(obj, sort_keys=True)


def scene_from_json(text: str) -> SceneSpec:
    obj = json.loads(text)
    objects = tuple(
        ObjectSpec(
            shape=o["shape"],
            color=tuple(o["color"]),
            center=tuple(o["center"]),
            size=tuple(o["size"]),
            z=o["z"],
        )
        for o in obj["objects"]
    )
    return SceneSpec(
        width=obj["width"],
        height=obj["height"],
        background_color=tuple(obj["background_color"]),
        background_z=obj["background_z"],
        objects=objects,
        focal=obj["focal"],
        baseline=obj["baseline"],
        seed=obj.get("seed", 0),
    )


def generate_corpus(
    out_dir: str | Path,
    n_normal: int,
    fault_mix: Optional[dict[ManifestationCategory, int]] = None,
    base_spec_sampler: Callable[[np.random.Generator], SceneSpec] = default_scene_sampler,
    seed: int = 0,
    write_depth: bool = True,
) -> DatasetManifest:
    """Render a labeled corpus to disk: left/right/ref PNGs, scene JSONs,
    optional analytic depth caches, and the manifest."""
    out_dir = Path(out_dir)
    if fault_mix is None:
        fault_mix = DEFAULT_FAULT_MIX
    for sub in ("left", "right", "ref", "scenes") + (("depth",) if write_depth else ()):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    entries = []
    try:
        for cf in iter_corpus(n_normal, fault_mix, base_spec_sampler, seed):
            fid = cf.frame.frame_id
            save_image(cf.frame.left, out_dir / "left" / f"{fid}.png")
            save_image(cf.frame.right, out_dir / "right" / f"{fid}.png")
            save_image(cf.reference, out_dir / "ref" / f"{fid}.png")
            (out_dir / "scenes" / f"{fid}.json").write_text(scene_to_json(cf.scene) + "\n")
            if write_depth:
                save_depth_png(normalize_depth(cf.depth_left), out_dir / "depth" / f"{fid}.left.png")
                save_depth_png(normalize_depth(cf.depth_right), out_dir / "depth" / f"{fid}.right.png")
            entries.append(
                ManifestEntry(
                    frame_id=fid,
                    split="test",
                    left_path=f"left/{fid}.png",
                    right_path=f"right/{fid}.png",
                    label=int(cf.frame.label),
                    category=None if cf.frame.category is None else cf.frame.category.value,
                )
            )
    except OSError as exc:
        raise DataError(f"corpus write failed under {out_dir}: {exc}") from exc
    manifest = DatasetManifest(entries=entries, seed=seed, ratios=(0.0, 0.0, 1.0))
    write_manifest(manifest, out_dir / "manifest.ndjson")
    return manifest
